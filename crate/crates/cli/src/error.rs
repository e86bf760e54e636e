use std::fmt;

use timbre_shape::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_MANIFEST: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn manifest(message: impl Into<String>) -> Self {
        Self::new(EXIT_MANIFEST, message)
    }

    /// Prefix the message with the file or step it concerns.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Wav(_) | Error::UnsupportedFormat(_) | Error::EmptyAudio => EXIT_IO,
        Error::Cache(_) | Error::Json(_) => EXIT_IO,
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Manifest(_) => EXIT_MANIFEST,
        Error::SignalTooShort { .. }
        | Error::WindowTooShort(_)
        | Error::TooFewBeats { .. }
        | Error::BlockTooShort { .. }
        | Error::DegenerateBlock
        | Error::SongTooShort
        | Error::NoUsablePair
        | Error::DimensionMismatch(_)
        | Error::Empty(_) => EXIT_DEGENERATE,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
