use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("wav decode error: {0}")]
    Wav(#[from] hound::Error),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("zero-length audio")]
    EmptyAudio,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal shorter than one frame ({len} samples < {frame} samples)")]
    SignalTooShort { len: usize, frame: usize },

    #[error("window too short ({0} samples, need at least 64)")]
    WindowTooShort(usize),

    #[error("need at least {needed} beat intervals, got {got}")]
    TooFewBeats { needed: usize, got: usize },

    #[error("block shorter than one window ({block} < {window} samples)")]
    BlockTooShort { block: usize, window: usize },

    #[error("degenerate block: all points identical")]
    DegenerateBlock,

    #[error("song too short: no tempo bias produced enough beats")]
    SongTooShort,

    #[error("no usable tempo-bias pair")]
    NoUsablePair,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("feature cache: {0}")]
    Cache(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
