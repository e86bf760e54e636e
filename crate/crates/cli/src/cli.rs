use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tshape", version, about = "Cover song scoring from timbral shape sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score two recordings against each other.
    Score {
        song_a: PathBuf,
        song_b: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score every song in set A against every song in set B.
    Benchmark {
        /// Text file listing the WAV files of set A, one per line.
        set_a: PathBuf,
        /// Text file listing the WAV files of set B, one per line.
        set_b: PathBuf,
        /// JSON array: entry i is the index in B of the cover of A[i].
        truth: PathBuf,
        /// Directory for scores.csv and report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also run the kappa x B x d parameter grid.
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render a synthetic corpus of songs and covers.
    SynthCorpus {
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        songs: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 1.25)]
        tempo_factor: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        transpose: f64,
        #[arg(long, value_enum, default_value_t = TimbreArg::Sawtooth)]
        timbre: TimbreArg,
        #[arg(long, default_value_t = 0.5)]
        gain_factor: f64,
        #[arg(long, default_value_t = 0)]
        intro_beats: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write intermediate results as CSV or PGM files.
    Dump {
        #[arg(value_enum)]
        what: DumpKind,
        song: PathBuf,
        /// Second song, required for csm and sw.
        song_b: Option<PathBuf>,
        /// Block index (pca, ssm).
        #[arg(long)]
        block: Option<usize>,
        /// Tempo bias to use; must be one of the configured biases.
        #[arg(long)]
        bias: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    Beats,
    Pca,
    Ssm,
    Csm,
    Sw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimbreArg {
    Keep,
    Sine,
    Sawtooth,
    Square,
    NoiseBurst,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Fraction of mutual nearest neighbours kept in the binary CSM.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Beats per block.
    #[arg(long)]
    pub beats: Option<usize>,
    /// SSM image side length.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated tempo biases in BPM.
    #[arg(long, value_delimiter = ',')]
    pub biases: Option<Vec<f64>>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// TOML file with pipeline settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for cached song features.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}
