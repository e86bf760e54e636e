use std::path::Path;

use timbre_shape::synth::{write_corpus, CoverTransform, Timbre};

use crate::cli::TimbreArg;
use crate::error::{CliError, CliResult};

pub struct CorpusArgs<'a> {
    pub out: &'a Path,
    pub songs: usize,
    pub seed: u64,
    pub transform: CoverTransform,
    pub sample_rate: u32,
}

pub fn timbre(arg: TimbreArg) -> Option<Timbre> {
    match arg {
        TimbreArg::Keep => None,
        TimbreArg::Sine => Some(Timbre::Sine),
        TimbreArg::Sawtooth => Some(Timbre::Sawtooth),
        TimbreArg::Square => Some(Timbre::Square),
        TimbreArg::NoiseBurst => Some(Timbre::NoiseBurst),
    }
}

pub fn run(args: &CorpusArgs) -> CliResult<()> {
    if args.songs == 0 {
        return Err(CliError::usage("--songs must be at least 1"));
    }
    let m = write_corpus(args.out, args.songs, args.seed, &args.transform, args.sample_rate)
        .map_err(|e| CliError::from(e).context(args.out.display()))?;
    println!("wrote {} pairs to {}", m.songs.len(), args.out.display());
    Ok(())
}
