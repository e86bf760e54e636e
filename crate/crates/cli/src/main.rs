mod bench;
mod cli;
mod config;
mod corpus;
mod dump;
mod error;
mod score;
mod songs;

use clap::error::ErrorKind;
use clap::Parser;
use timbre_shape::synth::CoverTransform;

use cli::{Cli, Command};
use error::{CliResult, EXIT_USAGE};

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Score { song_a, song_b, common } => {
            let cfg = config::resolve(&common)?;
            config::init_threads(&common)?;
            score::run(&song_a, &song_b, &cfg, common.cache_dir.as_deref())
        }
        Command::Benchmark { set_a, set_b, truth, out, sweep, common } => {
            let cfg = config::resolve(&common)?;
            config::init_threads(&common)?;
            let args = bench::BenchArgs {
                set_a: &set_a,
                set_b: &set_b,
                truth: &truth,
                out: &out,
                sweep,
                cache_dir: common.cache_dir.as_deref(),
            };
            bench::run(&args, &cfg)
        }
        Command::SynthCorpus {
            out,
            songs,
            seed,
            tempo_factor,
            transpose,
            timbre,
            gain_factor,
            intro_beats,
            common,
        } => {
            let cfg = config::resolve(&common)?;
            config::init_threads(&common)?;
            let args = corpus::CorpusArgs {
                out: &out,
                songs,
                seed,
                transform: CoverTransform {
                    tempo_factor,
                    transpose_semitones: transpose,
                    new_timbre: corpus::timbre(timbre),
                    gain_factor,
                    prepend_intro_beats: intro_beats,
                },
                sample_rate: cfg.sample_rate,
            };
            corpus::run(&args)
        }
        Command::Dump { what, song, song_b, block, bias, out, common } => {
            let cfg = config::resolve(&common)?;
            config::init_threads(&common)?;
            let args = dump::DumpArgs {
                what,
                song: &song,
                song_b: song_b.as_deref(),
                block,
                bias,
                out: &out,
                cache_dir: common.cache_dir.as_deref(),
            };
            dump::run(&args, &cfg)
        }
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.code
            }
        },
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            }
        }
    };
    std::process::exit(code);
}
