use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;
use timbre_shape::export::score_matrix_csv;
use timbre_shape::pipeline::{benchmark, parameter_sweep, SweepGrid};
use timbre_shape::{PipelineConfig, SongAnalysis, SongFeatures};

use crate::error::{CliError, CliResult};
use crate::songs;

pub struct BenchArgs<'a> {
    pub set_a: &'a Path,
    pub set_b: &'a Path,
    pub truth: &'a Path,
    pub out: &'a Path,
    pub sweep: bool,
    pub cache_dir: Option<&'a Path>,
}

pub fn run(args: &BenchArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let list_a = songs::read_manifest(args.set_a)?;
    let list_b = songs::read_manifest(args.set_b)?;
    let truth = songs::read_truth(args.truth, list_a.len(), list_b.len())?;
    fs::create_dir_all(args.out).map_err(|e| CliError::from(e).context(args.out.display()))?;

    // The sweep needs the full analyses; without it, features may come from the cache.
    let mut analyses: Option<(Vec<SongAnalysis>, Vec<SongAnalysis>)> = None;
    let (fa, fb) = if args.sweep {
        let load = |list: &[std::path::PathBuf]| -> CliResult<Vec<SongAnalysis>> {
            list.par_iter().map(|p| songs::analyse(p, cfg)).collect()
        };
        let (mut a, mut b) = (load(&list_a)?, load(&list_b)?);
        let fa = default_features(&mut a, &list_a, cfg)?;
        let fb = default_features(&mut b, &list_b, cfg)?;
        analyses = Some((a, b));
        (fa, fb)
    } else {
        let cache = songs::open_cache(args.cache_dir, cfg)?;
        (
            songs::features_all(&list_a, cfg, cache.as_ref())?,
            songs::features_all(&list_b, cfg, cache.as_ref())?,
        )
    };

    let report = benchmark(&fa, &fb, &truth, cfg)?;
    write(args.out, "scores.csv", score_matrix_csv(&report.scores))?;
    let files_a: Vec<String> = list_a.iter().map(|p| p.display().to_string()).collect();
    let files_b: Vec<String> = list_b.iter().map(|p| p.display().to_string()).collect();
    let doc = json!({
        "config": cfg,
        "setA": files_a,
        "setB": files_b,
        "report": report,
    });
    write(args.out, "report.json", serde_json::to_string_pretty(&doc)? + "\n")?;
    println!("{}/{}", report.correct, report.total);
    println!("mean rank: {:.3}", report.mean_rank);

    if let Some((mut a, mut b)) = analyses {
        let sweep = parameter_sweep(&mut a, &mut b, &truth, &SweepGrid::default(), cfg)?;
        print!("{}", sweep.to_table());
        write(args.out, "sweep.json", serde_json::to_string_pretty(&sweep)? + "\n")?;
    }
    Ok(())
}

fn default_features(
    songs: &mut [SongAnalysis],
    paths: &[std::path::PathBuf],
    cfg: &PipelineConfig,
) -> CliResult<Vec<SongFeatures>> {
    songs
        .par_iter_mut()
        .zip(paths)
        .map(|(s, p)| {
            s.features(cfg.beats_per_block, cfg.ssm_dim)
                .map_err(|e| CliError::from(e).context(p.display()))
        })
        .collect()
}

pub fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::from(e).context(path.display()))
}
