//! Intermediate results as CSV and PGM files.

use std::fs;
use std::path::{Path, PathBuf};

use timbre_shape::align::score_table;
use timbre_shape::embed::pca3_project;
use timbre_shape::export::{beats_csv, matrix_csv, pca_csv, pgm, pgm_autoscale, ssm_pgm};
use timbre_shape::pipeline::{pair_csms, score_csms};
use timbre_shape::simmatch::CrossSimilarityMatrix;
use timbre_shape::{binarize_mutual_knn, BeatTrack, PipelineConfig, SongAnalysis, SongFeatures};

use crate::bench::write;
use crate::cli::DumpKind;
use crate::error::{CliError, CliResult, EXIT_DEGENERATE};
use crate::songs;

pub struct DumpArgs<'a> {
    pub what: DumpKind,
    pub song: &'a Path,
    pub song_b: Option<&'a Path>,
    pub block: Option<usize>,
    pub bias: Option<f64>,
    pub out: &'a Path,
    pub cache_dir: Option<&'a Path>,
}

pub fn run(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<()> {
    if let Some(b) = args.bias {
        if !cfg.tempo_biases.contains(&b) {
            return Err(CliError::usage(format!(
                "--bias {b} is not one of the configured biases {:?}",
                cfg.tempo_biases
            )));
        }
    }
    let needs_pair = matches!(args.what, DumpKind::Csm | DumpKind::Sw);
    if needs_pair && args.song_b.is_none() {
        return Err(CliError::usage("csm and sw need two songs"));
    }
    if !needs_pair && args.song_b.is_some() {
        return Err(CliError::usage("only csm and sw take a second song"));
    }
    fs::create_dir_all(args.out).map_err(|e| CliError::from(e).context(args.out.display()))?;
    let written = match args.what {
        DumpKind::Beats => beats(args, cfg)?,
        DumpKind::Pca => pca(args, cfg)?,
        DumpKind::Ssm => ssm(args, cfg)?,
        DumpKind::Csm | DumpKind::Sw => pair(args, cfg)?,
    };
    for f in written {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn save(dir: &Path, name: String, contents: impl AsRef<[u8]>, written: &mut Vec<PathBuf>) -> CliResult<()> {
    write(dir, &name, contents)?;
    written.push(dir.join(name));
    Ok(())
}

fn bias_index(cfg: &PipelineConfig, bias: f64) -> usize {
    cfg.tempo_biases.iter().position(|&b| b == bias).expect("bias was checked")
}

/// The requested bias, or the one giving the most blocks (first on ties).
fn choose_bias(args: &DumpArgs, cfg: &PipelineConfig, counts: impl Iterator<Item = usize>) -> CliResult<usize> {
    if let Some(b) = args.bias {
        return Ok(bias_index(cfg, b));
    }
    let counts: Vec<usize> = counts.collect();
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return Err(CliError::new(EXIT_DEGENERATE, "no tempo bias yields a full block"));
    }
    Ok(counts.iter().position(|&c| c == best).unwrap())
}

fn block_index(args: &DumpArgs, n_blocks: usize) -> CliResult<usize> {
    let k = args.block.unwrap_or(0);
    if k >= n_blocks {
        return Err(CliError::usage(format!("--block {k} out of range, song has {n_blocks} blocks")));
    }
    Ok(k)
}

fn beats(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    let analysis = songs::analyse(args.song, cfg)?;
    let tracks: Vec<BeatTrack> = analysis
        .beat_tracks()
        .filter(|t| args.bias.is_none_or(|b| t.bias_bpm == b))
        .cloned()
        .collect();
    let mut written = Vec::new();
    save(args.out, "beats.csv".into(), beats_csv(&tracks), &mut written)?;
    Ok(written)
}

fn block_counts(analysis: &SongAnalysis, cfg: &PipelineConfig) -> Vec<usize> {
    (0..cfg.tempo_biases.len())
        .map(|i| analysis.blocks(i, cfg.beats_per_block).map(|b| b.len()).unwrap_or(0))
        .collect()
}

fn pca(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    let mut analysis = songs::analyse(args.song, cfg)?;
    let bi = choose_bias(args, cfg, block_counts(&analysis, cfg).into_iter())?;
    let blocks = analysis.blocks(bi, cfg.beats_per_block)?;
    let k = block_index(args, blocks.len())?;
    let cloud = analysis.point_cloud(bi, &blocks[k])?;
    let coords = pca3_project(&cloud)?;
    let mut written = Vec::new();
    let name = format!("pca_{}bpm_block{k:04}.csv", cfg.tempo_biases[bi]);
    save(args.out, name, pca_csv(&coords), &mut written)?;
    Ok(written)
}

fn ssm(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    let mut analysis = songs::analyse(args.song, cfg)?;
    let bi = choose_bias(args, cfg, block_counts(&analysis, cfg).into_iter())?;
    let features = analysis.features(cfg.beats_per_block, cfg.ssm_dim)?;
    let f = &features.biases[bi];
    let wanted: Vec<usize> = match args.block {
        Some(_) => vec![block_index(args, f.n_blocks)?],
        None => (0..f.n_blocks).collect(),
    };
    let mut written = Vec::new();
    let mut next = 0;
    for k in 0..f.n_blocks {
        if f.skipped.contains(&k) {
            if args.block == Some(k) {
                return Err(CliError::new(EXIT_DEGENERATE, format!("block {k} is degenerate")));
            }
            continue;
        }
        if wanted.contains(&k) {
            let img = &f.ssms[next];
            let name = format!("ssm_{}bpm_block{k:04}.pgm", f.bias_bpm);
            save(args.out, name, ssm_pgm(img.d(), img.pixels()), &mut written)?;
        }
        next += 1;
    }
    Ok(written)
}

/// Features of both songs, the chosen bias combination and its CSM.
fn pair_csm(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<(f64, f64, CrossSimilarityMatrix)> {
    let cache = songs::open_cache(args.cache_dir, cfg)?;
    let fa = songs::features(args.song, cfg, cache.as_ref())?;
    let fb = songs::features(args.song_b.expect("checked"), cfg, cache.as_ref())?;
    let mut csms = pair_csms(&fa, &fb)?;
    let pick = match args.bias {
        Some(b) => csms
            .iter()
            .position(|c| c.0 == b && c.1 == b)
            .ok_or_else(|| unusable(b, &fa, &fb))?,
        None => {
            let scores = score_csms(&csms, cfg.kappa, cfg.normalize_score)?;
            let best = scores.score;
            scores.combinations.iter().position(|c| c.score == best).unwrap()
        }
    };
    let chosen = csms.swap_remove(pick);
    eprintln!("bias combination: {} x {} BPM", chosen.0, chosen.1);
    Ok(chosen)
}

fn unusable(b: f64, fa: &SongFeatures, fb: &SongFeatures) -> CliError {
    let ok = |f: &SongFeatures| f.usable().any(|x| x.bias_bpm == b);
    let which = if ok(fa) { "second" } else if ok(fb) { "first" } else { "either" };
    CliError::new(EXIT_DEGENERATE, format!("bias {b} gives no usable blocks for the {which} song"))
}

fn pair(args: &DumpArgs, cfg: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    let (_, _, csm) = pair_csm(args, cfg)?;
    let bits = binarize_mutual_knn(&csm, cfg.kappa)?;
    let (n, m) = (csm.rows(), csm.cols());
    let mut written = Vec::new();
    match args.what {
        DumpKind::Csm => {
            let b: Vec<f64> = (0..n * m).map(|k| bits.get(k / m, k % m) as u8 as f64).collect();
            save(args.out, "csm.csv".into(), matrix_csv(n, m, csm.values()), &mut written)?;
            save(args.out, "csm.pgm".into(), pgm_autoscale(n, m, csm.values()), &mut written)?;
            save(args.out, "csm_binary.csv".into(), matrix_csv(n, m, &b), &mut written)?;
            save(args.out, "csm_binary.pgm".into(), pgm(n, m, &b, 0.0, 1.0), &mut written)?;
        }
        _ => {
            let table = score_table(&bits)?;
            let score = table.values().iter().cloned().fold(0.0, f64::max);
            let (r, c) = (table.rows(), table.cols());
            save(args.out, "sw.csv".into(), matrix_csv(r, c, table.values()), &mut written)?;
            save(args.out, "sw.pgm".into(), pgm_autoscale(r, c, table.values()), &mut written)?;
            println!("score: {score}");
        }
    }
    Ok(written)
}
