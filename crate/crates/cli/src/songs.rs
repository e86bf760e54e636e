//! Loading songs, manifests and ground truth.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use timbre_shape::cache::{sha256_file, FeatureCache};
use timbre_shape::pipeline::validate_truth;
use timbre_shape::{load_at_rate, AudioSignal, PipelineConfig, SongAnalysis, SongFeatures};

use crate::error::{CliError, CliResult};

pub fn load_signal(path: &Path, cfg: &PipelineConfig) -> CliResult<AudioSignal> {
    load_at_rate(path, cfg.sample_rate).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn analyse(path: &Path, cfg: &PipelineConfig) -> CliResult<SongAnalysis> {
    let signal = load_signal(path, cfg)?;
    SongAnalysis::new(signal, cfg).map_err(|e| CliError::from(e).context(path.display()))
}

/// Features at the configured `B` and `d`, read from or written to the
/// cache when one is given.
pub fn features(path: &Path, cfg: &PipelineConfig, cache: Option<&FeatureCache>) -> CliResult<SongFeatures> {
    let ctx = |e: timbre_shape::Error| CliError::from(e).context(path.display());
    let key = match cache {
        Some(c) => {
            let key = sha256_file(path).map_err(ctx)?;
            if let Some(f) = c.load(&key) {
                return Ok(f);
            }
            Some(key)
        }
        None => None,
    };
    let f = analyse(path, cfg)?
        .features(cfg.beats_per_block, cfg.ssm_dim)
        .map_err(ctx)?;
    if let (Some(c), Some(key)) = (cache, key) {
        c.store(&key, &f).map_err(ctx)?;
    }
    Ok(f)
}

pub fn features_all(paths: &[PathBuf], cfg: &PipelineConfig, cache: Option<&FeatureCache>) -> CliResult<Vec<SongFeatures>> {
    paths.par_iter().map(|p| features(p, cfg, cache)).collect()
}

pub fn open_cache(dir: Option<&Path>, cfg: &PipelineConfig) -> CliResult<Option<FeatureCache>> {
    dir.map(|d| FeatureCache::new(d, cfg).map_err(|e| CliError::from(e).context(d.display())))
        .transpose()
}

/// One audio path per line, relative to the manifest's directory. Blank
/// lines and lines starting with `#` are ignored.
pub fn read_manifest(path: &Path) -> CliResult<Vec<PathBuf>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = base.join(line);
        if !p.is_file() {
            return Err(CliError::manifest(format!(
                "{}:{}: no such file {}",
                path.display(),
                n + 1,
                p.display()
            )));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(CliError::manifest(format!("{}: no songs listed", path.display())));
    }
    Ok(out)
}

/// JSON array whose entry `i` is the index in set B of the cover of song
/// `i` in set A.
pub fn read_truth(path: &Path, n_a: usize, n_b: usize) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::manifest(format!("{}: {e}", path.display())))?;
    let truth: Vec<usize> = serde_json::from_str(&text)
        .map_err(|e| CliError::manifest(format!("{}: {e}", path.display())))?;
    validate_truth(&truth, n_a, n_b).map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(truth)
}
