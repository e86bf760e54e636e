use std::path::Path;

use serde_json::json;
use timbre_shape::{score_pair, PipelineConfig};

use crate::error::{CliError, CliResult};
use crate::songs;

pub fn run(a: &Path, b: &Path, cfg: &PipelineConfig, cache_dir: Option<&Path>) -> CliResult<()> {
    let cache = songs::open_cache(cache_dir, cfg)?;
    let fa = songs::features(a, cfg, cache.as_ref())?;
    let fb = songs::features(b, cfg, cache.as_ref())?;
    let pair = score_pair(&fa, &fb, cfg).map_err(CliError::from)?;
    let out = json!({
        "scoreAB": pair.score,
        "combinations": pair.combinations,
        "blocksA": fa.max_blocks(),
        "blocksB": fb.max_blocks(),
        "config": cfg,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
