use std::fs;

use timbre_shape::PipelineConfig;

use crate::cli::CommonArgs;
use crate::error::{CliError, CliResult};

/// Defaults, then the config file, then flags.
pub fn resolve(args: &CommonArgs) -> CliResult<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
            toml::from_str(&text)
                .map_err(|e| CliError::usage(format!("invalid config file {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(k) = args.kappa {
        cfg.kappa = k;
    }
    if let Some(b) = args.beats {
        cfg.beats_per_block = b;
    }
    if let Some(d) = args.dim {
        cfg.ssm_dim = d;
    }
    if let Some(b) = &args.biases {
        cfg.tempo_biases = b.clone();
    }
    if let Some(sr) = args.sample_rate {
        cfg.sample_rate = sr;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

pub fn init_threads(args: &CommonArgs) -> CliResult<()> {
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file_override_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "kappa = 0.05\nbeats_per_block = 10\n[beat]\ntightness = 50.0").unwrap();
        let args = CommonArgs {
            config: Some(f.path().to_path_buf()),
            beats: Some(12),
            ..Default::default()
        };
        let cfg = resolve(&args).unwrap();
        assert_eq!(cfg.kappa, 0.05);
        assert_eq!(cfg.beats_per_block, 12);
        assert_eq!(cfg.beat.tightness, 50.0);
        assert_eq!(cfg.ssm_dim, 200);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let args = CommonArgs { kappa: Some(1.5), ..Default::default() };
        assert_eq!(resolve(&args).unwrap_err().code, 1);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "kapa = 0.1").unwrap();
        let args = CommonArgs { config: Some(f.path().to_path_buf()), ..Default::default() };
        assert_eq!(resolve(&args).unwrap_err().code, 1);
    }
}
