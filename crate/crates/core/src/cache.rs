//! On-disk cache of [`SongFeatures`], keyed by audio file hash and the hash
//! of the feature-relevant configuration.
//!
//! Container layout (little-endian):
//!
//! ```text
//! magic    b"TSHF"
//! version  u32
//! config   [u8; 32]   sha256 of the feature config
//! payload  features
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::beat::BeatTrack;
use crate::error::{Error, Result};
use crate::pipeline::{BiasFeatures, PipelineConfig, SongFeatures};
use crate::shape::{SquareMatrix, SsmImage};

const MAGIC: &[u8; 4] = b"TSHF";
pub const CACHE_VERSION: u32 = 1;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<[u8; 32]> {
    let data = fs::read(path)?;
    Ok(Sha256::digest(&data).into())
}

/// Hash of every setting that affects features. `kappa` and score
/// normalisation only act after features are built, so they are excluded.
pub fn config_hash(cfg: &PipelineConfig) -> [u8; 32] {
    let mut c = cfg.clone();
    c.kappa = 0.0;
    c.normalize_score = false;
    let json = serde_json::to_vec(&c).expect("config serialises");
    Sha256::digest(&json).into()
}

pub fn encode(features: &SongFeatures, cfg_hash: &[u8; 32]) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(CACHE_VERSION);
    w.0.extend_from_slice(cfg_hash);
    w.u64(features.biases.len() as u64);
    for b in &features.biases {
        w.f64(b.bias_bpm);
        w.f64(b.beats.mean_period);
        w.u8(b.beats.no_rhythm as u8);
        w.u8(b.usable as u8);
        w.u64(b.n_blocks as u64);
        w.f64s(&b.beats.beat_times);
        w.u64(b.skipped.len() as u64);
        for &s in &b.skipped {
            w.u64(s as u64);
        }
        w.u64(b.ssms.len() as u64);
        for img in &b.ssms {
            w.u64(img.d() as u64);
            w.f64s(img.pixels());
        }
    }
    w.0
}

/// Decode a container, rejecting a foreign magic, another version or a
/// different config hash.
pub fn decode(bytes: &[u8], cfg_hash: &[u8; 32]) -> Result<SongFeatures> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("version {version}, expected {CACHE_VERSION}")));
    }
    if r.take(32)? != cfg_hash {
        return Err(Error::Cache("config hash mismatch".into()));
    }
    let n = r.len()?;
    let mut biases = Vec::with_capacity(n);
    for _ in 0..n {
        let bias_bpm = r.f64()?;
        let mean_period = r.f64()?;
        let no_rhythm = r.u8()? != 0;
        let usable = r.u8()? != 0;
        let n_blocks = r.u64()? as usize;
        let beat_times = r.f64s()?;
        let n_skipped = r.len()?;
        let skipped = (0..n_skipped).map(|_| r.u64().map(|v| v as usize)).collect::<Result<_>>()?;
        let n_ssms = r.len()?;
        let mut ssms = Vec::with_capacity(n_ssms);
        for _ in 0..n_ssms {
            let d = r.u64()? as usize;
            let px = r.f64s()?;
            ssms.push(SsmImage::from_matrix(SquareMatrix::from_vec(d, px)?));
        }
        biases.push(BiasFeatures {
            bias_bpm,
            beats: BeatTrack {
                beat_times,
                bias_bpm,
                mean_period,
                no_rhythm,
            },
            n_blocks,
            ssms,
            skipped,
            usable,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Ok(SongFeatures { biases })
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Cache("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// A length prefix, sanity-checked against the bytes left.
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(Error::Cache("length prefix past end".into()));
        }
        Ok(n as usize)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Directory of cached feature files named `<file hash>-<config hash>.bin`.
pub struct FeatureCache {
    dir: PathBuf,
    cfg_hash: [u8; 32],
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>, cfg: &PipelineConfig) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            cfg_hash: config_hash(cfg),
        })
    }

    pub fn entry_path(&self, file_hash: &[u8; 32]) -> PathBuf {
        self.dir
            .join(format!("{}-{}.bin", hex(file_hash), hex(&self.cfg_hash[..8])))
    }

    /// Cached features for an audio file, if present and valid.
    pub fn load(&self, file_hash: &[u8; 32]) -> Option<SongFeatures> {
        let bytes = fs::read(self.entry_path(file_hash)).ok()?;
        decode(&bytes, &self.cfg_hash).ok()
    }

    pub fn store(&self, file_hash: &[u8; 32], features: &SongFeatures) -> Result<()> {
        let path = self.entry_path(file_hash);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(features, &self.cfg_hash))?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SongFeatures {
        let img = SsmImage::from_matrix(SquareMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs() * 0.25));
        SongFeatures {
            biases: vec![
                BiasFeatures {
                    bias_bpm: 120.0,
                    beats: BeatTrack::new(vec![0.0, 0.5, 1.0], 120.0, 0.5),
                    n_blocks: 2,
                    ssms: vec![img.clone(), img],
                    skipped: vec![],
                    usable: true,
                },
                BiasFeatures {
                    bias_bpm: 60.0,
                    beats: BeatTrack::new(vec![0.0], 60.0, 1.0),
                    n_blocks: 0,
                    ssms: vec![],
                    skipped: vec![3],
                    usable: false,
                },
            ],
        }
    }

    #[test]
    fn round_trip() {
        let h = config_hash(&PipelineConfig::default());
        let f = sample();
        assert_eq!(decode(&encode(&f, &h), &h).unwrap(), f);
    }

    #[test]
    fn rejects_other_config() {
        let h = config_hash(&PipelineConfig::default());
        let other = config_hash(&PipelineConfig {
            ssm_dim: 100,
            ..Default::default()
        });
        assert_ne!(h, other);
        assert!(decode(&encode(&sample(), &h), &other).is_err());
    }

    #[test]
    fn kappa_does_not_change_hash() {
        let a = config_hash(&PipelineConfig::default());
        let b = config_hash(&PipelineConfig {
            kappa: 0.15,
            ..Default::default()
        });
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_truncation_and_version() {
        let h = config_hash(&PipelineConfig::default());
        let bytes = encode(&sample(), &h);
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(decode(&bytes[..cut], &h).is_err());
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode(&bad, &h).is_err());
    }

    #[test]
    fn store_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let cache = FeatureCache::new(dir.path(), &cfg).unwrap();
        let key = [7u8; 32];
        assert!(cache.load(&key).is_none());
        cache.store(&key, &sample()).unwrap();
        assert_eq!(cache.load(&key).unwrap(), sample());
    }
}
