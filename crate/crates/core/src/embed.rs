//! Beat blocks and their sliding-window MFCC point clouds.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::beat::BeatTrack;
use crate::error::{Error, Result};
use crate::spectral::{Dct2, MelFilterbank, PowerSpectrum};

pub const MIN_WINDOW_SAMPLES: usize = 64;

/// Windows advance by this fraction of the window length.
pub const HOP_DIVISOR: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// Upper band edge in Hz; `None` means Nyquist.
    pub fmax: Option<f64>,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_coeffs: 20,
            n_mels: 40,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        let fmax = self.fmax.unwrap_or(nyquist);
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return Err(Error::InvalidArgument(format!(
                "need 0 < n_coeffs <= n_mels (got {} and {})",
                self.n_coeffs, self.n_mels
            )));
        }
        if !(0.0 <= self.fmin && self.fmin < fmax && fmax <= nyquist) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= fmin < fmax <= {nyquist} (got {} and {fmax})",
                self.fmin
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::InvalidArgument("log floor must be positive".into()));
        }
        Ok(())
    }
}

/// Single-frame MFCC for windows of one fixed length.
pub struct MfccExtractor {
    window_len: usize,
    spectrum: PowerSpectrum,
    bank: MelFilterbank,
    dct: Dct2,
    log_floor: f64,
    n_coeffs: usize,
    power: Vec<f64>,
    mel: Vec<f64>,
}

impl MfccExtractor {
    pub fn new(window_len: usize, sample_rate: u32, cfg: &MfccConfig) -> Result<Self> {
        if window_len < MIN_WINDOW_SAMPLES {
            return Err(Error::WindowTooShort(window_len));
        }
        cfg.validate(sample_rate)?;
        let fs = sample_rate as f64;
        let spectrum = PowerSpectrum::new(window_len);
        let bank = MelFilterbank::new(
            cfg.n_mels,
            spectrum.fft_len(),
            fs,
            cfg.fmin,
            cfg.fmax.unwrap_or(fs / 2.0),
        );
        let power = vec![0.0; spectrum.n_bins()];
        Ok(Self {
            window_len,
            spectrum,
            bank,
            dct: Dct2::new(cfg.n_mels, cfg.n_coeffs),
            log_floor: cfg.log_floor,
            n_coeffs: cfg.n_coeffs,
            power,
            mel: vec![0.0; cfg.n_mels],
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn compute_into(&mut self, window: &[f64], out: &mut [f64]) {
        debug_assert_eq!(window.len(), self.window_len);
        self.spectrum.compute(window, &mut self.power);
        self.bank.apply(&self.power, &mut self.mel);
        for m in self.mel.iter_mut() {
            *m = m.max(self.log_floor).ln();
        }
        self.dct.apply(&self.mel, out);
    }

    pub fn compute(&mut self, window: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_coeffs];
        self.compute_into(window, &mut out);
        out
    }
}

/// MFCC of one window: Hann-weighted power spectrum, mel filterbank, log
/// with floor, orthonormal DCT-II, first `n_coeffs` coefficients.
pub fn mfcc_window(window: &[f64], sample_rate: u32, cfg: &MfccConfig) -> Result<Vec<f64>> {
    let mut ex = MfccExtractor::new(window.len(), sample_rate, cfg)?;
    Ok(ex.compute(window))
}

/// `B` contiguous beat intervals, in beat indices and sample positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    /// Index of the first beat interval in the block.
    pub beat_start_index: usize,
    /// Index of the last beat interval in the block (inclusive).
    pub beat_end_index: usize,
    /// First sample of the block.
    pub t1: usize,
    /// One past the last sample of the block.
    pub t2: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.t2 - self.t1
    }

    pub fn is_empty(&self) -> bool {
        self.t2 == self.t1
    }
}

/// All `N - B + 1` blocks of `B` consecutive beat intervals.
pub fn make_blocks(beats: &BeatTrack, beats_per_block: usize, sample_rate: u32) -> Result<Vec<Block>> {
    make_blocks_on_grid(beats, beats_per_block, sample_rate, 1)
}

/// Like [`make_blocks`], with block edges snapped to multiples of `grid`
/// samples. Snapping to the window hop puts every block's windows on one
/// song-wide lattice, so overlapping blocks share window features.
pub fn make_blocks_on_grid(
    beats: &BeatTrack,
    beats_per_block: usize,
    sample_rate: u32,
    grid: usize,
) -> Result<Vec<Block>> {
    let n = beats.n_intervals();
    if beats_per_block == 0 {
        return Err(Error::InvalidArgument("beats per block must be >= 1".into()));
    }
    if beats_per_block > n {
        return Err(Error::TooFewBeats {
            needed: beats_per_block,
            got: n,
        });
    }
    let grid = grid.max(1);
    let fs = sample_rate as f64;
    let snap = |t: f64| ((t * fs / grid as f64).round() as usize) * grid;
    Ok((0..=n - beats_per_block)
        .map(|i| Block {
            beat_start_index: i,
            beat_end_index: i + beats_per_block - 1,
            t1: snap(beats.beat_times[i]),
            t2: snap(beats.beat_times[i + beats_per_block]),
        })
        .collect())
}

/// Window length and hop in samples for a window of `window_secs`.
pub fn window_geometry(window_secs: f64, sample_rate: u32) -> (usize, usize) {
    let w = (window_secs * sample_rate as f64).round() as usize;
    let h = ((w as f64 / HOP_DIVISOR).round() as usize).max(1);
    (w, h)
}

/// Window intervals `[a, b)` of length `window` advancing by `hop` from
/// `t1`, plus a final `[t2 - window, t2)` when the hop grid misses `t2`.
pub fn window_intervals(t1: usize, t2: usize, window: usize, hop: usize) -> Result<Vec<(usize, usize)>> {
    if t2 < t1 || t2 - t1 < window {
        return Err(Error::BlockTooShort {
            block: t2.saturating_sub(t1),
            window,
        });
    }
    let hop = hop.max(1);
    let mut out: Vec<(usize, usize)> = (0..)
        .map(|k| t1 + k * hop)
        .take_while(|a| a + window <= t2)
        .map(|a| (a, a + window))
        .collect();
    if out.last().map(|&(_, b)| b < t2).unwrap_or(true) {
        out.push((t2 - window, t2));
    }
    Ok(out)
}

/// K ordered points, one per window, with the window intervals they came
/// from. Clouds built directly from points carry no intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeOrderedPointCloud {
    points: Vec<f64>,
    dim: usize,
    intervals: Vec<(usize, usize)>,
}

impl TimeOrderedPointCloud {
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("ragged point cloud".into()));
        }
        Self::from_flat(points.concat(), dim, Vec::new())
    }

    pub fn from_flat(points: Vec<f64>, dim: usize, intervals: Vec<(usize, usize)>) -> Result<Self> {
        if dim == 0 && !points.is_empty() {
            return Err(Error::DimensionMismatch("zero-dimensional points".into()));
        }
        if dim > 0 && points.len() % dim != 0 {
            return Err(Error::DimensionMismatch("flat buffer not a multiple of dim".into()));
        }
        if !intervals.is_empty() && intervals.len() * dim != points.len() {
            return Err(Error::DimensionMismatch("interval count != point count".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            dim,
            intervals,
        })
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.points.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim.max(1))
    }

    pub fn flat(&self) -> &[f64] {
        &self.points
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub(crate) fn with_points(&self, points: Vec<f64>) -> Self {
        Self {
            points,
            dim: self.dim,
            intervals: self.intervals.clone(),
        }
    }
}

/// Point cloud of one block: windows of `window_secs` seconds advancing by
/// `W / 200`.
pub fn block_point_cloud(
    signal: &AudioSignal,
    block: &Block,
    window_secs: f64,
    cfg: &MfccConfig,
) -> Result<TimeOrderedPointCloud> {
    WindowFeatures::new(window_secs, signal.sample_rate(), cfg)?.point_cloud(signal, block)
}

/// MFCC features of fixed-length windows over one signal, memoised by
/// window start so overlapping blocks compute each window once.
pub struct WindowFeatures {
    extractor: MfccExtractor,
    hop: usize,
    n_coeffs: usize,
    cache: HashMap<usize, Vec<f64>>,
}

impl WindowFeatures {
    pub fn new(window_secs: f64, sample_rate: u32, cfg: &MfccConfig) -> Result<Self> {
        let (window, hop) = window_geometry(window_secs, sample_rate);
        let extractor = MfccExtractor::new(window, sample_rate, cfg)?;
        Ok(Self {
            extractor,
            hop,
            n_coeffs: cfg.n_coeffs,
            cache: HashMap::new(),
        })
    }

    pub fn window_len(&self) -> usize {
        self.extractor.window_len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Number of distinct windows computed so far.
    pub fn cached_windows(&self) -> usize {
        self.cache.len()
    }

    /// `signal` must be the same signal on every call.
    pub fn point_cloud(&mut self, signal: &AudioSignal, block: &Block) -> Result<TimeOrderedPointCloud> {
        if block.t2 > signal.len() {
            return Err(Error::InvalidArgument(format!(
                "block ends at sample {} past signal end {}",
                block.t2,
                signal.len()
            )));
        }
        let window = self.extractor.window_len();
        let intervals = window_intervals(block.t1, block.t2, window, self.hop)?;
        let mut points = Vec::with_capacity(intervals.len() * self.n_coeffs);
        for &(a, b) in &intervals {
            let feat = match self.cache.get(&a) {
                Some(f) => f,
                None => {
                    let mut f = vec![0.0; self.n_coeffs];
                    self.extractor.compute_into(&signal.samples()[a..b], &mut f);
                    self.cache.entry(a).or_insert(f)
                }
            };
            points.extend_from_slice(feat);
        }
        TimeOrderedPointCloud::from_flat(points, self.n_coeffs, intervals)
    }
}

/// Project a centred cloud onto its top three principal directions.
pub fn pca3_project(cloud: &TimeOrderedPointCloud) -> Result<Vec<[f64; 3]>> {
    let k = cloud.len();
    if k < 3 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 3 points, got {k}")));
    }
    let dim = cloud.dim();
    let mut mean = vec![0.0; dim];
    for p in cloud.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let centred = DMatrix::from_fn(k, dim, |i, j| cloud.point(i)[j] - mean[j]);
    let cov = centred.transpose() * &centred / k as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut out = vec![[0.0; 3]; k];
    for (axis, &col) in order.iter().take(3).enumerate() {
        let dir = eig.eigenvectors.column(col);
        for (i, row) in out.iter_mut().enumerate() {
            row[axis] = centred.row(i).iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}
