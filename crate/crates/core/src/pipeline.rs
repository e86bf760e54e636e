//! End-to-end scoring: per-song features at several tempo biases, pairwise
//! scores as the best of all bias combinations, and the retrieval benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::smith_waterman_constrained;
use crate::audio::{AudioSignal, CANONICAL_SAMPLE_RATE};
use crate::beat::{beat_track_for_bias, onset_envelope, BeatConfig, BeatTrack};
use crate::embed::{make_blocks_on_grid, window_geometry, Block, MfccConfig, TimeOrderedPointCloud, WindowFeatures};
use crate::error::{Error, Result};
use crate::shape::{block_ssm, SsmImage};
use crate::simmatch::{binarize_mutual_knn, compute_csm, CrossSimilarityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kappa: f64,
    pub beats_per_block: usize,
    pub ssm_dim: usize,
    pub tempo_biases: Vec<f64>,
    pub sample_rate: u32,
    /// Report `score / sqrt(N * M)` instead of the raw table maximum.
    pub normalize_score: bool,
    pub mfcc: MfccConfig,
    pub beat: BeatConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            beats_per_block: 14,
            ssm_dim: 200,
            tempo_biases: vec![60.0, 120.0, 180.0],
            sample_rate: CANONICAL_SAMPLE_RATE,
            normalize_score: false,
            mfcc: MfccConfig::default(),
            beat: BeatConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidArgument(format!("kappa {} outside (0, 1]", self.kappa)));
        }
        if self.beats_per_block == 0 {
            return Err(Error::InvalidArgument("beats per block must be >= 1".into()));
        }
        if self.ssm_dim < 2 {
            return Err(Error::InvalidArgument("SSM dimension must be >= 2".into()));
        }
        if self.tempo_biases.is_empty() {
            return Err(Error::InvalidArgument("at least one tempo bias is required".into()));
        }
        if let Some(b) = self.tempo_biases.iter().find(|b| !(30.0..=300.0).contains(*b)) {
            return Err(Error::InvalidArgument(format!("tempo bias {b} outside [30, 300]")));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        self.mfcc.validate(self.sample_rate)
    }
}

/// Beat track for one bias and the slot of its window features, if the
/// beat period gives a usable window.
struct BiasAnalysis {
    track: BeatTrack,
    slot: Option<usize>,
}

/// Everything about a song that does not depend on `B` or `d`. Window MFCCs
/// are memoised, so building features for several `(B, d)` settings reuses
/// them, and biases that land on the same window length share one cache.
pub struct SongAnalysis {
    signal: AudioSignal,
    biases: Vec<BiasAnalysis>,
    windows: Vec<WindowFeatures>,
}

impl SongAnalysis {
    pub fn new(signal: AudioSignal, cfg: &PipelineConfig) -> Result<Self> {
        let env = onset_envelope(&signal, cfg.beat.frame_len, cfg.beat.frame_hop, &cfg.beat)?;
        let mut biases = Vec::with_capacity(cfg.tempo_biases.len());
        let mut windows: Vec<WindowFeatures> = Vec::new();
        for &bias in &cfg.tempo_biases {
            let track = beat_track_for_bias(&env, bias, &cfg.beat)?;
            let (w, h) = window_geometry(track.mean_period, signal.sample_rate());
            let slot = match windows.iter().position(|f| f.window_len() == w && f.hop() == h) {
                Some(i) => Some(i),
                None => WindowFeatures::new(track.mean_period, signal.sample_rate(), &cfg.mfcc)
                    .ok()
                    .map(|f| {
                        windows.push(f);
                        windows.len() - 1
                    }),
            };
            biases.push(BiasAnalysis { track, slot });
        }
        Ok(Self {
            signal,
            biases,
            windows,
        })
    }

    pub fn signal(&self) -> &AudioSignal {
        &self.signal
    }

    pub fn beat_tracks(&self) -> impl Iterator<Item = &BeatTrack> {
        self.biases.iter().map(|b| &b.track)
    }

    /// Blocks of `beats_per_block` beats at bias level `bias_index`, with
    /// edges on the window hop lattice and clamped to the signal.
    pub fn blocks(&self, bias_index: usize, beats_per_block: usize) -> Result<Vec<Block>> {
        let bias = &self.biases[bias_index];
        let (_, hop) = window_geometry(bias.track.mean_period, self.signal.sample_rate());
        let limit = self.signal.len() / hop * hop;
        let mut blocks = make_blocks_on_grid(&bias.track, beats_per_block, self.signal.sample_rate(), hop)?;
        for b in &mut blocks {
            b.t1 = b.t1.min(limit);
            b.t2 = b.t2.min(limit);
        }
        Ok(blocks)
    }

    /// Point cloud of one block at one bias.
    pub fn point_cloud(&mut self, bias_index: usize, block: &Block) -> Result<TimeOrderedPointCloud> {
        let bias = &self.biases[bias_index];
        match bias.slot {
            Some(slot) => self.windows[slot].point_cloud(&self.signal, block),
            None => Err(Error::BlockTooShort {
                block: block.len(),
                window: window_geometry(bias.track.mean_period, self.signal.sample_rate()).0,
            }),
        }
    }

    /// SSM features for block size `beats_per_block` and image size `d`.
    pub fn features(&mut self, beats_per_block: usize, d: usize) -> Result<SongFeatures> {
        let mut out = Vec::with_capacity(self.biases.len());
        for bi in 0..self.biases.len() {
            let track = self.biases[bi].track.clone();
            let blocks = match self.blocks(bi, beats_per_block) {
                Ok(b) if self.biases[bi].slot.is_some() => b,
                _ => {
                    out.push(BiasFeatures::unusable(track));
                    continue;
                }
            };
            let mut ssms = Vec::with_capacity(blocks.len());
            let mut skipped = Vec::new();
            for (i, block) in blocks.iter().enumerate() {
                let img = self
                    .point_cloud(bi, block)
                    .and_then(|cloud| block_ssm(&cloud, d));
                match img {
                    Ok(img) => ssms.push(img),
                    Err(Error::DegenerateBlock | Error::BlockTooShort { .. }) => skipped.push(i),
                    Err(e) => return Err(e),
                }
            }
            out.push(BiasFeatures {
                bias_bpm: track.bias_bpm,
                beats: track,
                n_blocks: blocks.len(),
                usable: !ssms.is_empty(),
                ssms,
                skipped,
            });
        }
        if out.iter().all(|b| !b.usable) {
            return Err(Error::SongTooShort);
        }
        Ok(SongFeatures { biases: out })
    }
}

/// Features at one tempo-bias level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFeatures {
    pub bias_bpm: f64,
    pub beats: BeatTrack,
    /// Number of blocks before degenerate ones were skipped.
    pub n_blocks: usize,
    pub ssms: Vec<SsmImage>,
    /// Indices (into the block list) of skipped blocks.
    pub skipped: Vec<usize>,
    pub usable: bool,
}

impl BiasFeatures {
    fn unusable(track: BeatTrack) -> Self {
        Self {
            bias_bpm: track.bias_bpm,
            beats: track,
            n_blocks: 0,
            ssms: Vec::new(),
            skipped: Vec::new(),
            usable: false,
        }
    }
}

/// One entry per configured tempo bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongFeatures {
    pub biases: Vec<BiasFeatures>,
}

impl SongFeatures {
    pub fn usable(&self) -> impl Iterator<Item = &BiasFeatures> {
        self.biases.iter().filter(|b| b.usable)
    }

    /// Largest SSM count over usable biases.
    pub fn max_blocks(&self) -> usize {
        self.usable().map(|b| b.ssms.len()).max().unwrap_or(0)
    }
}

/// Beat tracking, blocks, embedding, normalisation, SSM and resize at every
/// configured tempo bias.
pub fn extract_features(signal: &AudioSignal, cfg: &PipelineConfig) -> Result<SongFeatures> {
    cfg.validate()?;
    let mut analysis = SongAnalysis::new(signal.clone(), cfg)?;
    analysis.features(cfg.beats_per_block, cfg.ssm_dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationScore {
    pub bias_a: f64,
    pub bias_b: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub score: f64,
    pub combinations: Vec<CombinationScore>,
}

/// CSMs for every usable bias combination. Biases that tracked identical
/// beats have identical SSMs, so their matrices are computed once.
pub fn pair_csms(a: &SongFeatures, b: &SongFeatures) -> Result<Vec<(f64, f64, CrossSimilarityMatrix)>> {
    let ua: Vec<&BiasFeatures> = a.usable().collect();
    let ub: Vec<&BiasFeatures> = b.usable().collect();
    let first_same = |list: &[&BiasFeatures], i: usize| {
        (0..i)
            .find(|&k| list[k].beats.beat_times == list[i].beats.beat_times)
            .unwrap_or(i)
    };
    let mut out: Vec<(f64, f64, CrossSimilarityMatrix)> = Vec::with_capacity(ua.len() * ub.len());
    for (i, fa) in ua.iter().enumerate() {
        for (j, fb) in ub.iter().enumerate() {
            let (si, sj) = (first_same(&ua, i), first_same(&ub, j));
            let csm = if (si, sj) != (i, j) {
                out[si * ub.len() + sj].2.clone()
            } else {
                compute_csm(&fa.ssms, &fb.ssms)?
            };
            out.push((fa.bias_bpm, fb.bias_bpm, csm));
        }
    }
    if out.is_empty() {
        return Err(Error::NoUsablePair);
    }
    Ok(out)
}

/// Binarise and align every CSM; the pair score is the best combination.
pub fn score_csms(csms: &[(f64, f64, CrossSimilarityMatrix)], kappa: f64, normalize: bool) -> Result<PairScore> {
    if csms.is_empty() {
        return Err(Error::NoUsablePair);
    }
    let combinations = csms
        .iter()
        .map(|(ba, bb, csm)| {
            let bits = binarize_mutual_knn(csm, kappa)?;
            let r = smith_waterman_constrained(&bits, false)?;
            let score = if normalize {
                r.normalized_score(csm.rows(), csm.cols())
            } else {
                r.score
            };
            Ok(CombinationScore {
                bias_a: *ba,
                bias_b: *bb,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let score = combinations.iter().map(|c| c.score).fold(f64::MIN, f64::max);
    Ok(PairScore {
        score,
        combinations,
    })
}

/// Best constrained Smith-Waterman score over all usable bias pairs.
pub fn score_pair(a: &SongFeatures, b: &SongFeatures, cfg: &PipelineConfig) -> Result<PairScore> {
    score_csms(&pair_csms(a, b)?, cfg.kappa, cfg.normalize_score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: usize,
    pub predicted: usize,
    pub truth: usize,
    /// 1-based rank of the true cover among all candidates.
    pub rank: usize,
    pub score: f64,
    pub true_score: f64,
    /// Set when the maximum score was shared by more than one candidate.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub correct: usize,
    pub total: usize,
    pub mean_rank: f64,
    pub queries: Vec<QueryResult>,
    /// `scores[i][j]`: score of query `i` against candidate `j`.
    pub scores: Vec<Vec<f64>>,
}

pub fn validate_truth(truth: &[usize], n_a: usize, n_b: usize) -> Result<()> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::Manifest("empty song set".into()));
    }
    if n_a != n_b {
        return Err(Error::Manifest(format!("set sizes differ ({n_a} vs {n_b})")));
    }
    if n_a < 2 {
        return Err(Error::Manifest("need at least 2 songs per set".into()));
    }
    if truth.len() != n_a {
        return Err(Error::Manifest(format!("truth has {} entries for {n_a} songs", truth.len())));
    }
    let mut seen = vec![false; n_b];
    for &t in truth {
        if t >= n_b || seen[t] {
            return Err(Error::Manifest("truth is not a bijection".into()));
        }
        seen[t] = true;
    }
    Ok(())
}

/// Rank queries against a full score matrix. Argmax ties go to the smaller
/// index and are flagged.
pub fn evaluate_scores(scores: Vec<Vec<f64>>, truth: &[usize]) -> Result<BenchmarkReport> {
    let n_b = scores.first().map(Vec::len).unwrap_or(0);
    validate_truth(truth, scores.len(), n_b)?;
    let queries: Vec<QueryResult> = scores
        .iter()
        .enumerate()
        .map(|(q, row)| {
            let (predicted, best) = row
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (j, &s)| if s > acc.1 { (j, s) } else { acc });
            let tie = row.iter().filter(|&&s| s == best).count() > 1;
            let t = truth[q];
            let true_score = row[t];
            let rank = 1 + row
                .iter()
                .enumerate()
                .filter(|&(j, &s)| j != t && (s > true_score || (s == true_score && j < t)))
                .count();
            QueryResult {
                query: q,
                predicted,
                truth: t,
                rank,
                score: best,
                true_score,
                tie,
            }
        })
        .collect();
    let correct = queries.iter().filter(|q| q.predicted == q.truth).count();
    let mean_rank = queries.iter().map(|q| q.rank as f64).sum::<f64>() / queries.len() as f64;
    Ok(BenchmarkReport {
        correct,
        total: queries.len(),
        mean_rank,
        queries,
        scores,
    })
}

/// Full `|A| x |B|` score matrix.
pub fn score_matrix(a: &[SongFeatures], b: &[SongFeatures], cfg: &PipelineConfig) -> Result<Vec<Vec<f64>>> {
    let cells: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let flat = cells
        .par_iter()
        .map(|&(i, j)| score_pair(&a[i], &b[j], cfg).map(|p| p.score))
        .collect::<Result<Vec<f64>>>()?;
    Ok(flat.chunks(b.len().max(1)).map(<[f64]>::to_vec).collect())
}

/// Score every query in A against every candidate in B and rank the true
/// covers.
pub fn benchmark(
    a: &[SongFeatures],
    b: &[SongFeatures],
    truth: &[usize],
    cfg: &PipelineConfig,
) -> Result<BenchmarkReport> {
    validate_truth(truth, a.len(), b.len())?;
    evaluate_scores(score_matrix(a, b, cfg)?, truth)
}

/// Parameter grid of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kappas: Vec<f64>,
    pub beats_per_block: Vec<usize>,
    pub dims: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            kappas: vec![0.05, 0.1, 0.15],
            beats_per_block: vec![8, 10, 12, 14],
            dims: vec![100, 200, 300],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa: f64,
    pub beats_per_block: usize,
    pub dim: usize,
    pub correct: usize,
    pub total: usize,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, kappa: f64, beats: usize, dim: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.kappa == kappa && c.beats_per_block == beats && c.dim == dim)
    }

    /// Text table: one panel per kappa, one row per `d`, one column per `B`,
    /// each cell the number of queries whose true cover ranked first.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for &kappa in &self.grid.kappas {
            out.push_str(&format!("Kappa = {kappa}"));
            for &b in &self.grid.beats_per_block {
                out.push_str(&format!(" | B = {b}"));
            }
            out.push('\n');
            for &d in &self.grid.dims {
                out.push_str(&format!("d = {d}"));
                for &b in &self.grid.beats_per_block {
                    let v = self.cell(kappa, b, d).map(|c| c.correct.to_string()).unwrap_or_default();
                    out.push_str(&format!(" | {v}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Run the benchmark over every `(kappa, B, d)` grid point. Window features
/// are shared across `B` and `d`; CSMs are shared across `kappa`.
pub fn parameter_sweep(
    a: &mut [SongAnalysis],
    b: &mut [SongAnalysis],
    truth: &[usize],
    grid: &SweepGrid,
    cfg: &PipelineConfig,
) -> Result<SweepResult> {
    validate_truth(truth, a.len(), b.len())?;
    let mut cells = Vec::new();
    for &beats in &grid.beats_per_block {
        for &dim in &grid.dims {
            let fa = features_all(a, beats, dim)?;
            let fb = features_all(b, beats, dim)?;
            let pairs: Vec<(usize, usize)> =
                (0..fa.len()).flat_map(|i| (0..fb.len()).map(move |j| (i, j))).collect();
            let csms = pairs
                .par_iter()
                .map(|&(i, j)| pair_csms(&fa[i], &fb[j]))
                .collect::<Result<Vec<_>>>()?;
            for &kappa in &grid.kappas {
                let flat = csms
                    .par_iter()
                    .map(|c| score_csms(c, kappa, cfg.normalize_score).map(|p| p.score))
                    .collect::<Result<Vec<f64>>>()?;
                let scores = flat.chunks(fb.len()).map(<[f64]>::to_vec).collect();
                let report = evaluate_scores(scores, truth)?;
                cells.push(SweepCell {
                    kappa,
                    beats_per_block: beats,
                    dim,
                    correct: report.correct,
                    total: report.total,
                    mean_rank: report.mean_rank,
                });
            }
        }
    }
    Ok(SweepResult {
        grid: grid.clone(),
        cells,
    })
}

fn features_all(songs: &mut [SongAnalysis], beats: usize, dim: usize) -> Result<Vec<SongFeatures>> {
    songs.par_iter_mut().map(|s| s.features(beats, dim)).collect()
}
