//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::MemoSw;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timbre_shape::align::score_table;
use timbre_shape::beat::{beat_track_for_bias, onset_envelope, BeatConfig};
use timbre_shape::embed::{mfcc_window, MfccConfig, TimeOrderedPointCloud};
use timbre_shape::pipeline::{
    benchmark, parameter_sweep, score_pair, PipelineConfig, SongAnalysis, SongFeatures, SweepGrid,
};
use timbre_shape::shape::block_ssm;
use timbre_shape::simmatch::{binarize_mutual_knn, BinaryCsm, CrossSimilarityMatrix};
use timbre_shape::synth::{click_times, render_corpus, synth_click_track, CoverTransform};

const FS: u32 = 22050;
const CORPUS_SEED: u64 = 2024;
const CORPUS_SIZE: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Rendered corpus, its per-song analyses, and default-config features.
struct Corpus {
    a: Vec<SongAnalysis>,
    b: Vec<SongAnalysis>,
    /// Rendering, beat tracking and any window features computed so far.
    build_time: Duration,
}

impl Corpus {
    fn build() -> Self {
        let t = Instant::now();
        let cfg = PipelineConfig::default();
        let pairs = render_corpus(CORPUS_SIZE, CORPUS_SEED, &CoverTransform::standard(), FS).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for p in pairs {
            a.push(SongAnalysis::new(p.a, &cfg).unwrap());
            b.push(SongAnalysis::new(p.b, &cfg).unwrap());
        }
        Self { a, b, build_time: t.elapsed() }
    }

    fn default_features(&mut self) -> (Vec<SongFeatures>, Vec<SongFeatures>) {
        let t = Instant::now();
        let cfg = PipelineConfig::default();
        let f = |s: &mut SongAnalysis| s.features(cfg.beats_per_block, cfg.ssm_dim).unwrap();
        let out = (self.a.iter_mut().map(f).collect(), self.b.iter_mut().map(f).collect());
        self.build_time += t.elapsed();
        out
    }
}

fn sweep_grid(corpus: &mut Corpus) -> Outcome {
    let t = Instant::now();
    let truth: Vec<usize> = (0..CORPUS_SIZE).collect();
    let grid = SweepGrid::default();
    let result = parameter_sweep(&mut corpus.a, &mut corpus.b, &truth, &grid, &PipelineConfig::default()).unwrap();
    let total = corpus.build_time + t.elapsed();
    let table = result.to_table();
    print!("{table}");
    let lines = table.lines().count();
    let pass = result.cells.len() == 36 && lines == 12 && total < Duration::from_secs(600);
    outcome(pass, format!("{} cells, {lines} table lines, end-to-end {} (limit 600s)", result.cells.len(), secs(total)))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        // Box-Muller
        let (u, v): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    });
    g.qr().q()
}

fn isometry_invariance() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 200;
    let (mut worst_rot, mut worst_scale) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = DMatrix::from_fn(50, 20, |_, _| rng.gen_range(-1.0..1.0));
        let q = random_orthogonal(&mut rng, 20);
        let shift: Vec<f64> = (0..20).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mut y = &x * q;
        for mut row in y.row_iter_mut() {
            for (v, s) in row.iter_mut().zip(&shift) {
                *v += s;
            }
        }
        let s: f64 = rng.gen_range(0.1..10.0);
        let z = &x * s;
        let cloud = |m: &DMatrix<f64>| {
            let flat: Vec<f64> = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
            TimeOrderedPointCloud::from_flat(flat, 20, Vec::new()).unwrap()
        };
        let base = block_ssm(&cloud(&x), d).unwrap();
        let rot = block_ssm(&cloud(&y), d).unwrap();
        let scaled = block_ssm(&cloud(&z), d).unwrap();
        for ((a, b), c) in base.pixels().iter().zip(rot.pixels()).zip(scaled.pixels()) {
            worst_rot = worst_rot.max((a - b).abs());
            worst_scale = worst_scale.max((a - c).abs());
        }
    }
    let el = t.elapsed();
    let pass = worst_rot < 1e-6 && worst_scale < 1e-6 && el < Duration::from_secs(10);
    outcome(pass, format!("max |dSSM| rotation+translation {worst_rot:.2e}, scaling {worst_scale:.2e}, {}", secs(el)))
}

fn alignment_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let p = rng.gen_range(0.05..0.95);
        let cells: Vec<bool> = (0..n * m).map(|_| rng.gen_bool(p)).collect();
        let bits = BinaryCsm::from_fn(n, m, |i, j| cells[i * m + j]);
        if score_table(&bits).unwrap().values() != MemoSw::new(&bits).table().as_slice() {
            mismatches += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        mismatches == 0 && el < Duration::from_secs(30),
        format!("10000 matrices, {mismatches} table mismatches, {}", secs(el)),
    )
}

fn transpose_symmetry(a: &[SongFeatures], b: &[SongFeatures]) -> Outcome {
    let cfg = PipelineConfig::default();
    let songs: Vec<&SongFeatures> = a.iter().chain(b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..20 {
        let i = rng.gen_range(0..songs.len());
        let j = (i + rng.gen_range(1..songs.len())) % songs.len();
        let ab = score_pair(songs[i], songs[j], &cfg).unwrap();
        let ba = score_pair(songs[j], songs[i], &cfg).unwrap();
        if ab.score != ba.score {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("20 pairs, {bad} asymmetric"))
}

fn binarization_contracts() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mono, mut dual, mut shift) = (0, 0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=40);
        let m = rng.gen_range(1..=40);
        // dyadic values and shifts keep every sum exact
        let vals: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0..256) as f64 / 64.0).collect();
        let csm = CrossSimilarityMatrix::from_vec(n, m, vals.clone()).unwrap();
        let k1: f64 = rng.gen_range(0.01..1.0);
        let k2: f64 = rng.gen_range(k1..=1.0);
        let lo = binarize_mutual_knn(&csm, k1).unwrap();
        let hi = binarize_mutual_knn(&csm, k2).unwrap();
        if (0..n).any(|i| (0..m).any(|j| lo.get(i, j) && !hi.get(i, j))) {
            mono += 1;
        }
        if binarize_mutual_knn(&csm.transpose(), k1).unwrap() != lo.transpose() {
            dual += 1;
        }
        let c = rng.gen_range(0..640) as f64 / 64.0;
        let shifted = CrossSimilarityMatrix::from_vec(n, m, vals.iter().map(|v| v + c).collect()).unwrap();
        if binarize_mutual_knn(&shifted, k1).unwrap() != lo {
            shift += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        mono + dual + shift == 0 && el < Duration::from_secs(10),
        format!("1000 CSMs, violations: monotonicity {mono}, duality {dual}, shift {shift}, {}", secs(el)),
    )
}

/// Tempo bias closest to `bpm` on a log scale.
fn nearest_bias(bpm: f64, biases: &[f64]) -> f64 {
    *biases
        .iter()
        .min_by(|a, b| (bpm / **a).ln().abs().total_cmp(&(bpm / **b).ln().abs()))
        .unwrap()
}

fn beat_ground_truth() -> Outcome {
    let cfg = BeatConfig::default();
    let biases = PipelineConfig::default().tempo_biases;
    let duration = 30.0;
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for (k, bpm) in [60.0, 90.0, 120.0, 150.0, 180.0].into_iter().enumerate() {
        let sig = synth_click_track(bpm, duration, FS, 60 + k as u64).unwrap();
        let env = onset_envelope(&sig, cfg.frame_len, cfg.frame_hop, &cfg).unwrap();
        let bias = nearest_bias(bpm, &biases);
        let track = beat_track_for_bias(&env, bias, &cfg).unwrap();
        let truth = click_times(bpm, duration);
        let interior = &truth[1..truth.len() - 1];
        let near = |t: f64, set: &[f64]| set.iter().any(|&s| (s - t).abs() <= 0.015);
        let recall = interior.iter().filter(|&&t| near(t, &track.beat_times)).count() as f64 / interior.len() as f64;
        let found: Vec<f64> = track
            .beat_times
            .iter()
            .copied()
            .filter(|&t| t > truth[0] + 0.1 && t < truth[truth.len() - 1] - 0.1)
            .collect();
        let precision = if found.is_empty() {
            0.0
        } else {
            found.iter().filter(|&&t| near(t, &truth)).count() as f64 / found.len() as f64
        };
        worst = worst.min(recall).min(precision);
        parts.push(format!("{bpm:.0}@{bias:.0}: recall {:.1}% precision {:.1}%", recall * 100.0, precision * 100.0));
    }
    outcome(worst >= 0.95, parts.join(", "))
}

fn cover_retrieval(a: &[SongFeatures], b: &[SongFeatures]) -> Outcome {
    let truth: Vec<usize> = (0..CORPUS_SIZE).collect();
    let r = benchmark(a, b, &truth, &PipelineConfig::default()).unwrap();
    let ranks: Vec<usize> = r.queries.iter().map(|q| q.rank).collect();
    outcome(
        r.correct >= 7 && r.mean_rank <= 2.0,
        format!("{}/{} correct, mean rank {:.2}, ranks {ranks:?}", r.correct, r.total, r.mean_rank),
    )
}

fn mfcc_and_self_score(a: &[SongFeatures], b: &[SongFeatures]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mcfg = MfccConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.gen_range(2048..=11025);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let g: f64 = rng.gen_range(0.1..10.0);
        let y: Vec<f64> = x.iter().map(|v| v * g).collect();
        let cx = mfcc_window(&x, FS, &mcfg).unwrap();
        let cy = mfcc_window(&y, FS, &mcfg).unwrap();
        for k in 1..20 {
            worst = worst.max((cx[k] - cy[k]).abs());
        }
    }
    let cfg = PipelineConfig::default();
    let mut worst_ratio = f64::INFINITY;
    for f in a.iter().chain(b) {
        let s = score_pair(f, f, &cfg).unwrap().score;
        worst_ratio = worst_ratio.min(s / f.max_blocks() as f64);
    }
    outcome(
        worst < 1e-9 && worst_ratio >= 0.9,
        format!("max |dMFCC[1..19]| {worst:.2e} over 100 windows; min self-score / usable blocks {worst_ratio:.3} over {} songs", a.len() + b.len()),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        let line = format!(
            "acceptance {n} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        println!("{line}");
        std::io::stdout().flush().ok();
        results.push((n, name, o));
    };

    report(2, "SSM isometry invariance", isometry_invariance());
    report(3, "alignment oracle equivalence", alignment_oracle());
    report(5, "binarization contracts", binarization_contracts());
    report(6, "beat tracker ground truth", beat_ground_truth());

    let mut corpus = Corpus::build();
    let (fa, fb) = corpus.default_features();
    report(7, "synthetic cover retrieval", cover_retrieval(&fa, &fb));
    report(4, "transpose symmetry", transpose_symmetry(&fa, &fb));
    report(8, "MFCC gain invariance and self-score", mfcc_and_self_score(&fa, &fb));
    report(1, "parameter sweep grid", sweep_grid(&mut corpus));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance summary: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
