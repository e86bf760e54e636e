//! Dynamic-programming beat tracking.
//!
//! The onset envelope is the band-summed, half-wave rectified first
//! difference of a log mel spectrogram. A global tempo is picked from the
//! envelope autocorrelation under a log-Gaussian prior around a bias tempo,
//! then beats are placed by a dynamic program that trades onset strength
//! against deviation from that tempo.

use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};
use crate::spectral::{MelFilterbank, PowerSpectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeatConfig {
    pub n_mels: usize,
    /// seconds
    pub frame_len: f64,
    /// seconds
    pub frame_hop: f64,
    pub log_floor: f64,
    /// Width of the moving average subtracted from the raw flux, seconds.
    pub local_mean_window: f64,
    pub tightness: f64,
    pub tempo_sigma_octaves: f64,
    pub min_period: f64,
    pub max_period: f64,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            n_mels: 40,
            frame_len: 0.046,
            frame_hop: 0.010,
            log_floor: 1e-10,
            local_mean_window: 1.0,
            tightness: 100.0,
            tempo_sigma_octaves: 1.0,
            min_period: 0.2,
            max_period: 2.0,
        }
    }
}

/// Per-frame onset strength.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetEnvelope {
    values: Vec<f64>,
    hop_samples: usize,
    len_samples: usize,
    sample_rate: u32,
    duration: f64,
}

impl OnsetEnvelope {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Seconds between frames.
    pub fn frame_hop(&self) -> f64 {
        self.hop_samples as f64 / self.sample_rate as f64
    }

    pub fn frame_rate(&self) -> f64 {
        1.0 / self.frame_hop()
    }

    /// Duration of the analysed signal in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Time in seconds attributed to frame `i`: the middle of the newest hop
    /// of samples to enter the frame, since positive flux measures energy
    /// that just arrived.
    pub fn frame_time(&self, i: usize) -> f64 {
        let centre = i * self.hop_samples + self.len_samples;
        (centre as f64 - self.hop_samples as f64 / 2.0) / self.sample_rate as f64
    }
}

/// Band-summed positive log-mel flux, locally mean-subtracted and rectified.
pub fn onset_envelope(
    signal: &AudioSignal,
    frame_len: f64,
    frame_hop: f64,
    cfg: &BeatConfig,
) -> Result<OnsetEnvelope> {
    if !(frame_hop > 0.0 && frame_len >= frame_hop) {
        return Err(Error::InvalidArgument(format!(
            "need frame_len >= frame_hop > 0 (got {frame_len}, {frame_hop})"
        )));
    }
    let fs = signal.sample_rate() as f64;
    let len_samples = (frame_len * fs).round() as usize;
    let hop_samples = ((frame_hop * fs).round() as usize).max(1);
    if signal.len() < len_samples || len_samples == 0 {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            frame: len_samples,
        });
    }
    let n_frames = (signal.len() - len_samples) / hop_samples + 1;

    let mut spec = PowerSpectrum::new(len_samples);
    let bank = MelFilterbank::new(cfg.n_mels, spec.fft_len(), fs, 0.0, fs / 2.0);
    let mut power = vec![0.0; spec.n_bins()];
    let mut mel = vec![0.0; cfg.n_mels];
    let mut prev = vec![0.0; cfg.n_mels];
    let mut flux = Vec::with_capacity(n_frames);

    let samples = signal.samples();
    for i in 0..n_frames {
        let start = i * hop_samples;
        spec.compute(&samples[start..start + len_samples], &mut power);
        bank.apply(&power, &mut mel);
        for m in mel.iter_mut() {
            *m = m.max(cfg.log_floor).ln();
        }
        let f = if i == 0 {
            0.0
        } else {
            mel.iter().zip(&prev).map(|(c, p)| (c - p).max(0.0)).sum()
        };
        flux.push(f);
        std::mem::swap(&mut mel, &mut prev);
    }

    let half = ((cfg.local_mean_window / frame_hop) / 2.0).round() as usize;
    let values = subtract_local_mean(&flux, half);

    Ok(OnsetEnvelope {
        values,
        hop_samples,
        len_samples,
        sample_rate: signal.sample_rate(),
        duration: signal.duration(),
    })
}

fn subtract_local_mean(x: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            (x[i] - mean).max(0.0)
        })
        .collect()
}

/// Outcome of tempo estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoEstimate {
    /// Beat period in seconds.
    pub period: f64,
    /// Set when the envelope carried no periodicity and the bias period was
    /// returned unchanged.
    pub no_rhythm: bool,
}

/// Global tempo from the autocorrelation of the envelope, weighted by a
/// log-Gaussian window centred on the bias period.
pub fn estimate_tempo(env: &OnsetEnvelope, bias_bpm: f64, cfg: &BeatConfig) -> Result<TempoEstimate> {
    if env.is_empty() {
        return Err(Error::Empty("onset envelope"));
    }
    if !(30.0..=300.0).contains(&bias_bpm) {
        return Err(Error::InvalidArgument(format!(
            "bias tempo {bias_bpm} BPM outside [30, 300]"
        )));
    }
    let bias_period = 60.0 / bias_bpm;
    let fallback = TempoEstimate {
        period: bias_period,
        no_rhythm: true,
    };
    let x = env.values();
    if x.iter().all(|&v| v == 0.0) {
        return Ok(fallback);
    }

    let hop = env.frame_hop();
    let min_lag = (cfg.min_period / hop).ceil() as usize;
    let max_lag = ((cfg.max_period / hop).floor() as usize).min(x.len().saturating_sub(1));
    if min_lag > max_lag {
        return Ok(fallback);
    }

    let weighted: Vec<f64> = (min_lag..=max_lag)
        .map(|lag| {
            let ac: f64 = x[..x.len() - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            let octaves = (lag as f64 * hop / bias_period).log2() / cfg.tempo_sigma_octaves;
            ac * (-0.5 * octaves * octaves).exp()
        })
        .collect();

    let (best, &peak) = weighted
        .iter()
        .enumerate()
        .fold((0, &f64::MIN), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    if peak <= 0.0 {
        return Ok(fallback);
    }

    // parabolic refinement of the peak lag
    let mut lag = (best + min_lag) as f64;
    if best > 0 && best + 1 < weighted.len() {
        let (a, b, c) = (weighted[best - 1], weighted[best], weighted[best + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            lag += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let period = (lag * hop).clamp(cfg.min_period, cfg.max_period);
    Ok(TempoEstimate {
        period,
        no_rhythm: false,
    })
}

/// Beat onset times for one tempo-bias level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTrack {
    pub beat_times: Vec<f64>,
    pub bias_bpm: f64,
    pub mean_period: f64,
    pub no_rhythm: bool,
}

impl BeatTrack {
    pub fn new(beat_times: Vec<f64>, bias_bpm: f64, fallback_period: f64) -> Self {
        let mean_period = if beat_times.len() >= 2 {
            (beat_times[beat_times.len() - 1] - beat_times[0]) / (beat_times.len() - 1) as f64
        } else {
            fallback_period
        };
        Self {
            beat_times,
            bias_bpm,
            mean_period,
            no_rhythm: false,
        }
    }

    /// Number of beat intervals (one less than the number of beats).
    pub fn n_intervals(&self) -> usize {
        self.beat_times.len().saturating_sub(1)
    }
}

fn evenly_spaced(period: f64, duration: f64) -> Vec<f64> {
    let n = (duration / period).floor() as usize;
    (0..=n).map(|k| k as f64 * period).filter(|&t| t <= duration).collect()
}

/// Place beats by dynamic programming over the envelope at period `period`.
pub fn track_beats(env: &OnsetEnvelope, period: f64, cfg: &BeatConfig) -> Result<Vec<f64>> {
    if env.is_empty() {
        return Err(Error::Empty("onset envelope"));
    }
    if !(cfg.min_period - 1e-9..=cfg.max_period + 1e-9).contains(&period) {
        return Err(Error::InvalidArgument(format!(
            "period {period} s outside [{}, {}]",
            cfg.min_period, cfg.max_period
        )));
    }
    let x = env.values();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        return Ok(evenly_spaced(period, env.duration()));
    }

    let tau = period / env.frame_hop();
    let kernel_half = tau.round() as isize;
    let kernel: Vec<f64> = (-kernel_half..=kernel_half)
        .map(|k| (-0.5 * (k as f64 * 32.0 / tau).powi(2)).exp())
        .collect();
    let local: Vec<f64> = (0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(k, w)| {
                    let j = i + k as isize - kernel_half;
                    (0..n as isize).contains(&j).then(|| w * x[j as usize] / std)
                })
                .sum()
        })
        .collect();

    let min_back = (tau / 2.0).ceil().max(1.0) as usize;
    let max_back = ((2.0 * tau).floor() as usize).max(min_back);
    let tx_weight: Vec<f64> = (min_back..=max_back)
        .map(|d| -cfg.tightness * (d as f64 / tau).ln().powi(2))
        .collect();

    let local_max = local.iter().cloned().fold(f64::MIN, f64::max);
    let mut cum = vec![0.0; n];
    let mut backlink: Vec<Option<usize>> = vec![None; n];
    let mut starting = true;
    for i in 0..n {
        // predecessors before frame 0 count as a fresh start with zero score
        let mut best = f64::MIN;
        let mut best_pred = None;
        for (w, d) in tx_weight.iter().zip(min_back..=max_back) {
            let (score, pred) = if d > i { (*w, None) } else { (w + cum[i - d], Some(i - d)) };
            if score > best {
                best = score;
                best_pred = pred;
            }
        }
        cum[i] = local[i] + best;
        if starting && local[i] < 0.01 * local_max {
            backlink[i] = None;
        } else {
            backlink[i] = best_pred;
            starting = false;
        }
    }

    let last = last_beat(&cum);
    let mut frames = vec![last];
    while let Some(prev) = backlink[*frames.last().unwrap()] {
        frames.push(prev);
    }
    frames.reverse();

    // drop weak leading/trailing beats
    let rms = (frames.iter().map(|&f| local[f].powi(2)).sum::<f64>() / frames.len() as f64).sqrt();
    let threshold = 0.5 * rms;
    let first_strong = frames.iter().position(|&f| local[f] >= threshold);
    let last_strong = frames.iter().rposition(|&f| local[f] >= threshold);
    if let (Some(a), Some(b)) = (first_strong, last_strong) {
        frames = frames[a..=b].to_vec();
    }

    let duration = env.duration();
    let times: Vec<f64> = frames
        .iter()
        .map(|&f| env.frame_time(f).clamp(0.0, duration))
        .collect();
    if times.len() < 2 {
        return Ok(evenly_spaced(period, duration));
    }
    Ok(times)
}

fn last_beat(cum: &[f64]) -> usize {
    let n = cum.len();
    let maxima: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || cum[i] > cum[i - 1];
            let right = i + 1 == n || cum[i] >= cum[i + 1];
            left && right
        })
        .collect();
    if maxima.is_empty() {
        return n - 1;
    }
    let mut vals: Vec<f64> = maxima.iter().map(|&i| cum[i]).collect();
    vals.sort_by(f64::total_cmp);
    let median = vals[vals.len() / 2];
    maxima
        .iter()
        .rev()
        .copied()
        .find(|&i| cum[i] >= 0.5 * median)
        .unwrap_or(n - 1)
}

/// Envelope, tempo and beats for one bias level.
pub fn beat_track_for_bias(
    env: &OnsetEnvelope,
    bias_bpm: f64,
    cfg: &BeatConfig,
) -> Result<BeatTrack> {
    let tempo = estimate_tempo(env, bias_bpm, cfg)?;
    let times = if tempo.no_rhythm {
        evenly_spaced(tempo.period, env.duration())
    } else {
        track_beats(env, tempo.period, cfg)?
    };
    let mut track = BeatTrack::new(times, bias_bpm, tempo.period);
    track.no_rhythm = tempo.no_rhythm;
    Ok(track)
}
