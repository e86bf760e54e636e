//! Synthetic audio with known ground truth: click tracks, tone "songs" and
//! controlled cover transformations.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav_pcm16, AudioSignal};
use crate::error::{Error, Result};

/// Number of rhythm subdivisions per beat.
pub const SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timbre {
    Sine,
    Sawtooth,
    Square,
    NoiseBurst,
}

/// Per-beat percussion mask. Bits `0..4` put a short noise hit on the
/// matching sixteenth, bits `4..8` put a low thump there.
pub type BeatMask = u8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub beats: usize,
    /// Fundamentals in Hz.
    pub chord: Vec<f64>,
    /// Cycled over the section's beats.
    pub rhythm: Vec<BeatMask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongSpec {
    pub sections: Vec<Section>,
    pub tempo_bpm: f64,
    pub timbre: Timbre,
    pub gain: f64,
}

impl SongSpec {
    pub fn total_beats(&self) -> usize {
        self.sections.iter().map(|s| s.beats).sum()
    }

    pub fn beat_period(&self) -> f64 {
        60.0 / self.tempo_bpm
    }

    pub fn duration(&self) -> f64 {
        self.total_beats() as f64 * self.beat_period()
    }

    pub fn validate(&self) -> Result<()> {
        if !(40.0..=240.0).contains(&self.tempo_bpm) {
            return Err(Error::InvalidArgument(format!(
                "tempo {} BPM outside [40, 240]",
                self.tempo_bpm
            )));
        }
        if self.sections.len() < 2 {
            return Err(Error::InvalidArgument("a song needs at least 2 sections".into()));
        }
        if self.sections.iter().any(|s| s.beats == 0 || s.rhythm.is_empty()) {
            return Err(Error::InvalidArgument("empty section or rhythm".into()));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidArgument("gain must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverTransform {
    pub tempo_factor: f64,
    pub transpose_semitones: f64,
    pub new_timbre: Option<Timbre>,
    pub gain_factor: f64,
    pub prepend_intro_beats: usize,
}

impl Default for CoverTransform {
    fn default() -> Self {
        Self {
            tempo_factor: 1.0,
            transpose_semitones: 0.0,
            new_timbre: None,
            gain_factor: 1.0,
            prepend_intro_beats: 0,
        }
    }
}

impl CoverTransform {
    /// Tempo x1.25, up three semitones, sine to sawtooth, half gain.
    pub fn standard() -> Self {
        Self {
            tempo_factor: 1.25,
            transpose_semitones: 3.0,
            new_timbre: Some(Timbre::Sawtooth),
            gain_factor: 0.5,
            prepend_intro_beats: 0,
        }
    }
}

/// Apply a cover transformation to a spec.
pub fn make_cover(spec: &SongSpec, t: &CoverTransform) -> Result<SongSpec> {
    let tempo = spec.tempo_bpm * t.tempo_factor;
    if !(40.0..=240.0).contains(&tempo) {
        return Err(Error::InvalidArgument(format!("cover tempo {tempo} BPM outside [40, 240]")));
    }
    let ratio = 2f64.powf(t.transpose_semitones / 12.0);
    let mut sections: Vec<Section> = spec
        .sections
        .iter()
        .map(|s| Section {
            beats: s.beats,
            chord: s.chord.iter().map(|f| f * ratio).collect(),
            rhythm: s.rhythm.clone(),
        })
        .collect();
    if t.prepend_intro_beats > 0 {
        let intro = Section {
            beats: t.prepend_intro_beats,
            chord: sections[0].chord.iter().map(|f| f * 0.5).collect(),
            rhythm: vec![0b0000_0001],
        };
        sections.insert(0, intro);
    }
    Ok(SongSpec {
        sections,
        tempo_bpm: tempo,
        timbre: t.new_timbre.unwrap_or(spec.timbre),
        gain: spec.gain * t.gain_factor,
    })
}

fn noise_burst(rng: &mut ChaCha8Rng, len: usize, decay: f64, amp: f64) -> Vec<f64> {
    (0..len)
        .map(|k| amp * (-(k as f64) / decay).exp() * rng.gen_range(-1.0..1.0))
        .collect()
}

fn mix_at(out: &mut [f64], at: usize, src: &[f64]) {
    for (o, s) in out.iter_mut().skip(at).zip(src) {
        *o += s;
    }
}

/// 5 ms exponentially decaying noise bursts at every beat on silence.
pub fn synth_click_track(bpm: f64, duration: f64, fs: u32, seed: u64) -> Result<AudioSignal> {
    if !(30.0..=300.0).contains(&bpm) {
        return Err(Error::InvalidArgument(format!("tempo {bpm} BPM outside [30, 300]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration * fs as f64).round() as usize;
    let mut out = vec![0.0; n];
    let burst_len = (0.005 * fs as f64).round() as usize;
    let decay = 0.001 * fs as f64;
    for t in click_times(bpm, duration) {
        let at = (t * fs as f64).round() as usize;
        let mut burst = noise_burst(&mut rng, burst_len, decay, 0.9);
        burst[0] = 0.9;
        mix_at(&mut out, at, &burst);
    }
    AudioSignal::new(out, fs)
}

/// Beat times of a click track of `duration` seconds.
pub fn click_times(bpm: f64, duration: f64) -> Vec<f64> {
    let period = 60.0 / bpm;
    (0..)
        .map(|k| k as f64 * period)
        .take_while(|&t| t < duration - 1e-9)
        .collect()
}

/// One band-limited cycle of a waveform at `freq`, tabulated.
struct Wavetable {
    table: Vec<f64>,
}

const TABLE_LEN: usize = 4096;

impl Wavetable {
    fn new(timbre: Timbre, freq: f64, fs: f64) -> Self {
        let max_harm = ((fs / 2.0) / freq).floor().max(1.0) as usize;
        let harmonics: Vec<(usize, f64)> = match timbre {
            Timbre::Sine | Timbre::NoiseBurst => vec![(1, 1.0)],
            Timbre::Sawtooth => (1..=max_harm.min(60)).map(|k| (k, 1.0 / k as f64)).collect(),
            Timbre::Square => (1..=max_harm.min(60))
                .step_by(2)
                .map(|k| (k, 1.0 / k as f64))
                .collect(),
        };
        let mut table: Vec<f64> = (0..TABLE_LEN)
            .map(|n| {
                let ph = 2.0 * PI * n as f64 / TABLE_LEN as f64;
                harmonics.iter().map(|&(k, a)| a * (k as f64 * ph).sin()).sum()
            })
            .collect();
        let peak = table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        table.iter_mut().for_each(|v| *v /= peak);
        Self { table }
    }

    fn at(&self, phase: f64) -> f64 {
        let x = phase.rem_euclid(1.0) * TABLE_LEN as f64;
        let i = x.floor() as usize % TABLE_LEN;
        let frac = x - x.floor();
        let a = self.table[i];
        let b = self.table[(i + 1) % TABLE_LEN];
        a + frac * (b - a)
    }
}

/// Render a spec deterministically.
///
/// Each beat re-triggers the section's chord with a short attack and a decay
/// tied to the beat period; percussion follows the section's rhythm masks.
/// The result is peak-normalised to `0.9 * gain`.
pub fn render_song(spec: &SongSpec, fs: u32, seed: u64) -> Result<AudioSignal> {
    spec.validate()?;
    let fsf = fs as f64;
    let period = spec.beat_period();
    let n = (spec.duration() * fsf).round() as usize;
    let mut out = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let attack = 0.005 * fsf;
    let decay = 0.35 * period * fsf;
    let note_len = (0.95 * period * fsf) as usize;
    let release = 0.02 * fsf;

    let hat_len = (0.080 * fsf) as usize;
    let thump_len = (0.120 * fsf) as usize;

    let mut beat = 0usize;
    for section in &spec.sections {
        let tones: Vec<(Wavetable, Vec<(f64, f64)>)> = section
            .chord
            .iter()
            .map(|&f| {
                let partials = if spec.timbre == Timbre::NoiseBurst {
                    (0..6)
                        .map(|_| (f * (1.0 + rng.gen_range(-0.03..0.03)), rng.gen_range(0.0..1.0)))
                        .collect()
                } else {
                    vec![(f, 0.0)]
                };
                (Wavetable::new(spec.timbre, f, fsf), partials)
            })
            .collect();
        let voice_amp = 0.2 / section.chord.len().max(1) as f64;

        for b in 0..section.beats {
            let start = (beat as f64 * period * fsf).round() as usize;
            for (table, partials) in &tones {
                let amp = voice_amp / partials.len() as f64;
                for k in 0..note_len.min(n.saturating_sub(start)) {
                    let tail = ((note_len - k) as f64 / release).min(1.0);
                    let env = (k as f64 / attack).min(1.0) * tail * (-(k as f64) / decay).exp();
                    let t = k as f64 / fsf;
                    let s: f64 = partials.iter().map(|&(f, ph)| table.at(f * t + ph)).sum();
                    out[start + k] += amp * env * s;
                }
            }

            let mask = section.rhythm[b % section.rhythm.len()];
            for sub in 0..SUBDIVISIONS {
                let at = start + (sub as f64 * period / SUBDIVISIONS as f64 * fsf).round() as usize;
                if mask & (1 << sub) != 0 {
                    let hit = noise_burst(&mut rng, hat_len, 0.015 * fsf, if sub == 0 { 0.6 } else { 0.3 });
                    mix_at(&mut out, at, &hit);
                }
                if mask & (1 << (sub + 4)) != 0 {
                    let thump: Vec<f64> = (0..thump_len)
                        .map(|k| {
                            let t = k as f64 / fsf;
                            let f = 50.0 + 90.0 * (-t / 0.03).exp();
                            0.8 * (-t / 0.05).exp() * (2.0 * PI * f * t).sin()
                        })
                        .collect();
                    mix_at(&mut out, at, &thump);
                }
            }
            beat += 1;
        }
    }

    // faint background noise keeps quiet passages off the log floor
    for o in out.iter_mut() {
        *o += 1e-3 * rng.gen_range(-1.0..1.0);
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = 0.9 * spec.gain / peak;
        out.iter_mut().for_each(|v| *v *= scale);
    }
    AudioSignal::new(out, fs)
}

/// A random song spec drawn from `seed`: 4 to 6 sections with triads on
/// random roots and random percussion patterns.
pub fn random_song_spec(seed: u64) -> SongSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tempo_bpm = rng.gen_range(88.0..132.0);
    let n_sections = rng.gen_range(4..=6);
    let sections = (0..n_sections)
        .map(|_| {
            let root = 110.0 * 2f64.powf(rng.gen_range(0..12) as f64 / 12.0);
            let third = if rng.gen_bool(0.5) { 4.0 } else { 3.0 };
            let chord = [0.0, third, 7.0]
                .iter()
                .map(|st| root * 2f64.powf(st / 12.0))
                .collect();
            let pattern_len = [2, 3, 4][rng.gen_range(0..3)];
            let rhythm = (0..pattern_len)
                .map(|_| {
                    let mut mask = 0b0001_0001u8;
                    for sub in 0..SUBDIVISIONS {
                        if rng.gen_bool(0.4) {
                            mask |= 1 << sub;
                        }
                        if sub > 0 && rng.gen_bool(0.25) {
                            mask |= 1 << (sub + 4);
                        }
                    }
                    mask
                })
                .collect();
            Section {
                beats: [6, 8, 10][rng.gen_range(0..3)],
                chord,
                rhythm,
            }
        })
        .collect();
    SongSpec {
        sections,
        tempo_bpm,
        timbre: Timbre::Sine,
        gain: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub index: usize,
    pub file_a: String,
    pub file_b: String,
    pub spec_a: SongSpec,
    pub spec_b: SongSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sample_rate: u32,
    pub transform: CoverTransform,
    pub songs: Vec<CorpusEntry>,
    /// `truth[i]` is the index in set B of the cover of song `i` in set A.
    pub truth: Vec<usize>,
}

/// Specs for `n` originals and their covers.
pub fn corpus_specs(n: usize, seed: u64, transform: &CoverTransform) -> Result<Vec<(SongSpec, SongSpec)>> {
    (0..n)
        .map(|i| {
            let a = random_song_spec(seed.wrapping_mul(1000).wrapping_add(i as u64));
            let b = make_cover(&a, transform)?;
            Ok((a, b))
        })
        .collect()
}

/// An original, its cover, and their rendered audio.
pub struct RenderedPair {
    pub original: SongSpec,
    pub cover: SongSpec,
    /// Seed of the original; the cover uses `seed + 1`.
    pub seed: u64,
    pub a: AudioSignal,
    pub b: AudioSignal,
}

/// Render `n` originals and covers in memory.
pub fn render_corpus(n: usize, seed: u64, transform: &CoverTransform, fs: u32) -> Result<Vec<RenderedPair>> {
    corpus_specs(n, seed, transform)?
        .into_iter()
        .enumerate()
        .map(|(i, (original, cover))| {
            let song_seed = seed.wrapping_mul(7919).wrapping_add(i as u64);
            let a = render_song(&original, fs, song_seed)?;
            let b = render_song(&cover, fs, song_seed.wrapping_add(1))?;
            Ok(RenderedPair {
                original,
                cover,
                seed: song_seed,
                a,
                b,
            })
        })
        .collect()
}

/// Render a corpus to `dir`: `A/`, `B/`, `setA.txt`, `setB.txt`,
/// `truth.json` and `manifest.json`.
pub fn write_corpus(
    dir: &Path,
    n: usize,
    seed: u64,
    transform: &CoverTransform,
    fs: u32,
) -> Result<CorpusManifest> {
    fs::create_dir_all(dir.join("A"))?;
    fs::create_dir_all(dir.join("B"))?;
    let mut songs = Vec::with_capacity(n);
    for (i, pair) in render_corpus(n, seed, transform, fs)?.into_iter().enumerate() {
        let file_a = format!("A/song_{i:03}.wav");
        let file_b = format!("B/song_{i:03}.wav");
        write_wav_pcm16(dir.join(&file_a), &pair.a)?;
        write_wav_pcm16(dir.join(&file_b), &pair.b)?;
        songs.push(CorpusEntry {
            index: i,
            file_a,
            file_b,
            spec_a: pair.original,
            spec_b: pair.cover,
            seed: pair.seed,
        });
    }
    let truth: Vec<usize> = (0..n).collect();
    let list = |f: fn(&CorpusEntry) -> &String| {
        songs.iter().map(|s| format!("{}\n", f(s))).collect::<String>()
    };
    fs::write(dir.join("setA.txt"), list(|s| &s.file_a))?;
    fs::write(dir.join("setB.txt"), list(|s| &s.file_b))?;
    fs::write(dir.join("truth.json"), serde_json::to_string(&truth)?)?;
    let manifest = CorpusManifest {
        sample_rate: fs,
        transform: transform.clone(),
        songs,
        truth,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
