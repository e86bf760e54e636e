//! Audio loading and conditioning.
//!
//! Everything downstream works on a mono `f64` buffer at one canonical rate
//! ([`CANONICAL_SAMPLE_RATE`]). WAV files (PCM16 or IEEE float32, mono or
//! stereo) are decoded with `hound`; stereo is folded to mono by averaging.

use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const CANONICAL_SAMPLE_RATE: u32 = 22050;

/// A mono sample buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// The sub-slice `[start, end)` in sample indices, clamped to the buffer.
    pub fn slice(&self, start: usize, end: usize) -> &[f64] {
        let end = end.min(self.samples.len());
        &self.samples[start.min(end)..end]
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Per-sample arithmetic mean of two channels.
pub fn downmix(left: &[f64], right: &[f64]) -> Vec<f64> {
    left.iter().zip(right).map(|(l, r)| (l + r) * 0.5).collect()
}

/// Load a RIFF/WAVE file as a mono signal at its native rate.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(|e| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Wav(other),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{fmt:?} {bits}-bit")));
        }
    };
    if interleaved.len() < channels {
        return Err(Error::EmptyAudio);
    }
    let samples = if channels == 2 {
        let (l, r): (Vec<f64>, Vec<f64>) = interleaved
            .chunks_exact(2)
            .map(|frame| (frame[0], frame[1]))
            .unzip();
        downmix(&l, &r)
    } else {
        interleaved
    };
    let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    AudioSignal::new(samples, spec.sample_rate)
}

/// Write a mono 16-bit PCM WAV file.
pub fn write_wav_pcm16(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Load and resample to `rate` in one step.
pub fn load_at_rate(path: impl AsRef<Path>, rate: u32) -> Result<AudioSignal> {
    let sig = load_audio(path)?;
    resample(&sig, rate)
}

const SINC_ZERO_CROSSINGS: f64 = 32.0;
const SINC_ROLLOFF: f64 = 0.97;

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// Output length is `round(len * target / source)`. Samples outside the
/// input are treated as zero, so the first and last few milliseconds carry
/// edge effects.
pub fn resample(signal: &AudioSignal, target_rate: u32) -> Result<AudioSignal> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    let src_rate = signal.sample_rate;
    if src_rate == target_rate {
        return Ok(signal.clone());
    }
    let input = &signal.samples;
    let ratio = target_rate as f64 / src_rate as f64;
    let out_len = (input.len() as f64 * ratio).round() as usize;
    // cutoff in cycles per input sample
    let cutoff = 0.5 * ratio.min(1.0) * SINC_ROLLOFF;
    let half_width = SINC_ZERO_CROSSINGS / (2.0 * cutoff);
    let step = 1.0 / ratio;

    let out = (0..out_len)
        .map(|n| {
            let centre = n as f64 * step;
            let lo = (centre - half_width).ceil().max(0.0) as usize;
            let hi = ((centre + half_width).floor() as isize).min(input.len() as isize - 1);
            if hi < lo as isize {
                return 0.0;
            }
            let mut acc = 0.0;
            for (k, &x) in input.iter().enumerate().take(hi as usize + 1).skip(lo) {
                let t = k as f64 - centre;
                acc += x * windowed_sinc(t, cutoff, half_width);
            }
            acc
        })
        .collect();
    AudioSignal::new(out, target_rate)
}

fn windowed_sinc(t: f64, cutoff: f64, half_width: f64) -> f64 {
    if t.abs() >= half_width {
        return 0.0;
    }
    let x = 2.0 * cutoff * t;
    let sinc = if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    };
    // Blackman over [-half_width, half_width]
    let u = (t + half_width) / (2.0 * half_width);
    let w = 0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos();
    2.0 * cutoff * sinc * w
}
