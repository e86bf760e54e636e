use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use timbre_shape::audio::{load_audio, write_wav_pcm16, AudioSignal};
use timbre_shape::Error;

fn sine(n: usize, fs: f64, freq: f64, amp: f64) -> Vec<f64> {
    (0..n).map(|k| amp * (2.0 * PI * freq * k as f64 / fs).sin()).collect()
}

fn write_pcm16(path: &Path, channels: u16, frames: &[Vec<f64>]) {
    let spec = WavSpec { channels, sample_rate: 22050, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut w = WavWriter::create(path, spec).unwrap();
    for frame in frames {
        for &x in frame {
            w.write_sample((x * 32768.0).round() as i16).unwrap();
        }
    }
    w.finalize().unwrap();
}

#[test]
fn mono_pcm16_sine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sine.wav");
    let x = sine(22050, 22050.0, 440.0, 0.5);
    write_pcm16(&path, 1, &x.iter().map(|&v| vec![v]).collect::<Vec<_>>());
    let sig = load_audio(&path).unwrap();
    assert_eq!(sig.len(), 22050);
    assert_eq!(sig.sample_rate(), 22050);
    for (a, b) in sig.samples().iter().zip(&x) {
        assert!((a - b).abs() <= 1.0 / 32768.0);
    }
    let peak = sig.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 0.5).abs() < 1e-3);
}

#[test]
fn stereo_with_equal_channels_matches_mono() {
    let dir = tempfile::tempdir().unwrap();
    let x = sine(5000, 22050.0, 300.0, 0.7);
    let mono = dir.path().join("m.wav");
    let stereo = dir.path().join("s.wav");
    write_pcm16(&mono, 1, &x.iter().map(|&v| vec![v]).collect::<Vec<_>>());
    write_pcm16(&stereo, 2, &x.iter().map(|&v| vec![v, v]).collect::<Vec<_>>());
    assert_eq!(load_audio(&mono).unwrap(), load_audio(&stereo).unwrap());
}

#[test]
fn float32_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.wav");
    let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 32, sample_format: SampleFormat::Float };
    let mut w = WavWriter::create(&path, spec).unwrap();
    for v in [0.25f32, -0.5, 0.125] {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
    let sig = load_audio(&path).unwrap();
    assert_eq!(sig.samples(), &[0.25, -0.5, 0.125]);
    assert_eq!(sig.sample_rate(), 16000);
}

#[test]
fn empty_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.wav");
    write_pcm16(&path, 1, &[]);
    let err = load_audio(&path).unwrap_err();
    assert!(matches!(err, Error::EmptyAudio));
    assert_eq!(err.to_string(), "zero-length audio");
}

#[test]
fn unsupported_depth_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u8.wav");
    let spec = WavSpec { channels: 1, sample_rate: 22050, bits_per_sample: 8, sample_format: SampleFormat::Int };
    let mut w = WavWriter::create(&path, spec).unwrap();
    w.write_sample(3i8).unwrap();
    w.finalize().unwrap();
    assert!(matches!(load_audio(&path), Err(Error::UnsupportedFormat(_))));
    assert!(matches!(load_audio(dir.path().join("nope.wav")), Err(Error::Io(_))));
}

#[test]
fn pcm16_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.wav");
    let sig = AudioSignal::new(sine(1000, 22050.0, 1000.0, 0.9), 22050).unwrap();
    write_wav_pcm16(&path, &sig).unwrap();
    let back = load_audio(&path).unwrap();
    for (a, b) in back.samples().iter().zip(sig.samples()) {
        assert!((a - b).abs() < 2.0 / 32768.0);
    }
}
