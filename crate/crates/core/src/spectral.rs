//! Shared spectral machinery: Hann-windowed power spectra, a triangular mel
//! filterbank, and an orthonormal DCT-II.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Smallest 7-smooth integer `>= n`, so FFT lengths stay cheap.
pub fn fft_size_for(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// One triangular filter stored as a dense run of bin weights.
#[derive(Debug, Clone)]
struct MelFilter {
    first_bin: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MelFilterbank {
    filters: Vec<MelFilter>,
}

impl MelFilterbank {
    /// Triangular filters with peaks evenly spaced on the mel scale between
    /// `fmin` and `fmax`. A filter narrower than the bin spacing gets weight
    /// 1 on the bin nearest its centre, so no band is ever empty.
    pub fn new(n_mels: usize, fft_len: usize, sample_rate: f64, fmin: f64, fmax: f64) -> Self {
        let n_bins = fft_len / 2 + 1;
        let bin_hz = sample_rate / fft_len as f64;
        let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
            .collect();

        let filters = (0..n_mels)
            .map(|m| {
                let (lo, centre, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let first = ((lo / bin_hz).ceil().max(0.0) as usize).min(n_bins - 1);
                let last = ((hi / bin_hz).floor() as usize).min(n_bins - 1);
                let mut weights: Vec<f64> = (first..=last.max(first))
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= centre {
                            if centre > lo {
                                (f - lo) / (centre - lo)
                            } else {
                                0.0
                            }
                        } else if hi > centre {
                            (hi - f) / (hi - centre)
                        } else {
                            0.0
                        }
                    })
                    .map(|w| w.max(0.0))
                    .collect();
                if weights.iter().all(|&w| w == 0.0) {
                    let nearest = ((centre / bin_hz).round() as usize).min(n_bins - 1);
                    return MelFilter {
                        first_bin: nearest,
                        weights: vec![1.0],
                    };
                }
                // trim leading zeros
                let lead = weights.iter().take_while(|&&w| w == 0.0).count();
                weights.drain(..lead);
                MelFilter {
                    first_bin: first + lead,
                    weights,
                }
            })
            .collect();
        Self { filters }
    }

    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (filter, o) in self.filters.iter().zip(out.iter_mut()) {
            *o = power[filter.first_bin..]
                .iter()
                .zip(&filter.weights)
                .map(|(p, w)| p * w)
                .sum();
        }
    }
}

/// Orthonormal DCT-II, truncated to the first `n_out` coefficients.
#[derive(Debug, Clone)]
pub struct Dct2 {
    n_in: usize,
    basis: Vec<f64>,
}

impl Dct2 {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        let mut basis = Vec::with_capacity(n_in * n_out);
        for k in 0..n_out {
            let scale = if k == 0 {
                (1.0 / n_in as f64).sqrt()
            } else {
                (2.0 / n_in as f64).sqrt()
            };
            for n in 0..n_in {
                basis.push(scale * (PI * k as f64 * (2 * n + 1) as f64 / (2 * n_in) as f64).cos());
            }
        }
        Self { n_in, basis }
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (row, o) in self.basis.chunks_exact(self.n_in).zip(out.iter_mut()) {
            *o = row.iter().zip(input).map(|(b, x)| b * x).sum();
        }
    }
}

/// Hann-windowed power spectrum of frames of a fixed length, zero-padded to
/// a 7-smooth FFT size.
pub struct PowerSpectrum {
    frame_len: usize,
    window: Vec<f64>,
    fft: Arc<dyn RealToComplex<f64>>,
    input: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl PowerSpectrum {
    pub fn new(frame_len: usize) -> Self {
        let fft_len = fft_size_for(frame_len);
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(fft_len);
        let input = fft.make_input_vec();
        let spectrum = fft.make_output_vec();
        let scratch = fft.make_scratch_vec();
        Self {
            frame_len,
            window: hann(frame_len),
            fft,
            input,
            spectrum,
            scratch,
        }
    }

    pub fn fft_len(&self) -> usize {
        self.input.len()
    }

    pub fn n_bins(&self) -> usize {
        self.spectrum.len()
    }

    /// `frame` must have exactly `frame_len` samples.
    pub fn compute(&mut self, frame: &[f64], power: &mut [f64]) {
        debug_assert_eq!(frame.len(), self.frame_len);
        for ((dst, &x), &w) in self.input.iter_mut().zip(frame).zip(&self.window) {
            *dst = x * w;
        }
        self.input[self.frame_len..].fill(0.0);
        self.fft
            .process_with_scratch(&mut self.input, &mut self.spectrum, &mut self.scratch)
            .expect("fft buffer sizes are fixed at construction");
        for (p, c) in power.iter_mut().zip(&self.spectrum) {
            *p = c.norm_sqr();
        }
    }
}
