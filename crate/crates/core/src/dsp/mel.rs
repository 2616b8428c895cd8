//! Log-mel analysis used to produce vocoder inputs from audio.

use super::stft::{stft, StftConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Floor applied before the natural log.
pub const LOG_FLOOR: f32 = 1e-5;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
        }
    }
}

impl MelConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.n_mels == 0 || !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= nyquist)
        {
            return Err(Error::Config(format!(
                "invalid mel band edges: need 0 ≤ fmin ({}) < fmax ({}) ≤ {nyquist}, n_mels {}",
                self.fmin, self.fmax, self.n_mels
            )));
        }
        Ok(())
    }

    /// Corner frequencies (Hz) of the triangles: `n_mels + 2` points evenly
    /// spaced on the HTK mel scale.
    pub fn band_edges(&self) -> Vec<f64> {
        let (lo, hi) = (hz_to_mel(self.fmin), hz_to_mel(self.fmax));
        let n = self.n_mels + 1;
        (0..=n)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64))
            .collect()
    }
}

/// Triangular mel filterbank `[n_mels, fft_size / 2 + 1]` with Slaney-style
/// area normalization (each triangle scaled by `2 / bandwidth`).
pub fn mel_filterbank(cfg: &MelConfig, fft_size: usize) -> Result<Tensor> {
    cfg.validate()?;
    let bins = fft_size / 2 + 1;
    let edges = cfg.band_edges();
    let bin_hz = cfg.sample_rate as f64 / fft_size as f64;
    let mut data = vec![0f32; cfg.n_mels * bins];
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (right - left);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            let w = rising.min(falling).max(0.0);
            data[m * bins + k] = (w * norm) as f32;
        }
    }
    Tensor::new(vec![cfg.n_mels, bins], data)
}

/// `ln(max(mel_basis · |STFT|, 1e-5))`, shape `[n_mels, frames]`.
pub fn log_mel(x: &[f32], stft_cfg: &StftConfig, mel_cfg: &MelConfig) -> Result<Tensor> {
    let basis = mel_filterbank(mel_cfg, stft_cfg.fft_size())?;
    let spec = stft(x, stft_cfg)?;
    let (bins, frames) = (spec.freq_bins(), spec.frames());
    let mag = spec.magnitude.data();
    let mut out = vec![0f32; mel_cfg.n_mels * frames];
    let mut acc = vec![0f64; frames];
    for m in 0..mel_cfg.n_mels {
        acc.fill(0.0);
        let row = &basis.data()[m * bins..(m + 1) * bins];
        for (k, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (a, &v) in acc.iter_mut().zip(&mag[k * frames..(k + 1) * frames]) {
                *a += w as f64 * v as f64;
            }
        }
        for (o, a) in out[m * frames..(m + 1) * frames].iter_mut().zip(&acc) {
            *o = (*a as f32).max(LOG_FLOOR).ln();
        }
    }
    Tensor::new(vec![mel_cfg.n_mels, frames], out)
}
