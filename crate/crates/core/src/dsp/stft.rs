use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::Fft;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Guard below which the squared-window envelope counts as zero.
pub const NOLA_EPSILON: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowKind {
    /// Periodic Hann.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

/// FFT size, hop and window length (all in samples) plus window kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StftConfig {
    fft_size: usize,
    hop: usize,
    win_length: usize,
    window: WindowKind,
}

impl Default for StftConfig {
    /// 1024-point FFT, hop 256, 1024-sample Hann window.
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop: 256,
            win_length: 1024,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize, win_length: usize) -> Result<Self> {
        Self::with_window(fft_size, hop, win_length, WindowKind::Hann)
    }

    pub fn with_window(
        fft_size: usize,
        hop: usize,
        win_length: usize,
        window: WindowKind,
    ) -> Result<Self> {
        if fft_size == 0 || hop == 0 || win_length == 0 {
            return Err(Error::Config(format!(
                "STFT sizes must be positive (fft {fft_size}, hop {hop}, window {win_length})"
            )));
        }
        if !fft_size.is_power_of_two() || fft_size < 2 {
            return Err(Error::Config(format!(
                "FFT size {fft_size} is not a power of two"
            )));
        }
        if win_length > fft_size || hop > win_length {
            return Err(Error::Config(format!(
                "need hop ≤ window ≤ fft (hop {hop}, window {win_length}, fft {fft_size})"
            )));
        }
        Ok(Self {
            fft_size,
            hop,
            win_length,
            window,
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn win_length(&self) -> usize {
        self.win_length
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    /// `fft_size / 2 + 1`.
    pub fn freq_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Window of length `win_length`, zero-padded symmetrically to `fft_size`.
    pub fn padded_window(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.fft_size];
        let offset = (self.fft_size - self.win_length) / 2;
        out[offset..offset + self.win_length]
            .copy_from_slice(&self.window.coefficients(self.win_length));
        out
    }

    /// Minimum over one hop period of the steady-state squared-window
    /// overlap-add envelope. Zero means the inverse transform is undefined.
    pub fn nola_minimum(&self) -> f64 {
        let w = self.padded_window();
        (0..self.hop)
            .map(|phase| {
                w.iter()
                    .skip(phase)
                    .step_by(self.hop)
                    .map(|v| v * v)
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_nola(&self) -> Result<()> {
        let min_envelope = self.nola_minimum();
        if min_envelope <= NOLA_EPSILON {
            return Err(Error::Nola { min_envelope });
        }
        Ok(())
    }
}

/// Rescales an analysis configuration for a signal that has already been
/// upsampled `factor` times in time: FFT size, hop and window length are all
/// divided by `factor`, trading frequency resolution for time resolution.
pub fn istft_params(base: &StftConfig, factor: usize) -> Result<StftConfig> {
    if factor == 0 {
        return Err(Error::Config("upsampling factor must be positive".into()));
    }
    for (what, v) in [
        ("fft size", base.fft_size),
        ("hop length", base.hop),
        ("window length", base.win_length),
    ] {
        if v % factor != 0 {
            return Err(Error::Divisibility {
                factor,
                what: format!("{what} {v}"),
            });
        }
    }
    StftConfig::with_window(
        base.fft_size / factor,
        base.hop / factor,
        base.win_length / factor,
        base.window,
    )
}

/// Linear magnitude and phase (radians), each `[freq_bins, frames]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitude: Tensor,
    pub phase: Tensor,
}

impl Spectrogram {
    pub fn new(magnitude: Tensor, phase: Tensor) -> Result<Self> {
        if magnitude.shape() != phase.shape() || magnitude.ndim() != 2 {
            return Err(Error::Shape(format!(
                "magnitude {:?} and phase {:?} must be equal 2D shapes",
                magnitude.shape(),
                phase.shape()
            )));
        }
        Ok(Self { magnitude, phase })
    }

    pub fn freq_bins(&self) -> usize {
        self.magnitude.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.magnitude.shape()[1]
    }
}

/// Number of centered frames for a signal of `len` samples.
pub fn frame_count(len: usize, hop: usize) -> usize {
    len / hop + 1
}

/// Centered STFT: the signal is reflection-padded by `fft_size / 2` on both
/// ends, giving `len / hop + 1` frames.
pub fn stft(x: &[f32], cfg: &StftConfig) -> Result<Spectrogram> {
    let f = cfg.fft_size;
    let pad = f / 2;
    if x.len() < cfg.win_length || x.len() <= pad {
        return Err(Error::Config(format!(
            "signal of {} samples is shorter than the analysis window ({})",
            x.len(),
            cfg.win_length.max(pad + 1)
        )));
    }
    let plan = Fft::shared(f)?;
    let window = cfg.padded_window();
    let len = x.len() as i64;
    let reflect = |i: i64| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= len {
            2 * (len - 1) - i
        } else {
            i
        };
        x[j as usize] as f64
    };

    let frames = frame_count(x.len(), cfg.hop);
    let bins = cfg.freq_bins();
    let mut mag = vec![0f32; bins * frames];
    let mut phase = vec![0f32; bins * frames];
    let mut frame = vec![0f64; f];
    for t in 0..frames {
        let start = (t * cfg.hop) as i64 - pad as i64;
        for (n, v) in frame.iter_mut().enumerate() {
            *v = reflect(start + n as i64) * window[n];
        }
        for (k, c) in plan.forward_real(&frame).into_iter().enumerate() {
            mag[k * frames + t] = c.norm() as f32;
            phase[k * frames + t] = c.arg() as f32;
        }
    }
    Spectrogram::new(
        Tensor::new(vec![bins, frames], mag)?,
        Tensor::new(vec![bins, frames], phase)?,
    )
}

/// Windowed overlap-add of every frame's inverse transform, normalized by the
/// squared-window envelope. The result is uncentered and has
/// `fft_size + hop * (frames - 1)` samples.
pub fn overlap_add(spec: &Spectrogram, cfg: &StftConfig) -> Result<Vec<f64>> {
    if spec.freq_bins() != cfg.freq_bins() {
        return Err(Error::Shape(format!(
            "spectrogram has {} bins, configuration expects {}",
            spec.freq_bins(),
            cfg.freq_bins()
        )));
    }
    cfg.check_nola()?;
    let (f, hop) = (cfg.fft_size, cfg.hop);
    let plan = Fft::shared(f)?;
    let window = cfg.padded_window();
    let frames = spec.frames();
    let bins = cfg.freq_bins();
    let total = f + hop * (frames - 1);
    let mut out = vec![0f64; total];
    let mut envelope = vec![0f64; total];
    let mut half = vec![Complex64::new(0.0, 0.0); bins];
    let mut frame = vec![0f64; f];
    let (mag, phase) = (spec.magnitude.data(), spec.phase.data());

    for t in 0..frames {
        for (k, c) in half.iter_mut().enumerate() {
            *c = Complex64::from_polar(mag[k * frames + t] as f64, phase[k * frames + t] as f64);
        }
        plan.inverse_real(&half, &mut frame);
        let base = t * hop;
        for n in 0..f {
            out[base + n] += frame[n] * window[n];
            envelope[base + n] += window[n] * window[n];
        }
    }
    for (o, e) in out.iter_mut().zip(&envelope) {
        if *e > NOLA_EPSILON {
            *o /= e;
        }
    }
    Ok(out)
}

/// Inverse of [`stft`]: overlap-add, drop the `fft_size / 2` centering
/// padding, and return `out_len` samples.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig, out_len: usize) -> Result<Vec<f32>> {
    let full = overlap_add(spec, cfg)?;
    let start = cfg.fft_size / 2;
    if start + out_len > full.len() {
        return Err(Error::Shape(format!(
            "{} frames cannot produce {out_len} samples",
            spec.frames()
        )));
    }
    Ok(full[start..start + out_len]
        .iter()
        .map(|&v| v as f32)
        .collect())
}
