//! Pseudo-QMF cosine-modulated filter bank for multi-band synthesis.
//!
//! Filters are applied centered (zero-padded by `taps / 2` on each side), so
//! the analysis→synthesis chain has no net delay.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct PqmfBank {
    bands: usize,
    taps: usize,
    cutoff: f64,
    beta: f64,
    analysis: Tensor,
    synthesis: Tensor,
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    let m = (len - 1) as f64;
    let denom = bessel_i0(beta);
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

/// Kaiser-windowed ideal lowpass with normalized cutoff `cutoff` (fraction
/// of Nyquist), `taps + 1` coefficients.
pub fn prototype_filter(taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let wc = PI * cutoff;
    let center = taps as f64 / 2.0;
    kaiser(taps + 1, beta)
        .into_iter()
        .enumerate()
        .map(|(n, w)| {
            let t = n as f64 - center;
            let ideal = if t == 0.0 {
                cutoff
            } else {
                (wc * t).sin() / (PI * t)
            };
            ideal * w
        })
        .collect()
}

impl PqmfBank {
    /// Builds a `bands`-channel bank; each filter has `taps + 1` coefficients.
    pub fn new(bands: usize, taps: usize, cutoff: f64, beta: f64) -> Result<Self> {
        if bands < 2 || taps == 0 || !taps.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "PQMF needs ≥ 2 bands and an even, positive filter order (bands {bands}, taps {taps})"
            )));
        }
        if !(0.0 < cutoff && cutoff < 1.0) || beta < 0.0 {
            return Err(Error::Config(format!(
                "PQMF cutoff {cutoff} must lie in (0, 1), beta {beta} must be ≥ 0"
            )));
        }
        let proto = prototype_filter(taps, cutoff, beta);
        let len = taps + 1;
        let center = taps as f64 / 2.0;
        let mut analysis = vec![0f32; bands * len];
        let mut synthesis = vec![0f32; bands * len];
        for k in 0..bands {
            let freq = (2 * k + 1) as f64 * PI / (2 * bands) as f64;
            let phase = if k % 2 == 0 { PI / 4.0 } else { -PI / 4.0 };
            for (n, &p) in proto.iter().enumerate() {
                let arg = freq * (n as f64 - center);
                analysis[k * len + n] = (2.0 * p * (arg + phase).cos()) as f32;
                synthesis[k * len + n] = (2.0 * p * (arg - phase).cos()) as f32;
            }
        }
        Ok(Self {
            bands,
            taps,
            cutoff,
            beta,
            analysis: Tensor::new(vec![bands, len], analysis)?,
            synthesis: Tensor::new(vec![bands, len], synthesis)?,
        })
    }

    /// Four bands, order 62, cutoff 0.142, Kaiser β = 9.
    pub fn four_band() -> Self {
        Self::new(4, 62, 0.142, 9.0).expect("default PQMF parameters are valid")
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn analysis_filters(&self) -> &Tensor {
        &self.analysis
    }

    pub fn synthesis_filters(&self) -> &Tensor {
        &self.synthesis
    }

    /// Filters `x` with every analysis filter and decimates by `bands`:
    /// `[bands * T] -> [bands, T]`.
    pub fn analysis(&self, x: &[f32]) -> Result<Tensor> {
        let b = self.bands;
        if x.is_empty() || !x.len().is_multiple_of(b) {
            return Err(Error::Shape(format!(
                "signal length {} is not a positive multiple of {b} bands",
                x.len()
            )));
        }
        let frames = x.len() / b;
        let half = (self.taps / 2) as i64;
        let len = x.len() as i64;
        let mut out = vec![0f32; b * frames];
        for k in 0..b {
            let h = self.analysis.channel(k);
            for m in 0..frames {
                let origin = (m * b) as i64 - half;
                let mut acc = 0f64;
                for (j, &c) in h.iter().enumerate() {
                    let i = origin + j as i64;
                    if (0..len).contains(&i) {
                        acc += c as f64 * x[i as usize] as f64;
                    }
                }
                out[k * frames + m] = acc as f32;
            }
        }
        Tensor::new(vec![b, frames], out)
    }

    /// Zero-insertion upsampling by `bands`, synthesis filtering (gain
    /// `bands`) and summation across bands: `[bands, T] -> [bands * T]`.
    pub fn synthesis(&self, sub: &Tensor) -> Result<Vec<f32>> {
        let b = self.bands;
        if sub.ndim() != 2 || sub.channels() != b {
            return Err(Error::ChannelMismatch {
                expected: b,
                got: sub.channels(),
            });
        }
        let frames = sub.shape()[1];
        let n_out = b * frames;
        let half = (self.taps / 2) as i64;
        let filt_len = self.taps + 1;
        let mut out = vec![0f64; n_out];
        for k in 0..b {
            let g = self.synthesis.channel(k);
            let band = sub.channel(k);
            for (n, o) in out.iter_mut().enumerate() {
                // Only taps landing on a non-inserted sample contribute:
                // n + j - half ≡ 0 (mod b).
                let first = (half - n as i64).rem_euclid(b as i64) as usize;
                let mut acc = 0f64;
                let mut j = first;
                while j < filt_len {
                    let pos = n as i64 + j as i64 - half;
                    if pos >= 0 {
                        let m = (pos as usize) / b;
                        if m < frames {
                            acc += g[j] as f64 * band[m] as f64;
                        }
                    }
                    j += b;
                }
                *o += acc * b as f64;
            }
        }
        Ok(out.into_iter().map(|v| v as f32).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        // I0(1) and I0(9) from standard tables.
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-12);
        assert!((bessel_i0(9.0) - 1_093.588_354_511_374_5).abs() < 1e-8);
    }

    #[test]
    fn prototype_has_unit_dc_gain() {
        let p = prototype_filter(62, 0.142, 9.0);
        assert_eq!(p.len(), 63);
        let dc: f64 = p.iter().sum();
        assert!((dc - 1.0).abs() < 1e-3, "{dc}");
        for n in 0..31 {
            assert!((p[n] - p[62 - n]).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_laws() {
        let bank = PqmfBank::four_band();
        let y = bank.synthesis(&Tensor::zeros(&[4, 25])).unwrap();
        assert_eq!(y.len(), 100);
        assert!(y.iter().all(|&v| v == 0.0));
        assert!(bank.synthesis(&Tensor::zeros(&[3, 25])).is_err());
        assert!(bank.analysis(&[0.0; 10]).is_err());
        assert_eq!(bank.analysis(&[0.0; 12]).unwrap().shape(), &[4, 3]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(PqmfBank::new(1, 62, 0.142, 9.0).is_err());
        assert!(PqmfBank::new(4, 61, 0.142, 9.0).is_err());
        assert!(PqmfBank::new(4, 62, 1.5, 9.0).is_err());
    }
}
