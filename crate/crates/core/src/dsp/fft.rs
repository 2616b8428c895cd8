//! Iterative radix-2 FFT with cached plans.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal table for one power-of-two size.
#[derive(Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT size {n} is not a power of two ≥ 2"
            )));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self {
            n,
            twiddles,
            bitrev,
        })
    }

    /// Process-wide plan cache keyed by size.
    pub fn shared(n: usize) -> Result<Arc<Fft>> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Fft>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(plan) = cache.read().expect("fft cache poisoned").get(&n) {
            return Ok(Arc::clone(plan));
        }
        let plan = Arc::new(Fft::new(n)?);
        Ok(Arc::clone(
            cache
                .write()
                .expect("fft cache poisoned")
                .entry(n)
                .or_insert(plan),
        ))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place complex transform. `inverse` uses conjugate twiddles and
    /// does not scale.
    pub fn process(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan size");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let step = self.n / len;
            for block in buf.chunks_exact_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let w = self.twiddles[j * step];
                    let w = if inverse { w.conj() } else { w };
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            len <<= 1;
        }
    }

    /// Forward transform of a real frame; returns the `n/2 + 1` non-negative
    /// frequency bins.
    pub fn forward_real(&self, frame: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.process(&mut buf, false);
        buf.truncate(self.n / 2 + 1);
        buf
    }

    /// Inverse of [`Fft::forward_real`], scaled by `1/n`. The imaginary parts
    /// of the DC and Nyquist bins are ignored.
    pub fn inverse_real(&self, half: &[Complex64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(half.len(), n / 2 + 1);
        assert_eq!(out.len(), n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        buf[n / 2] = Complex64::new(half[n / 2].re, 0.0);
        for k in 1..n / 2 {
            buf[k] = half[k];
            buf[n - k] = half[k].conj();
        }
        self.process(&mut buf, true);
        let scale = 1.0 / n as f64;
        for (o, v) in out.iter_mut().zip(&buf) {
            *o = v.re * scale;
        }
    }
}
