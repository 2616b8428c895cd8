//! Reference implementations shared by the integration tests. Everything
//! here is written from the textbook definitions and deliberately shares no
//! code with the library kernels.
#![allow(dead_code)]

use istftnet_core::tensor::ConvParams;
use istftnet_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

/// `max |a − b| / max |b|`.
pub fn rel_err(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d = a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max);
    let s = b.iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// Dense `[C, H, W]` grid in f64.
#[derive(Clone)]
struct Grid {
    c: usize,
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Grid {
    fn at(&self, c: usize, i: usize, j: usize) -> f64 {
        self.v[(c * self.h + i) * self.w + j]
    }

    /// Pads (positive) or crops (negative) each spatial side.
    fn pad(&self, ph: isize, pw: isize) -> Grid {
        let h = (self.h as isize + 2 * ph).max(0) as usize;
        let w = (self.w as isize + 2 * pw).max(0) as usize;
        let mut v = vec![0.0; self.c * h * w];
        for c in 0..self.c {
            for i in 0..h {
                for j in 0..w {
                    let (si, sj) = (i as isize - ph, j as isize - pw);
                    if si >= 0 && sj >= 0 && (si as usize) < self.h && (sj as usize) < self.w {
                        v[(c * h + i) * w + j] = self.at(c, si as usize, sj as usize);
                    }
                }
            }
        }
        Grid { c: self.c, h, w, v }
    }

    /// Inserts `s - 1` zeros between neighbouring samples.
    fn dilate(&self, sh: usize, sw: usize) -> Grid {
        let (h, w) = ((self.h - 1) * sh + 1, (self.w - 1) * sw + 1);
        let mut v = vec![0.0; self.c * h * w];
        for c in 0..self.c {
            for i in 0..self.h {
                for j in 0..self.w {
                    v[(c * h + i * sh) * w + j * sw] = self.at(c, i, j);
                }
            }
        }
        Grid { c: self.c, h, w, v }
    }
}

/// Unpadded strided, dilated cross-correlation.
fn correlate(
    x: &Grid,
    cout: usize,
    k: [usize; 2],
    s: [usize; 2],
    d: [usize; 2],
    weight: impl Fn(usize, usize, usize, usize) -> f64,
    bias: &[f32],
) -> Grid {
    let span = |n: usize, a: usize| {
        (n as isize - (d[a] * (k[a] - 1)) as isize - 1).div_euclid(s[a] as isize) + 1
    };
    let (h, w) = (span(x.h, 0).max(0) as usize, span(x.w, 1).max(0) as usize);
    let mut v = vec![0.0; cout * h * w];
    for o in 0..cout {
        for i in 0..h {
            for j in 0..w {
                let mut acc = bias[o] as f64;
                for c in 0..x.c {
                    for u in 0..k[0] {
                        for t in 0..k[1] {
                            acc += weight(o, c, u, t)
                                * x.at(c, i * s[0] + u * d[0], j * s[1] + t * d[1]);
                        }
                    }
                }
                v[(o * h + i) * w + j] = acc;
            }
        }
    }
    Grid { c: cout, h, w, v }
}

/// Reference for any regular or transposed 2D layer on `[C, H, W]`.
/// Transposed layers are evaluated as zero-insertion upsampling followed by
/// a correlation with the spatially flipped, channel-swapped kernel.
pub fn oracle2d(x: &Tensor, p: &ConvParams<2>) -> Tensor {
    let g = Grid {
        c: x.shape()[0],
        h: x.shape()[1],
        w: x.shape()[2],
        v: x.data().iter().map(|&v| v as f64).collect(),
    };
    let k = p.kernel;
    let wt = p.weight.data();
    let (cin, cout) = (p.in_channels, p.out_channels);
    let out = if p.transposed {
        let lo = |a: usize| (p.dilation[a] * (k[a] - 1)) as isize - p.padding[a] as isize;
        let z = g.dilate(p.stride[0], p.stride[1]).pad(lo(0), lo(1));
        correlate(
            &z,
            cout,
            k,
            [1, 1],
            p.dilation,
            |o, c, u, t| {
                wt[((c * cout + o) * k[0] + (k[0] - 1 - u)) * k[1] + (k[1] - 1 - t)] as f64
            },
            p.bias.data(),
        )
    } else {
        let z = g.pad(p.padding[0] as isize, p.padding[1] as isize);
        correlate(
            &z,
            cout,
            k,
            p.stride,
            p.dilation,
            |o, c, u, t| wt[((o * cin + c) * k[0] + u) * k[1] + t] as f64,
            p.bias.data(),
        )
    };
    Tensor::new(
        vec![out.c, out.h, out.w],
        out.v.into_iter().map(|v| v as f32).collect(),
    )
    .unwrap()
}

/// Reference for 1D layers (run as `H = 1`).
pub fn oracle1d(x: &Tensor, p: &ConvParams<1>) -> Tensor {
    let mut q = if p.transposed {
        ConvParams::<2>::new_transposed(p.in_channels, p.out_channels, [1, p.kernel[0]])
    } else {
        ConvParams::<2>::new(p.in_channels, p.out_channels, [1, p.kernel[0]])
    };
    q.stride = [1, p.stride[0]];
    q.padding = [0, p.padding[0]];
    q.dilation = [1, p.dilation[0]];
    q.weight.data_mut().copy_from_slice(p.weight.data());
    q.bias = p.bias.clone();
    let x2 = Tensor::new(vec![x.shape()[0], 1, x.shape()[1]], x.data().to_vec()).unwrap();
    let y = oracle2d(&x2, &q);
    Tensor::new(vec![y.shape()[0], y.shape()[2]], y.into_data()).unwrap()
}

/// Random layer geometry and input with a non-empty output.
pub fn random_case<const D: usize>(
    rng: &mut ChaCha8Rng,
    transposed: bool,
) -> (Tensor, ConvParams<D>) {
    loop {
        let cin = rng.random_range(1..=5);
        let cout = rng.random_range(1..=5);
        let kernel: [usize; D] = std::array::from_fn(|_| rng.random_range(1..=6));
        let mut p = if transposed {
            ConvParams::<D>::new_transposed(cin, cout, kernel)
        } else {
            ConvParams::<D>::new(cin, cout, kernel)
        };
        p.stride = std::array::from_fn(|_| rng.random_range(1..=4));
        p.dilation = std::array::from_fn(|_| rng.random_range(1..=3));
        p.padding =
            std::array::from_fn(|a| rng.random_range(0..=p.dilation[a] * (kernel[a] - 1) / 2 + 1));
        let wlen = p.weight.len();
        p.weight = Tensor::new(p.weight.shape().to_vec(), uniform(rng, wlen)).unwrap();
        p.bias = Tensor::new(vec![cout], uniform(rng, cout)).unwrap();
        let mut shape = vec![cin];
        shape.extend((0..D).map(|_| rng.random_range(1..=if D == 1 { 40 } else { 10 })));
        let n: usize = shape.iter().product();
        // Skip geometries whose output would be empty.
        if p.output_shape(&shape).is_ok() {
            return (Tensor::new(shape, uniform(rng, n)).unwrap(), p);
        }
    }
}

/// Triangular HTK-scale filters with area normalization, from the textbook
/// construction.
pub fn filterbank_oracle(
    sr: f64,
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Vec<Vec<f64>> {
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let (lo, hi) = (mel(fmin), mel(fmax));
    let pts: Vec<f64> = (0..n_mels + 2)
        .map(|i| hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels)
        .map(|m| {
            (0..n_fft / 2 + 1)
                .map(|k| {
                    let f = k as f64 * sr / n_fft as f64;
                    let up = (f - pts[m]) / (pts[m + 1] - pts[m]);
                    let down = (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1]);
                    up.min(down).max(0.0) * 2.0 / (pts[m + 2] - pts[m])
                })
                .collect()
        })
        .collect()
}

/// Magnitudes `[f/2 + 1, frames]` of a centred, reflect-padded, periodic-Hann
/// STFT computed with a direct DFT.
pub fn stft_magnitude_oracle(x: &[f32], fft: usize, hop: usize) -> Tensor {
    use std::f64::consts::PI;
    let n = x.len() as isize;
    let p = (fft / 2) as isize;
    let sample = |i: isize| {
        let j = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        x[j as usize] as f64
    };
    let frames = x.len() / hop + 1;
    let bins = fft / 2 + 1;
    let mut out = vec![0f32; bins * frames];
    for t in 0..frames {
        let frame: Vec<f64> = (0..fft)
            .map(|m| {
                let w = 0.5 - 0.5 * (2.0 * PI * m as f64 / fft as f64).cos();
                w * sample((t * hop + m) as isize - p)
            })
            .collect();
        for k in 0..bins {
            let (mut re, mut im) = (0f64, 0f64);
            for (m, v) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * m % fft) as f64 / fft as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            out[k * frames + t] = re.hypot(im) as f32;
        }
    }
    Tensor::new(vec![bins, frames], out).unwrap()
}
