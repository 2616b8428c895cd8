//! Embedded invariant suite: kernels against direct-definition references,
//! iSTFT reconstruction, time-budget rules and PQMF reconstruction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{istft, istft_params, stft, PqmfBank, StftConfig};
use crate::model::{parse_arch, ALIASES};
use crate::tensor::{conv1d, conv2d, conv_transpose1d, conv_transpose2d, ConvParams, Tensor};

pub const CONV_CASES: usize = 100;
pub const CONV_TOLERANCE: f64 = 1e-5;
pub const ISTFT_TOLERANCE: f64 = 1e-6;
pub const PQMF_MAX_DB: f64 = -35.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelftestOptions {
    /// Corrupt the convolution reference so the suite must fail.
    pub inject_fault: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_all(opts: SelftestOptions) -> Vec<SuiteResult> {
    vec![
        conv_suite(opts),
        istft_suite(opts.seed),
        budget_suite(),
        pqmf_suite(opts.seed),
    ]
}

/// `max |a - b| / max |b|` (absolute when `b` is all zero).
pub fn relative_error(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Direct-definition convolution on `[C, H, W]`; 1D layers are run with `H = 1`.
/// Regular: `y[o, i] = b[o] + Σ w[o, c, k] x[c, i·s − p + k·d]`.
/// Transposed: `x[c, i]` is scattered to `y[o, i·s − p + k·d]` with `w[c, o, k]`.
fn reference_conv(x: &Tensor, p: &ConvParams<2>) -> Tensor {
    let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let out = p.output_shape(x.shape()).expect("valid case");
    let (cout, oh, ow) = (out[0], out[1], out[2]);
    let [kh, kw] = p.kernel;
    let mut y = vec![0f64; cout * oh * ow];
    for o in 0..cout {
        y[o * oh * ow..(o + 1) * oh * ow].fill(p.bias.data()[o] as f64);
    }
    let xi = |c: usize, i: usize, j: usize| x.data()[(c * h + i) * w + j] as f64;
    let wi = |a: usize, b: usize, u: usize, v: usize| {
        let second = if p.transposed { cout } else { cin };
        p.weight.data()[((a * second + b) * kh + u) * kw + v] as f64
    };
    let pos = |i: usize, k: usize, axis: usize| -> Option<usize> {
        let v = (i * p.stride[axis] + k * p.dilation[axis]) as isize - p.padding[axis] as isize;
        (v >= 0).then_some(v as usize)
    };
    for c in 0..cin {
        for o in 0..cout {
            for u in 0..kh {
                for v in 0..kw {
                    if p.transposed {
                        let wv = wi(c, o, u, v);
                        for i in 0..h {
                            for j in 0..w {
                                if let (Some(a), Some(b)) = (pos(i, u, 0), pos(j, v, 1)) {
                                    if a < oh && b < ow {
                                        y[(o * oh + a) * ow + b] += wv * xi(c, i, j);
                                    }
                                }
                            }
                        }
                    } else {
                        let wv = wi(o, c, u, v);
                        for i in 0..oh {
                            for j in 0..ow {
                                if let (Some(a), Some(b)) = (pos(i, u, 0), pos(j, v, 1)) {
                                    if a < h && b < w {
                                        y[(o * oh + i) * ow + j] += wv * xi(c, a, b);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(out, y.into_iter().map(|v| v as f32).collect()).unwrap()
}

fn lift(p: &ConvParams<1>) -> ConvParams<2> {
    let mut q = if p.transposed {
        ConvParams::<2>::new_transposed(p.in_channels, p.out_channels, [1, p.kernel[0]])
    } else {
        ConvParams::<2>::new(p.in_channels, p.out_channels, [1, p.kernel[0]])
    }
    .with_stride([1, p.stride[0]])
    .with_padding([0, p.padding[0]])
    .with_dilation([1, p.dilation[0]]);
    q.weight.data_mut().copy_from_slice(p.weight.data());
    q.bias = p.bias.clone();
    q
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let mut t = Tensor::zeros(shape);
    t.data_mut()
        .iter_mut()
        .for_each(|v| *v = rng.random_range(-1.0..1.0));
    t
}

fn random_params<const D: usize>(rng: &mut ChaCha8Rng, transposed: bool) -> ConvParams<D> {
    let (cin, cout) = (rng.random_range(1..=4), rng.random_range(1..=4));
    let kernel = std::array::from_fn(|_| rng.random_range(1..=5));
    let mut p = if transposed {
        ConvParams::<D>::new_transposed(cin, cout, kernel)
    } else {
        ConvParams::<D>::new(cin, cout, kernel)
    };
    p.stride = std::array::from_fn(|_| rng.random_range(1..=3));
    p.dilation = std::array::from_fn(|_| rng.random_range(1..=3));
    p.padding = std::array::from_fn(|a| rng.random_range(0..=p.dilation[a] * (p.kernel[a] - 1)));
    let (w, b) = (p.weight.shape().to_vec(), p.bias.shape().to_vec());
    p.weight = random_tensor(rng, &w);
    p.bias = random_tensor(rng, &b);
    p
}

/// Draws a random layer and input whose output is non-empty.
fn random_case<const D: usize>(rng: &mut ChaCha8Rng, transposed: bool) -> (Tensor, ConvParams<D>) {
    loop {
        let p = random_params::<D>(rng, transposed);
        let mut shape = vec![p.in_channels];
        shape.extend((0..D).map(|_| rng.random_range(1..=12)));
        if p.output_shape(&shape).is_ok() {
            return (random_tensor(rng, &shape), p);
        }
    }
}

fn conv_suite(opts: SelftestOptions) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = [0f64; 4];
    for case in 0..CONV_CASES {
        for (slot, transposed) in [(0, false), (1, true)] {
            let (x, p) = random_case::<1>(&mut rng, transposed);
            let got = if transposed {
                conv_transpose1d(&x, &p)
            } else {
                conv1d(&x, &p)
            };
            let x2 = x
                .clone()
                .reshape(vec![x.shape()[0], 1, x.shape()[1]])
                .unwrap();
            let mut want = reference_conv(&x2, &lift(&p));
            if opts.inject_fault && case == 0 && slot == 0 {
                want.data_mut()[0] += 1e-2;
            }
            worst[slot] = worst[slot].max(match got {
                Ok(g) => relative_error(g.data(), want.data()),
                Err(_) => f64::INFINITY,
            });
        }
        for (slot, transposed) in [(2, false), (3, true)] {
            let (x, p) = random_case::<2>(&mut rng, transposed);
            let got = if transposed {
                conv_transpose2d(&x, &p)
            } else {
                conv2d(&x, &p)
            };
            let want = reference_conv(&x, &p);
            worst[slot] = worst[slot].max(match got {
                Ok(g) => relative_error(g.data(), want.data()),
                Err(_) => f64::INFINITY,
            });
        }
    }
    SuiteResult {
        name: "conv",
        passed: worst.iter().all(|&e| e <= CONV_TOLERANCE),
        detail: format!(
            "{CONV_CASES} cases each; max rel err conv1d {:.1e}, convT1d {:.1e}, conv2d {:.1e}, convT2d {:.1e} (tol {CONV_TOLERANCE:.0e})",
            worst[0], worst[1], worst[2], worst[3]
        ),
    }
}

fn istft_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let cfg = StftConfig::new(1024, 256, 1024).unwrap();
    let mut worst = 0f64;
    for _ in 0..10 {
        let x: Vec<f32> = (0..4096).map(|_| rng.random_range(-1.0..1.0)).collect();
        let err = stft(&x, &cfg)
            .and_then(|s| istft(&s, &cfg, x.len()))
            .map(|y| relative_error(&y[1024..3072], &x[1024..3072]))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(err);
    }
    SuiteResult {
        name: "istft",
        passed: worst <= ISTFT_TOLERANCE,
        detail: format!("10 signals; max interior rel err {worst:.1e} (tol {ISTFT_TOLERANCE:.0e})"),
    }
}

fn budget_suite() -> SuiteResult {
    let base = StftConfig::default();
    let mut failures = Vec::new();
    for (s, f) in [(64, 9), (8, 65)] {
        match istft_params(&base, s) {
            Ok(c) if c.freq_bins() == f => {}
            other => failures.push(format!("s={s}: {other:?}")),
        }
    }
    for (name, _) in ALIASES {
        if let Err(e) = parse_arch(name) {
            failures.push(format!("{name}: {e}"));
        }
    }
    for bad in ["C8C8I8", "C8C8", "C8C8I4B4", "C3C3I4"] {
        if parse_arch(bad).is_ok() {
            failures.push(format!("{bad} accepted"));
        }
    }
    SuiteResult {
        name: "budget",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "F=9/65 at s=64/8; {} variants accepted; 4 violations rejected",
                ALIASES.len()
            )
        } else {
            failures.join("; ")
        },
    }
}

/// Reconstruction error of analysis → synthesis in dB, measured away from
/// the signal edges.
pub fn pqmf_error_db(bank: &PqmfBank, x: &[f32]) -> crate::Result<f64> {
    let y = bank.synthesis(&bank.analysis(x)?)?;
    let edge = bank.taps() + 1;
    let (mut num, mut den) = (0f64, 0f64);
    for i in edge..x.len() - edge {
        num += (y[i] as f64 - x[i] as f64).powi(2);
        den += (x[i] as f64).powi(2);
    }
    Ok(10.0 * (num / den).log10())
}

fn pqmf_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let bank = PqmfBank::four_band();
    let x: Vec<f32> = (0..8192).map(|_| rng.random_range(-1.0..1.0)).collect();
    let db = pqmf_error_db(&bank, &x).unwrap_or(f64::INFINITY);
    SuiteResult {
        name: "pqmf",
        passed: db <= PQMF_MAX_DB,
        detail: format!("4-band round trip {db:.1} dB (limit {PQMF_MAX_DB} dB)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        for r in run_all(SelftestOptions::default()) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn injected_fault_fails() {
        let results = run_all(SelftestOptions {
            inject_fault: true,
            seed: 0,
        });
        assert!(!results[0].passed);
        assert!(results[1..].iter().all(|r| r.passed));
    }
}
