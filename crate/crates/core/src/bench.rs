//! Real-time-factor benchmarking and parameter reporting.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dsp::SAMPLE_RATE;
use crate::error::{Error, Result};
use crate::model::{build, parse_arch, ForwardMode, Hyper, InitPolicy, ModelGraph};
use crate::tensor::Tensor;

/// Reference variant for parameter ratios.
pub const REFERENCE_ARCH: &str = "hifigan-v2";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// Seconds of audio synthesized per repeat.
    pub duration: f64,
    pub warmup: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            duration: 1.0,
            warmup: 5,
            repeats: 30,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Mel frames needed to cover `duration` seconds.
    pub fn frames(&self, hop: usize) -> usize {
        (self.duration * SAMPLE_RATE as f64 / hop as f64).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub arch: String,
    pub rtf_median: f64,
    pub rtf_iqr: f64,
    pub params: usize,
    pub ratio_vs_v2: f64,
    pub frames: usize,
    pub warmup: usize,
    pub repeats: usize,
    #[serde(skip)]
    pub rtf_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsReport {
    pub arch: String,
    pub params: usize,
    pub ratio_vs_v2: f64,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Seeded uniform noise in `[-4, 4]`, a typical log-mel range.
pub fn random_mel(mel_channels: usize, frames: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..mel_channels * frames)
        .map(|_| rng.random_range(-4.0f32..=4.0))
        .collect();
    Tensor::new(vec![mel_channels, frames], data).expect("positive dims")
}

pub fn build_seeded(arch: &str, seed: u64) -> Result<ModelGraph> {
    let spec = parse_arch(arch)?;
    build(&spec, &Hyper::for_arch(&spec), InitPolicy::seeded(seed))
}

fn reference_params() -> usize {
    let spec = parse_arch(REFERENCE_ARCH).expect("reference alias parses");
    build(&spec, &Hyper::for_arch(&spec), InitPolicy::Zeros)
        .expect("reference builds")
        .count_params()
}

pub fn params_report(arch: &str) -> Result<ParamsReport> {
    let spec = parse_arch(arch)?;
    let params = build(&spec, &Hyper::for_arch(&spec), InitPolicy::Zeros)?.count_params();
    Ok(ParamsReport {
        arch: spec
            .alias()
            .map_or_else(|| spec.to_string(), str::to_string),
        params,
        ratio_vs_v2: params as f64 / reference_params() as f64,
    })
}

/// Times `warmup + repeats` forward passes of a seeded model. Only the
/// forward pass (network, iSTFT, PQMF) is inside the timed region.
pub fn run_bench(arch: &str, cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let g = build_seeded(arch, cfg.seed)?;
    let frames = cfg.frames(g.arch().base.hop());
    let mel = random_mel(g.hyper().mel_channels, frames, cfg.seed ^ 0x5eed);
    // The audio covers at least `duration`; the excess from rounding up to
    // whole frames is not credited.
    let target = (cfg.duration * SAMPLE_RATE as f64).round() as usize;
    let seconds = target.min(g.output_len(frames)) as f64 / SAMPLE_RATE as f64;

    for _ in 0..cfg.warmup {
        g.forward_with(&mel, ForwardMode::Fast)?;
    }
    let mut rtf = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let audio = g.forward_with(&mel, ForwardMode::Fast)?;
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(&audio);
        rtf.push(elapsed / seconds);
    }
    let mut sorted = rtf.clone();
    sorted.sort_by(f64::total_cmp);
    let params = g.count_params();
    Ok(BenchReport {
        arch: g
            .arch()
            .alias()
            .map_or_else(|| g.arch().to_string(), str::to_string),
        rtf_median: quantile(&sorted, 0.5),
        rtf_iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
        params,
        ratio_vs_v2: params as f64 / reference_params() as f64,
        frames,
        warmup: cfg.warmup,
        repeats: cfg.repeats,
        rtf_samples: rtf,
    })
}
