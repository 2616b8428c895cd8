//! Cross-validation against externally generated reference vectors.
//!
//! A vector directory holds `manifest.json` plus one tensor archive per case
//! (the checkpoint container; its architecture field carries a free-form
//! tag and is not parsed). Manifest layout:
//!
//! ```json
//! { "version": 1, "seed": 0, "cases": [
//!   { "name": "conv1d-000", "kind": "conv1d", "file": "conv1d-000.bin",
//!     "params": { "stride": [2], "padding": [1], "dilation": [1] },
//!     "tolerance": { "rel": 1e-5 } } ] }
//! ```
//!
//! Conv archives contain `input`, `weight`, `bias`, `expected`; `stft`
//! archives `signal`, `magnitude`, `phase`; `mel_filterbank` and
//! `pqmf_prototype` archives `expected`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{mel_filterbank, pqmf::prototype_filter, stft, MelConfig, StftConfig};
use crate::error::{Error, Result};
use crate::io::Checkpoint;
use crate::selftest::relative_error;
use crate::tensor::{conv1d, conv2d, conv_transpose1d, conv_transpose2d, ConvParams, Tensor};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub cases: Vec<Case>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Conv1d,
    ConvTranspose1d,
    Conv2d,
    ConvTranspose2d,
    Stft,
    MelFilterbank,
    PqmfPrototype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub kind: CaseKind,
    pub file: String,
    #[serde(default)]
    pub params: CaseParams,
    pub tolerance: Tolerance,
}

/// Union of the per-kind parameters; unused fields are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padding: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fft_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub win_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// `max |got − want| / max |want|`.
    Rel(f64),
    /// `max |got − want|`.
    Abs(f64),
}

impl Tolerance {
    fn error(&self, got: &[f32], want: &[f32]) -> f64 {
        match self {
            Tolerance::Rel(_) => relative_error(got, want),
            Tolerance::Abs(_) => got
                .iter()
                .zip(want)
                .map(|(a, b)| (*a as f64 - *b as f64).abs())
                .fold(0.0, f64::max),
        }
    }

    fn limit(&self) -> f64 {
        match *self {
            Tolerance::Rel(v) | Tolerance::Abs(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub name: String,
    pub kind: CaseKind,
    pub error: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
}

impl Manifest {
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(dir.as_ref().join(MANIFEST_FILE))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Version {
                found: m.version,
                expected: MANIFEST_VERSION,
            });
        }
        Ok(m)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        std::fs::write(
            dir.as_ref().join(MANIFEST_FILE),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Writes one case archive.
pub fn write_case_file(
    path: impl AsRef<Path>,
    tag: &str,
    tensors: Vec<(&str, Tensor)>,
) -> Result<()> {
    let ck = Checkpoint {
        arch: tag.to_string(),
        entries: tensors
            .into_iter()
            .map(|(n, t)| (n.to_string(), t))
            .collect(),
    };
    std::fs::write(path, ck.to_bytes()?)?;
    Ok(())
}

struct Archive(HashMap<String, Tensor>);

impl Archive {
    fn get(&self, name: &str) -> Result<&Tensor> {
        self.0
            .get(name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }
}

fn required<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Format(format!("case parameter {what} missing")))
}

fn axes<const D: usize>(v: &Option<Vec<usize>>, default: usize, what: &str) -> Result<[usize; D]> {
    match v {
        None => Ok([default; D]),
        Some(v) => v
            .as_slice()
            .try_into()
            .map_err(|_| Error::Format(format!("{what} needs {D} entries, got {v:?}"))),
    }
}

fn conv_layer<const D: usize>(
    a: &Archive,
    p: &CaseParams,
    transposed: bool,
) -> Result<ConvParams<D>> {
    let w = a.get("weight")?.clone();
    if w.ndim() != D + 2 {
        return Err(Error::ShapeMismatch(format!("weight {:?}", w.shape())));
    }
    let (c0, c1) = (w.shape()[0], w.shape()[1]);
    let kernel: [usize; D] = w.shape()[2..].try_into().unwrap();
    let mut layer = if transposed {
        ConvParams::<D>::new_transposed(c0, c1, kernel)
    } else {
        ConvParams::<D>::new(c1, c0, kernel)
    }
    .with_stride(axes(&p.stride, 1, "stride")?)
    .with_padding(axes(&p.padding, 0, "padding")?)
    .with_dilation(axes(&p.dilation, 1, "dilation")?);
    layer.weight = w;
    layer.bias = a.get("bias")?.clone();
    layer.validate()?;
    Ok(layer)
}

/// Recomputes one case with the in-repo kernels; returns `(got, want)`.
fn evaluate(case: &Case, a: &Archive) -> Result<(Tensor, Tensor)> {
    let p = &case.params;
    let got = match case.kind {
        CaseKind::Conv1d => conv1d(a.get("input")?, &conv_layer::<1>(a, p, false)?)?,
        CaseKind::ConvTranspose1d => {
            conv_transpose1d(a.get("input")?, &conv_layer::<1>(a, p, true)?)?
        }
        CaseKind::Conv2d => conv2d(a.get("input")?, &conv_layer::<2>(a, p, false)?)?,
        CaseKind::ConvTranspose2d => {
            conv_transpose2d(a.get("input")?, &conv_layer::<2>(a, p, true)?)?
        }
        CaseKind::Stft => {
            let cfg = StftConfig::new(
                required(p.fft_size, "fft_size")?,
                required(p.hop, "hop")?,
                required(p.win_length, "win_length")?,
            )?;
            let spec = stft(a.get("signal")?.data(), &cfg)?;
            return Ok((spec.magnitude, a.get("magnitude")?.clone()));
        }
        CaseKind::MelFilterbank => {
            let cfg = MelConfig {
                sample_rate: required(p.sample_rate, "sample_rate")?,
                n_mels: required(p.n_mels, "n_mels")?,
                fmin: required(p.fmin, "fmin")?,
                fmax: required(p.fmax, "fmax")?,
            };
            mel_filterbank(&cfg, required(p.fft_size, "fft_size")?)?
        }
        CaseKind::PqmfPrototype => {
            let h = prototype_filter(
                required(p.taps, "taps")?,
                required(p.cutoff, "cutoff")?,
                required(p.beta, "beta")?,
            );
            let n = h.len();
            Tensor::new(vec![n], h.into_iter().map(|v| v as f32).collect())?
        }
    };
    Ok((got, a.get("expected")?.clone()))
}

pub fn verify_case(dir: &Path, case: &Case) -> Result<CaseReport> {
    let ck = Checkpoint::from_bytes(&std::fs::read(dir.join(&case.file))?)?;
    let archive = Archive(ck.entries.into_iter().collect());
    let (got, want) = evaluate(case, &archive)?;
    if got.shape() != want.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{}: computed {:?}, reference {:?}",
            case.name,
            got.shape(),
            want.shape()
        )));
    }
    let error = case.tolerance.error(got.data(), want.data());
    Ok(CaseReport {
        name: case.name.clone(),
        kind: case.kind,
        error,
        tolerance: case.tolerance,
        passed: error <= case.tolerance.limit(),
    })
}

/// Verifies every case listed in `dir/manifest.json`.
pub fn verify_dir(dir: impl AsRef<Path>) -> Result<Vec<CaseReport>> {
    let dir = dir.as_ref();
    Manifest::read(dir)?
        .cases
        .iter()
        .map(|c| verify_case(dir, c))
        .collect()
}
