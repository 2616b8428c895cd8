use std::collections::HashMap;
use std::path::Path;

use super::{put_f32s, put_len, put_str, put_u32, Reader};
use crate::error::{Error, Result};
use crate::model::{build, parse_arch, Hyper, InitPolicy, ModelGraph};
use crate::params::Params;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ISN2";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Named tensors plus the architecture string they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: String,
    pub entries: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_graph(g: &ModelGraph) -> Self {
        let mut entries = Vec::new();
        g.visit("", &mut |name, t| entries.push((name, t.clone())));
        Self {
            arch: g.arch().to_string(),
            entries,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        put_str(&mut out, &self.arch)?;
        put_len(&mut out, self.entries.len(), "entry count")?;
        for (name, t) in &self.entries {
            put_str(&mut out, name)?;
            put_len(&mut out, t.ndim(), "ndim")?;
            for &d in t.shape() {
                put_len(&mut out, d, "dimension")?;
            }
            put_f32s(&mut out, t.data());
        }
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(CHECKPOINT_MAGIC)?;
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let arch = r.string("architecture string")?;
        let count = r.u32("entry count")? as usize;
        let mut entries: Vec<(String, Tensor)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for i in 0..count {
            let name = r.string(&format!("entry {i} name"))?;
            let ndim = r.u32(&format!("{name} ndim"))? as usize;
            let dims = (0..ndim)
                .map(|_| r.u32(&format!("{name} dims")).map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let len = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format(format!("{name}: dims {dims:?} overflow")))?;
            let data = r.f32s(len, &format!("{name} data"))?;
            let t = Tensor::new(dims, data).map_err(|e| Error::Format(format!("{name}: {e}")))?;
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateTensor(name));
            }
            entries.push((name, t));
        }
        r.finish("checkpoint entries")?;
        Ok(Self { arch, entries })
    }

    /// Rebuilds the graph named by `arch` and fills it, validating every
    /// tensor name and shape.
    pub fn into_graph(self) -> Result<ModelGraph> {
        let spec = parse_arch(&self.arch)?;
        let mut g = build(&spec, &Hyper::for_arch(&spec), InitPolicy::Zeros)?;
        let mut pending: HashMap<String, Tensor> = self.entries.into_iter().collect();
        if let Some(unknown) = {
            let mut names = Vec::new();
            g.visit("", &mut |n, _| names.push(n));
            let mut extra: Vec<_> = pending
                .keys()
                .filter(|k| !names.contains(k))
                .cloned()
                .collect();
            extra.sort();
            extra.into_iter().next()
        } {
            return Err(Error::UnknownTensor(unknown));
        }
        let mut failure = None;
        g.visit_mut("", &mut |name, slot| {
            if failure.is_some() {
                return;
            }
            match pending.remove(&name) {
                None => failure = Some(Error::MissingTensor(name)),
                Some(t) if t.shape() != slot.shape() => {
                    failure = Some(Error::ShapeMismatch(format!(
                        "{name} (file {:?}, graph {:?})",
                        t.shape(),
                        slot.shape()
                    )))
                }
                Some(t) => *slot = t,
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(g),
        }
    }
}

pub fn save_checkpoint(g: &ModelGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, Checkpoint::from_graph(g).to_bytes()?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelGraph> {
    Checkpoint::from_bytes(&std::fs::read(path)?)?.into_graph()
}
