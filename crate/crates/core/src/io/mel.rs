use std::path::Path;

use super::{put_f32s, put_len, put_u32, Reader};
use crate::dsp::SAMPLE_RATE;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MEL_MAGIC: [u8; 4] = *b"MEL0";

/// A log-mel spectrogram `[n_mels, frames]` with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFile {
    pub sample_rate: u32,
    pub mel: Tensor,
}

impl MelFile {
    pub fn new(sample_rate: u32, mel: Tensor) -> Result<Self> {
        if mel.ndim() != 2 {
            return Err(Error::Shape(format!(
                "mel must be [n_mels, T], got {:?}",
                mel.shape()
            )));
        }
        Ok(Self { sample_rate, mel })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(16 + 4 * self.mel.len());
        out.extend_from_slice(&MEL_MAGIC);
        put_u32(&mut out, self.sample_rate);
        put_len(&mut out, self.mel.shape()[0], "n_mels")?;
        put_len(&mut out, self.mel.shape()[1], "frames")?;
        put_f32s(&mut out, self.mel.data());
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(MEL_MAGIC)?;
        let sample_rate = r.u32("sample rate")?;
        let n_mels = r.u32("n_mels")? as usize;
        let frames = r.u32("frames")? as usize;
        let expected = n_mels
            .checked_mul(frames)
            .ok_or_else(|| Error::Format("mel header dims overflow".into()))?;
        if r.remaining() != expected * 4 {
            let what = format!(
                "mel header says {n_mels}×{frames} floats, payload has {} bytes",
                r.remaining()
            );
            return Err(if r.remaining() < expected * 4 {
                Error::Truncated(what)
            } else {
                Error::Format(what)
            });
        }
        let data = r.f32s(expected, "mel data")?;
        Self::new(sample_rate, Tensor::new(vec![n_mels, frames], data)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

pub fn read_mel(path: impl AsRef<Path>) -> Result<Tensor> {
    Ok(MelFile::read(path)?.mel)
}

/// Writes `mel` tagged with the model sample rate.
pub fn write_mel(mel: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    MelFile::new(SAMPLE_RATE, mel.clone())?.write(path)
}
