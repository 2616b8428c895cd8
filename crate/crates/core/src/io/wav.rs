use std::path::Path;

use crate::error::{Error, Result};

pub const WAV_HEADER_LEN: usize = 44;

/// 16-bit PCM mono RIFF/WAVE bytes. Samples are clamped to `[-1, 1]` and
/// scaled by 32767.
pub fn encode_wav(audio: &[f32], sample_rate: u32) -> Result<Vec<u8>> {
    if let Some(i) = audio.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("sample {i} is not finite")));
    }
    let data_len = u32::try_from(audio.len() * 2)
        .ok()
        .filter(|n| *n <= u32::MAX - 36)
        .ok_or_else(|| Error::Format("audio too long for a WAV file".into()))?;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + audio.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &v in audio {
        let s = (v.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn write_wav(audio: &[f32], sample_rate: u32, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_wav(audio, sample_rate)?)?;
    Ok(())
}

/// Reads back what [`encode_wav`] writes: `(sample_rate, samples)`.
pub fn decode_wav(bytes: &[u8]) -> Result<(u32, Vec<i16>)> {
    if bytes.len() < WAV_HEADER_LEN {
        return Err(Error::Truncated("WAV header".into()));
    }
    if &bytes[..4] != b"RIFF" || &bytes[8..16] != b"WAVEfmt " || &bytes[36..40] != b"data" {
        return Err(Error::Format("not a canonical 44-byte-header WAV".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    if u16_at(20) != 1 || u16_at(22) != 1 || u16_at(34) != 16 {
        return Err(Error::Format("only 16-bit PCM mono is supported".into()));
    }
    let len = u32_at(40) as usize;
    let payload = &bytes[WAV_HEADER_LEN..];
    if payload.len() < len {
        return Err(Error::Truncated("WAV data".into()));
    }
    let samples = payload[..len]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok((u32_at(24), samples))
}
