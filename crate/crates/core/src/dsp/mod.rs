//! STFT/iSTFT, log-mel analysis and the PQMF filter bank.

pub mod fft;
pub mod mel;
pub mod pqmf;
pub mod stft;

pub use fft::Fft;
pub use mel::{log_mel, mel_filterbank, MelConfig};
pub use pqmf::PqmfBank;
pub use stft::{istft, istft_params, overlap_add, stft, Spectrogram, StftConfig, WindowKind};

/// Sample rate of the default analysis configuration.
pub const SAMPLE_RATE: u32 = 22050;
