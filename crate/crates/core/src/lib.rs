//! CPU inference engine and DSP toolkit for iSTFT-terminated neural vocoders
//! (iSTFTNet / iSTFTNet2 and their HiFi-GAN V2 backbone).

pub mod bench;
pub mod blocks;
pub mod dsp;
pub mod error;
pub mod golden;
pub mod io;
pub mod model;
pub mod params;
pub mod selftest;
pub mod tensor;

pub use error::{Error, Result};
pub use params::Params;
pub use tensor::Tensor;
