//! Composite layers: multi-receptive-field fusion, temporal upsampling, the
//! 2D residual/shuffle trunks and the frequency-upsampling head.

mod block2d;
mod head;
mod mrf;
mod upsample;

pub use block2d::{Block2d, Block2dConfig, Block2dKind};
pub use head::{FreqUpsampleHead, To2d};
pub use mrf::{Fusion, Mrf1d, Mrf1dConfig};
pub use upsample::{Upsample1d, SUPPORTED_FACTORS};

/// Negative slope of every leaky ReLU inside the blocks.
pub const LRELU_SLOPE: f32 = 0.1;
