use super::arch::ArchSpec;
use crate::error::{Error, Result};

/// Network widths and kernel sizes that the architecture string leaves open.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub mel_channels: usize,
    /// Width after the input convolution (128 for the HiFi-GAN V2 backbone).
    pub base_channels: usize,
    pub input_kernel: usize,
    pub output_kernel: usize,
    pub mrf_kernels: Vec<usize>,
    pub mrf_dilations: Vec<Vec<usize>>,
    /// Kernel of a ×1 1D stage: a same-padded conv that keeps the channel
    /// count. Pointwise by default; the `2 × factor` rule of the upsampling
    /// stages would give an even kernel.
    pub unit_stage_kernel: usize,
    pub trunk_channels: usize,
    pub trunk_kernel: (usize, usize),
    pub trunk_repeats: usize,
    /// Hidden width of a shuffle unit's transform branch relative to its input.
    pub shuffle_expansion: usize,
    /// Frequency reduction of the 2D trunk relative to the head output.
    pub freq_down: usize,
    pub head_kernel: (usize, usize),
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            mel_channels: 80,
            base_channels: 128,
            input_kernel: 7,
            output_kernel: 7,
            mrf_kernels: vec![3, 7, 11],
            mrf_dilations: vec![vec![1, 3, 5]; 3],
            unit_stage_kernel: 1,
            trunk_channels: 32,
            trunk_kernel: (3, 3),
            trunk_repeats: 3,
            shuffle_expansion: 2,
            freq_down: 8,
            head_kernel: (3, 3),
        }
    }
}

impl Hyper {
    /// Defaults for `spec`. Multi-band models with a 2D trunk double the
    /// trunk width and drop the shuffle expansion so the head can afford
    /// four bands' worth of output channels.
    pub fn for_arch(spec: &ArchSpec) -> Self {
        let mut hyper = Self::default();
        if spec.block2d().is_some() && spec.bands > 1 {
            hyper.trunk_channels *= 2;
            hyper.shuffle_expansion = 1;
        }
        hyper
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.mel_channels,
            self.base_channels,
            self.input_kernel,
            self.output_kernel,
            self.unit_stage_kernel,
            self.trunk_channels,
            self.trunk_repeats,
            self.shuffle_expansion,
            self.freq_down,
        ];
        if positive.contains(&0) || self.mrf_kernels.is_empty() {
            return Err(Error::Config(format!(
                "hyperparameters must be positive: {self:?}"
            )));
        }
        if self.input_kernel.is_multiple_of(2) || self.output_kernel.is_multiple_of(2) {
            return Err(Error::Config("input/output kernels must be odd".into()));
        }
        Ok(())
    }
}
