use super::LRELU_SLOPE;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::{conv1d, conv_transpose1d, leaky_relu, Conv1dParams, Tensor};

pub const SUPPORTED_FACTORS: [usize; 4] = [1, 2, 4, 8];

/// `LReLU → ×factor` temporal upsampling.
///
/// Factors above one use a transposed convolution (kernel `2s`, stride `s`,
/// padding `s/2`) that also halves the channel count; factor one is a
/// same-padded convolution that keeps the channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct Upsample1d {
    factor: usize,
    conv: Conv1dParams,
}

impl Upsample1d {
    pub fn new(channels: usize, factor: usize, unit_kernel: usize) -> Result<Self> {
        if !SUPPORTED_FACTORS.contains(&factor) {
            return Err(Error::Config(format!(
                "unsupported temporal upsampling factor {factor} (supported: {SUPPORTED_FACTORS:?})"
            )));
        }
        let conv = if factor == 1 {
            if unit_kernel.is_multiple_of(2) {
                return Err(Error::Config(format!(
                    "unit-factor stage needs an odd kernel, got {unit_kernel}"
                )));
            }
            Conv1dParams::same(channels, channels, [unit_kernel], [1])
        } else {
            if !channels.is_multiple_of(2) {
                return Err(Error::Config(format!("cannot halve {channels} channels")));
            }
            Conv1dParams::new_transposed(channels, channels / 2, [2 * factor])
                .with_stride([factor])
                .with_padding([factor / 2])
        };
        Ok(Self { factor, conv })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn out_channels(&self) -> usize {
        self.conv.out_channels
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.conv.output_shape(input)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = leaky_relu(x, LRELU_SLOPE);
        if self.conv.transposed {
            conv_transpose1d(&h, &self.conv)
        } else {
            conv1d(&h, &self.conv)
        }
    }
}

impl Params for Upsample1d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        self.conv.visit(prefix, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        self.conv.visit_mut(prefix, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let up = Upsample1d::new(128, 8, 11).unwrap();
        let y = up.forward(&Tensor::zeros(&[128, 10])).unwrap();
        assert_eq!(y.shape(), &[64, 80]);

        let unit = Upsample1d::new(64, 1, 11).unwrap();
        assert_eq!(unit.output_shape(&[64, 10]).unwrap(), vec![64, 10]);
    }

    #[test]
    fn exact_multiples() {
        for s in [2, 4, 8] {
            let up = Upsample1d::new(4, s, 11).unwrap();
            for t in 1..=64 {
                assert_eq!(up.output_shape(&[4, t]).unwrap(), vec![2, s * t]);
            }
        }
    }

    #[test]
    fn chained_x64() {
        let a = Upsample1d::new(128, 8, 11).unwrap();
        let b = Upsample1d::new(64, 8, 11).unwrap();
        let shape = b.output_shape(&a.output_shape(&[128, 3]).unwrap()).unwrap();
        assert_eq!(shape, vec![32, 192]);
    }

    #[test]
    fn unsupported_factor() {
        assert!(Upsample1d::new(8, 3, 11).is_err());
        assert!(Upsample1d::new(8, 16, 11).is_err());
    }
}
