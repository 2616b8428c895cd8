use super::LRELU_SLOPE;
use crate::error::{Error, Result};
use crate::params::{join, Params};
use crate::tensor::{
    conv1d, conv2d, conv_transpose2d, leaky_relu, Conv1dParams, Conv2dParams, Tensor,
};

/// 1D-to-2D conversion: `LReLU → 1×1 conv` to `channels * freq` rows,
/// then reshaped to `[channels, freq, T]`. Row `f * channels + c` of the conv
/// output becomes `(c, f)`, i.e. frequency is the slower sub-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct To2d {
    channels: usize,
    freq: usize,
    conv: Conv1dParams,
}

impl To2d {
    pub fn new(in_channels: usize, channels: usize, freq: usize) -> Result<Self> {
        if in_channels == 0 || channels == 0 || freq == 0 {
            return Err(Error::Config(
                "1D-to-2D conversion needs positive sizes".into(),
            ));
        }
        Ok(Self {
            channels,
            freq,
            conv: Conv1dParams::new(in_channels, channels * freq, [1]),
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn freq(&self) -> usize {
        self.freq
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let flat = self.conv.output_shape(input)?;
        Ok(vec![self.channels, self.freq, flat[1]])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let flat = conv1d(&leaky_relu(x, LRELU_SLOPE), &self.conv)?;
        let t = flat.shape()[1];
        let mut out = Tensor::zeros(&[self.channels, self.freq, t]);
        for f in 0..self.freq {
            for c in 0..self.channels {
                let src = flat.channel(f * self.channels + c);
                out.data_mut()[(c * self.freq + f) * t..][..t].copy_from_slice(src);
            }
        }
        Ok(out)
    }
}

impl Params for To2d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        self.conv.visit(prefix, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        self.conv.visit_mut(prefix, f);
    }
}

/// Frequency upsampling ladder: frequency-only transposed convolutions
/// (kernel 4×1, stride 2×1) double the frequency extent and halve the
/// channels until it reaches `target - 1`, a zero Nyquist row is appended
/// when needed, and a same-padded conv maps to the output channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqUpsampleHead {
    in_freq: usize,
    target_freq: usize,
    rungs: Vec<Conv2dParams>,
    pad_nyquist: bool,
    out_conv: Conv2dParams,
}

impl FreqUpsampleHead {
    pub fn new(
        channels: usize,
        in_freq: usize,
        target_freq: usize,
        out_channels: usize,
        kernel: (usize, usize),
    ) -> Result<Self> {
        if in_freq == 0 || target_freq < in_freq {
            return Err(Error::Geometry(format!(
                "cannot upsample frequency {in_freq} to {target_freq}"
            )));
        }
        if kernel.0.is_multiple_of(2) || kernel.1.is_multiple_of(2) {
            return Err(Error::Config(format!("head kernel {kernel:?} must be odd")));
        }
        let mut rungs = Vec::new();
        let (mut freq, mut ch) = (in_freq, channels);
        while freq < target_freq - 1 {
            if ch < 2 || ch % 2 != 0 {
                return Err(Error::Geometry(format!(
                    "cannot halve {ch} channels while upsampling frequency {freq} toward {target_freq}"
                )));
            }
            rungs.push(
                Conv2dParams::new_transposed(ch, ch / 2, [4, 1])
                    .with_stride([2, 1])
                    .with_padding([1, 0]),
            );
            freq *= 2;
            ch /= 2;
        }
        if freq > target_freq {
            return Err(Error::Geometry(format!(
                "frequency {in_freq} doubles past {target_freq} (reached {freq})"
            )));
        }
        let pad_nyquist = freq + 1 == target_freq;
        Ok(Self {
            in_freq,
            target_freq,
            rungs,
            pad_nyquist,
            out_conv: Conv2dParams::same(ch, out_channels, [kernel.0, kernel.1], [1, 1]),
        })
    }

    pub fn in_channels(&self) -> usize {
        self.rungs
            .first()
            .map_or(self.out_conv.in_channels, |r| r.in_channels)
    }

    pub fn out_channels(&self) -> usize {
        self.out_conv.out_channels
    }

    pub fn target_freq(&self) -> usize {
        self.target_freq
    }

    pub fn rungs(&self) -> usize {
        self.rungs.len()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 3 || input[1] != self.in_freq {
            return Err(Error::Shape(format!(
                "head expects [{}, {}, T], got {input:?}",
                self.in_channels(),
                self.in_freq
            )));
        }
        let mut shape = input.to_vec();
        for rung in &self.rungs {
            shape = rung.output_shape(&shape)?;
        }
        if self.pad_nyquist {
            shape[1] += 1;
        }
        self.out_conv.output_shape(&shape)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let mut h = x.clone();
        for rung in &self.rungs {
            h = conv_transpose2d(&leaky_relu(&h, LRELU_SLOPE), rung)?;
        }
        if self.pad_nyquist {
            h = append_zero_row(&h);
        }
        conv2d(&leaky_relu(&h, LRELU_SLOPE), &self.out_conv)
    }
}

fn append_zero_row(x: &Tensor) -> Tensor {
    let (c, f, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = Tensor::zeros(&[c, f + 1, t]);
    for ch in 0..c {
        out.channel_mut(ch)[..f * t].copy_from_slice(x.channel(ch));
    }
    out
}

impl Params for FreqUpsampleHead {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        for (i, r) in self.rungs.iter().enumerate() {
            r.visit(&join(prefix, &format!("up{i}")), f);
        }
        self.out_conv.visit(&join(prefix, "out"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        for (i, r) in self.rungs.iter_mut().enumerate() {
            r.visit_mut(&join(prefix, &format!("up{i}")), f);
        }
        self.out_conv.visit_mut(&join(prefix, "out"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_to_65_bins() {
        let head = FreqUpsampleHead::new(32, 8, 65, 2, (3, 3)).unwrap();
        assert_eq!(head.rungs(), 3);
        let y = head.forward(&Tensor::zeros(&[32, 8, 5])).unwrap();
        assert_eq!(y.shape(), &[2, 65, 5]);
    }

    #[test]
    fn multiband_head() {
        let head = FreqUpsampleHead::new(64, 4, 33, 8, (3, 3)).unwrap();
        assert_eq!(head.output_shape(&[64, 4, 9]).unwrap(), vec![8, 33, 9]);
    }

    #[test]
    fn time_axis_invariant() {
        let head = FreqUpsampleHead::new(8, 1, 9, 2, (3, 3)).unwrap();
        for t in [1, 7, 64] {
            assert_eq!(
                head.forward(&Tensor::zeros(&[8, 1, t])).unwrap().shape(),
                &[2, 9, t]
            );
        }
    }

    #[test]
    fn unreachable_geometry() {
        assert!(FreqUpsampleHead::new(32, 8, 7, 2, (3, 3)).is_err());
        // 3 -> 6 -> 12 overshoots 10.
        assert!(FreqUpsampleHead::new(32, 3, 10, 2, (3, 3)).is_err());
        // Channels run out before the frequency target.
        assert!(FreqUpsampleHead::new(2, 1, 65, 2, (3, 3)).is_err());
    }

    #[test]
    fn to2d_layout() {
        let mut conv = To2d::new(1, 2, 3).unwrap();
        // Identity-like weights: row r copies the (positive) input scaled by r + 1.
        conv.visit_mut("", &mut |name, t| {
            if name == "weight" {
                for (r, w) in t.data_mut().iter_mut().enumerate() {
                    *w = (r + 1) as f32;
                }
            }
        });
        let y = conv.forward(&Tensor::full(&[1, 2], 1.0)).unwrap();
        assert_eq!(y.shape(), &[2, 3, 2]);
        // (c, f) comes from row f * 2 + c.
        for c in 0..2 {
            for f in 0..3 {
                assert_eq!(y.data()[(c * 3 + f) * 2], (f * 2 + c + 1) as f32);
            }
        }
    }
}
