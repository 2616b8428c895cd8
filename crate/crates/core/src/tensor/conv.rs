//! Direct (non-im2col) convolution kernels.
//!
//! All kernels use cross-correlation (no kernel flip) with zero padding and
//! accumulate each output row in `f64` before rounding back to `f32`. The
//! innermost loop always runs along the contiguous time axis.

use super::Tensor;
use crate::error::{Error, Result};

/// Geometry and weights of an N-dimensional convolution layer.
///
/// Weight layout is `[out, in, k...]` for regular convolutions and
/// `[in, out, k...]` for transposed ones, matching the usual deep-learning
/// checkpoint convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<const D: usize> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; D],
    pub stride: [usize; D],
    pub padding: [usize; D],
    pub dilation: [usize; D],
    pub transposed: bool,
    pub weight: Tensor,
    pub bias: Tensor,
}

pub type Conv1dParams = ConvParams<1>;
pub type Conv2dParams = ConvParams<2>;

impl<const D: usize> ConvParams<D> {
    /// Zero-initialized regular convolution with unit stride/dilation and no padding.
    pub fn new(in_channels: usize, out_channels: usize, kernel: [usize; D]) -> Self {
        let mut shape = vec![out_channels, in_channels];
        shape.extend_from_slice(&kernel);
        Self {
            in_channels,
            out_channels,
            kernel,
            stride: [1; D],
            padding: [0; D],
            dilation: [1; D],
            transposed: false,
            weight: Tensor::zeros(&shape),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    /// Zero-initialized transposed convolution.
    pub fn new_transposed(in_channels: usize, out_channels: usize, kernel: [usize; D]) -> Self {
        let mut shape = vec![in_channels, out_channels];
        shape.extend_from_slice(&kernel);
        Self {
            transposed: true,
            weight: Tensor::zeros(&shape),
            ..Self::new(in_channels, out_channels, kernel)
        }
    }

    /// Regular convolution whose output length equals its input length
    /// (odd kernels, unit stride).
    pub fn same(
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; D],
        dilation: [usize; D],
    ) -> Self {
        let mut padding = [0; D];
        for axis in 0..D {
            padding[axis] = dilation[axis] * (kernel[axis] - 1) / 2;
        }
        Self::new(in_channels, out_channels, kernel)
            .with_dilation(dilation)
            .with_padding(padding)
    }

    pub fn with_stride(mut self, stride: [usize; D]) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_padding(mut self, padding: [usize; D]) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_dilation(mut self, dilation: [usize; D]) -> Self {
        self.dilation = dilation;
        self
    }

    /// Number of learnable scalars (weight + bias).
    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn expected_weight_shape(&self) -> Vec<usize> {
        let mut shape = if self.transposed {
            vec![self.in_channels, self.out_channels]
        } else {
            vec![self.out_channels, self.in_channels]
        };
        shape.extend_from_slice(&self.kernel);
        shape
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Geometry("channel counts must be positive".into()));
        }
        if self.kernel.contains(&0) || self.stride.contains(&0) || self.dilation.contains(&0) {
            return Err(Error::Geometry(format!(
                "kernel {:?}, stride {:?}, dilation {:?} must be positive",
                self.kernel, self.stride, self.dilation
            )));
        }
        let expected = self.expected_weight_shape();
        if self.weight.shape() != expected.as_slice() {
            return Err(Error::Shape(format!(
                "weight shape {:?}, expected {expected:?}",
                self.weight.shape()
            )));
        }
        if self.bias.shape() != [self.out_channels] {
            return Err(Error::Shape(format!(
                "bias shape {:?}, expected [{}]",
                self.bias.shape(),
                self.out_channels
            )));
        }
        Ok(())
    }

    /// Output extent along `axis` for an input of extent `len`.
    pub fn output_len(&self, axis: usize, len: usize) -> Result<usize> {
        let (k, s, p, d) = (
            self.kernel[axis] as i64,
            self.stride[axis] as i64,
            self.padding[axis] as i64,
            self.dilation[axis] as i64,
        );
        let len = len as i64;
        let out = if self.transposed {
            (len - 1) * s - 2 * p + d * (k - 1) + 1
        } else {
            let span = len + 2 * p - d * (k - 1) - 1;
            if span < 0 {
                -1
            } else {
                span / s + 1
            }
        };
        if out < 1 {
            return Err(Error::Geometry(format!(
                "axis {axis}: input length {len} yields non-positive output \
                 (kernel {k}, stride {s}, padding {p}, dilation {d})"
            )));
        }
        Ok(out as usize)
    }

    /// Static shape propagation, `[C_in, ...] -> [C_out, ...]`.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != D + 1 {
            return Err(Error::Shape(format!(
                "{D}D convolution expects {} axes, got {input:?}",
                D + 1
            )));
        }
        if input[0] != self.in_channels {
            return Err(Error::ChannelMismatch {
                expected: self.in_channels,
                got: input[0],
            });
        }
        let mut out = vec![self.out_channels];
        for axis in 0..D {
            out.push(self.output_len(axis, input[axis + 1])?);
        }
        Ok(out)
    }

    fn check(&self, x: &Tensor, transposed: bool) -> Result<Vec<usize>> {
        if self.transposed != transposed {
            return Err(Error::Config(if transposed {
                "regular convolution weights passed to a transposed kernel".into()
            } else {
                "transposed convolution weights passed to a regular kernel".into()
            }));
        }
        self.validate()?;
        self.output_shape(x.shape())
    }
}

/// Valid output index range `[lo, hi)` for which `o * stride + offset`
/// lands inside `0..len`.
#[inline]
fn gather_range(out_len: usize, stride: usize, offset: i64, len: usize) -> (usize, usize) {
    let s = stride as i64;
    let lo = if offset >= 0 {
        0
    } else {
        (-offset + s - 1) / s
    };
    let hi = (len as i64 - offset + s - 1).div_euclid(s).max(0);
    let hi = hi.min(out_len as i64);
    (lo as usize, (hi.max(lo)) as usize)
}

/// Valid input index range `[lo, hi)` for which `i * stride + offset`
/// lands inside `0..out_len`.
#[inline]
fn scatter_range(in_len: usize, stride: usize, offset: i64, out_len: usize) -> (usize, usize) {
    gather_range(in_len, stride, offset, out_len)
}

#[inline]
fn accumulate_row(acc: &mut [f64], src: &[f32], w: f64, stride: usize, start: i64) {
    if stride == 1 {
        let base = start as usize;
        let n = acc.len();
        for (a, &v) in acc.iter_mut().zip(&src[base..base + n]) {
            *a += w * v as f64;
        }
    } else {
        for (i, a) in acc.iter_mut().enumerate() {
            *a += w * src[(start + (i * stride) as i64) as usize] as f64;
        }
    }
}

/// 1D cross-correlation: `[C_in, T] -> [C_out, T']`.
pub fn conv1d(x: &Tensor, p: &Conv1dParams) -> Result<Tensor> {
    let out_shape = p.check(x, false)?;
    let (t_in, t_out) = (x.shape()[1], out_shape[1]);
    let (k, s, pad, d) = (p.kernel[0], p.stride[0], p.padding[0], p.dilation[0]);
    let w = p.weight.data();
    let mut out = Tensor::zeros(&out_shape);
    let mut acc = vec![0f64; t_out];

    for co in 0..p.out_channels {
        acc.fill(0.0);
        for ci in 0..p.in_channels {
            let row = x.channel(ci);
            let taps = &w[(co * p.in_channels + ci) * k..][..k];
            for (kk, &wv) in taps.iter().enumerate() {
                let offset = (kk * d) as i64 - pad as i64;
                let (lo, hi) = gather_range(t_out, s, offset, t_in);
                if lo >= hi {
                    continue;
                }
                let start = (lo * s) as i64 + offset;
                accumulate_row(&mut acc[lo..hi], row, wv as f64, s, start);
            }
        }
        let b = p.bias.data()[co] as f64;
        for (o, a) in out.channel_mut(co).iter_mut().zip(&acc) {
            *o = (a + b) as f32;
        }
    }
    Ok(out)
}

/// 1D transposed convolution (scatter-accumulate): `[C_in, T] -> [C_out, T']`.
pub fn conv_transpose1d(x: &Tensor, p: &Conv1dParams) -> Result<Tensor> {
    let out_shape = p.check(x, true)?;
    let (t_in, t_out) = (x.shape()[1], out_shape[1]);
    let (k, s, pad, d) = (p.kernel[0], p.stride[0], p.padding[0], p.dilation[0]);
    let w = p.weight.data();
    let mut out = Tensor::zeros(&out_shape);
    let mut acc = vec![0f64; t_out];

    for co in 0..p.out_channels {
        acc.fill(0.0);
        for ci in 0..p.in_channels {
            let row = x.channel(ci);
            let taps = &w[(ci * p.out_channels + co) * k..][..k];
            for (kk, &wv) in taps.iter().enumerate() {
                let offset = (kk * d) as i64 - pad as i64;
                let (lo, hi) = scatter_range(t_in, s, offset, t_out);
                let wv = wv as f64;
                for (t, &v) in row.iter().enumerate().take(hi).skip(lo) {
                    acc[(t as i64 * s as i64 + offset) as usize] += wv * v as f64;
                }
            }
        }
        let b = p.bias.data()[co] as f64;
        for (o, a) in out.channel_mut(co).iter_mut().zip(&acc) {
            *o = (a + b) as f32;
        }
    }
    Ok(out)
}

/// 2D cross-correlation: `[C_in, F, T] -> [C_out, F', T']`.
pub fn conv2d(x: &Tensor, p: &Conv2dParams) -> Result<Tensor> {
    let out_shape = p.check(x, false)?;
    let (f_in, t_in) = (x.shape()[1], x.shape()[2]);
    let (f_out, t_out) = (out_shape[1], out_shape[2]);
    let [kf, kt] = p.kernel;
    let [sf, st] = p.stride;
    let [pf, pt] = p.padding;
    let [df, dt] = p.dilation;
    let w = p.weight.data();
    let mut out = Tensor::zeros(&out_shape);
    let mut acc = vec![0f64; f_out * t_out];

    for co in 0..p.out_channels {
        acc.fill(0.0);
        for ci in 0..p.in_channels {
            let plane = x.channel(ci);
            let taps = &w[(co * p.in_channels + ci) * kf * kt..][..kf * kt];
            for a in 0..kf {
                let f_off = (a * df) as i64 - pf as i64;
                let (flo, fhi) = gather_range(f_out, sf, f_off, f_in);
                for b in 0..kt {
                    let wv = taps[a * kt + b] as f64;
                    let t_off = (b * dt) as i64 - pt as i64;
                    let (tlo, thi) = gather_range(t_out, st, t_off, t_in);
                    if tlo >= thi {
                        continue;
                    }
                    let start = (tlo * st) as i64 + t_off;
                    for fo in flo..fhi {
                        let fi = (fo * sf) as i64 + f_off;
                        let row = &plane[fi as usize * t_in..][..t_in];
                        let dst = &mut acc[fo * t_out + tlo..fo * t_out + thi];
                        accumulate_row(dst, row, wv, st, start);
                    }
                }
            }
        }
        let bias = p.bias.data()[co] as f64;
        for (o, a) in out.channel_mut(co).iter_mut().zip(&acc) {
            *o = (a + bias) as f32;
        }
    }
    Ok(out)
}

/// 2D transposed convolution: `[C_in, F, T] -> [C_out, F', T']`.
pub fn conv_transpose2d(x: &Tensor, p: &Conv2dParams) -> Result<Tensor> {
    let out_shape = p.check(x, true)?;
    let (f_in, t_in) = (x.shape()[1], x.shape()[2]);
    let (f_out, t_out) = (out_shape[1], out_shape[2]);
    let [kf, kt] = p.kernel;
    let [sf, st] = p.stride;
    let [pf, pt] = p.padding;
    let [df, dt] = p.dilation;
    let w = p.weight.data();
    let mut out = Tensor::zeros(&out_shape);
    let mut acc = vec![0f64; f_out * t_out];

    for co in 0..p.out_channels {
        acc.fill(0.0);
        for ci in 0..p.in_channels {
            let plane = x.channel(ci);
            let taps = &w[(ci * p.out_channels + co) * kf * kt..][..kf * kt];
            for a in 0..kf {
                let f_off = (a * df) as i64 - pf as i64;
                let (flo, fhi) = scatter_range(f_in, sf, f_off, f_out);
                for b in 0..kt {
                    let wv = taps[a * kt + b] as f64;
                    let t_off = (b * dt) as i64 - pt as i64;
                    let (tlo, thi) = scatter_range(t_in, st, t_off, t_out);
                    if tlo >= thi {
                        continue;
                    }
                    for fi in flo..fhi {
                        let fo = (fi * sf) as i64 + f_off;
                        let src = &plane[fi * t_in..][..t_in];
                        let dst = &mut acc[fo as usize * t_out..][..t_out];
                        if st == 1 {
                            let o0 = (tlo as i64 + t_off) as usize;
                            for (d, &v) in dst[o0..o0 + (thi - tlo)].iter_mut().zip(&src[tlo..thi])
                            {
                                *d += wv * v as f64;
                            }
                        } else {
                            for (t, &v) in src.iter().enumerate().take(thi).skip(tlo) {
                                dst[(t as i64 * st as i64 + t_off) as usize] += wv * v as f64;
                            }
                        }
                    }
                }
            }
        }
        let bias = p.bias.data()[co] as f64;
        for (o, a) in out.channel_mut(co).iter_mut().zip(&acc) {
            *o = (a + bias) as f32;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_1d() {
        let x = Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut p = Conv1dParams::new(1, 1, [1]);
        p.weight.data_mut()[0] = 1.0;
        assert_eq!(conv1d(&x, &p).unwrap().data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_input_yields_bias() {
        let x = Tensor::zeros(&[2, 9]);
        let mut p = Conv1dParams::same(2, 3, [5], [2]);
        p.weight
            .data_mut()
            .iter_mut()
            .enumerate()
            .for_each(|(i, w)| *w = i as f32 * 0.3 - 2.0);
        p.bias.data_mut().copy_from_slice(&[0.5, -1.25, 3.0]);
        let y = conv1d(&x, &p).unwrap();
        for c in 0..3 {
            assert!(y.channel(c).iter().all(|&v| v == p.bias.data()[c]));
        }
    }

    #[test]
    fn transposed_upsampling_length() {
        let p = Conv1dParams::new_transposed(2, 1, [16])
            .with_stride([8])
            .with_padding([4]);
        assert_eq!(p.output_len(0, 4).unwrap(), 32);
    }

    #[test]
    fn transposed_identity() {
        let x = Tensor::new(vec![1, 4], vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let mut p = Conv1dParams::new_transposed(1, 1, [1]);
        p.weight.data_mut()[0] = 1.0;
        assert_eq!(conv_transpose1d(&x, &p).unwrap().data(), x.data());
    }

    #[test]
    fn box_sum_2d() {
        let x = Tensor::full(&[1, 3, 3], 1.0);
        let mut p = Conv2dParams::same(1, 1, [3, 3], [1, 1]);
        p.weight.data_mut().fill(1.0);
        let y = conv2d(&x, &p).unwrap();
        assert_eq!(y.data()[4], 9.0);
        for corner in [0, 2, 6, 8] {
            assert_eq!(y.data()[corner], 4.0);
        }
        assert_eq!(y.data()[1], 6.0);
    }

    #[test]
    fn identity_1x1_2d() {
        let x = Tensor::new(vec![2, 2, 3], (0..12).map(|v| v as f32 - 4.0).collect()).unwrap();
        let mut p = Conv2dParams::new(2, 2, [1, 1]);
        p.weight.data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(conv2d(&x, &p).unwrap(), x);

        let mut pt = Conv2dParams::new_transposed(2, 2, [1, 1]);
        pt.weight.data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(conv_transpose2d(&x, &pt).unwrap(), x);
    }

    #[test]
    fn frequency_only_upsampling_geometry() {
        let p = Conv2dParams::new_transposed(4, 2, [4, 1])
            .with_stride([2, 1])
            .with_padding([1, 0]);
        assert_eq!(p.output_shape(&[4, 8, 11]).unwrap(), vec![2, 16, 11]);
    }

    #[test]
    fn channel_mismatch() {
        let x = Tensor::zeros(&[3, 8]);
        let p = Conv1dParams::new(2, 1, [3]);
        assert!(matches!(
            conv1d(&x, &p),
            Err(Error::ChannelMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn non_positive_output_length() {
        let x = Tensor::zeros(&[1, 3]);
        let p = Conv1dParams::new(1, 1, [5]);
        assert!(matches!(conv1d(&x, &p), Err(Error::Geometry(_))));
    }

    #[test]
    fn wrong_kernel_kind() {
        let x = Tensor::zeros(&[1, 8]);
        let p = Conv1dParams::new(1, 1, [3]);
        assert!(conv_transpose1d(&x, &p).is_err());
    }

    #[test]
    fn gather_range_bounds() {
        // o*2 - 3 in 0..10  =>  o in 2..=6
        assert_eq!(gather_range(100, 2, -3, 10), (2, 7));
        assert_eq!(gather_range(4, 2, -3, 10), (2, 4));
        assert_eq!(gather_range(5, 1, 20, 10), (0, 0));
    }
}
