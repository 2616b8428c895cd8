//! Dense row-major `f32` tensors and the neural primitives built on them.
//!
//! Layout is channels-outermost: a 1D activation is `[channels, time]`, a 2D
//! activation is `[channels, freq, time]`, and the last axis is contiguous.

mod conv;
mod ops;

pub use conv::{
    conv1d, conv2d, conv_transpose1d, conv_transpose2d, Conv1dParams, Conv2dParams, ConvParams,
};
pub use ops::{channel_concat, channel_shuffle, channel_split, leaky_relu, leaky_relu_inplace};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Wraps `data` with the given shape, checking the element count.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor.
    ///
    /// Panics if any dimension is zero or the shape is empty; use
    /// [`Tensor::new`] for shapes that come from untrusted input.
    pub fn zeros(shape: &[usize]) -> Self {
        validate_shape(shape).expect("Tensor::zeros");
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(&other.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Size of the outermost (channel) axis.
    pub fn channels(&self) -> usize {
        self.shape[0]
    }

    /// Number of elements in one channel slice.
    pub fn channel_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.channel_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.channel_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Largest absolute elementwise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &Tensor) -> Option<f32> {
        if self.shape != other.shape {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f32::max),
        )
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Shape("tensor needs at least one axis".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero-sized axis in {shape:?}")));
    }
    Ok(())
}
