use super::LRELU_SLOPE;
use crate::error::{Error, Result};
use crate::params::{join, Params};
use crate::tensor::{
    channel_concat, channel_shuffle, channel_split, conv2d, leaky_relu, leaky_relu_inplace,
    Conv2dParams, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block2dKind {
    /// Residual: `x + conv(LReLU(conv(LReLU(x))))` at full width.
    Res,
    /// Split / transform one half / concat / channel shuffle.
    Shuffle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block2dConfig {
    pub channels: usize,
    /// `(freq, time)` kernel extent; both odd.
    pub kernel: (usize, usize),
    pub repeats: usize,
    pub kind: Block2dKind,
    /// Shuffle kind only: width of the transform branch's hidden layer as a
    /// multiple of the branch width (`channels / 2`).
    pub expansion: usize,
}

impl Block2dConfig {
    pub fn new(channels: usize, kind: Block2dKind) -> Self {
        Self {
            channels,
            kernel: (3, 3),
            repeats: 3,
            kind,
            expansion: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let (kf, kt) = self.kernel;
        if self.channels == 0 || self.repeats == 0 || self.expansion == 0 {
            return Err(Error::Config(format!(
                "invalid 2D block configuration {self:?}"
            )));
        }
        if kf % 2 == 0 || kt % 2 == 0 {
            return Err(Error::Config(format!(
                "2D block kernel {:?} must be odd for same padding",
                self.kernel
            )));
        }
        if self.kind == Block2dKind::Shuffle && !self.channels.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "shuffle block needs an even channel count, got {}",
                self.channels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Unit {
    first: Conv2dParams,
    second: Conv2dParams,
}

/// A stack of 2D residual or shuffle units operating on `[C, F, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block2d {
    cfg: Block2dConfig,
    units: Vec<Unit>,
}

impl Block2d {
    pub fn new(cfg: Block2dConfig) -> Result<Self> {
        cfg.validate()?;
        let k = [cfg.kernel.0, cfg.kernel.1];
        let (input, hidden) = match cfg.kind {
            Block2dKind::Res => (cfg.channels, cfg.channels),
            Block2dKind::Shuffle => (cfg.channels / 2, cfg.channels / 2 * cfg.expansion),
        };
        let units = (0..cfg.repeats)
            .map(|_| Unit {
                first: Conv2dParams::same(input, hidden, k, [1, 1]),
                second: Conv2dParams::same(hidden, input, k, [1, 1]),
            })
            .collect();
        Ok(Self { cfg, units })
    }

    pub fn config(&self) -> &Block2dConfig {
        &self.cfg
    }

    /// Kernel weights only (biases excluded).
    pub fn conv_weight_count(&self) -> usize {
        self.units
            .iter()
            .map(|u| u.first.weight.len() + u.second.weight.len())
            .sum()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 3 {
            return Err(Error::Shape(format!(
                "2D block expects [C, F, T], got {input:?}"
            )));
        }
        if input[0] != self.cfg.channels {
            return Err(Error::ChannelMismatch {
                expected: self.cfg.channels,
                got: input[0],
            });
        }
        Ok(input.to_vec())
    }

    fn transform(&self, unit: &Unit, x: &Tensor) -> Result<Tensor> {
        let mut h = conv2d(&leaky_relu(x, LRELU_SLOPE), &unit.first)?;
        leaky_relu_inplace(&mut h, LRELU_SLOPE);
        conv2d(&h, &unit.second)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let mut y = x.clone();
        for unit in &self.units {
            y = match self.cfg.kind {
                Block2dKind::Res => {
                    let h = self.transform(unit, &y)?;
                    for (a, b) in y.data_mut().iter_mut().zip(h.data()) {
                        *a += b;
                    }
                    y
                }
                Block2dKind::Shuffle => {
                    let (skip, active) = channel_split(&y)?;
                    let h = self.transform(unit, &active)?;
                    channel_shuffle(&channel_concat(&skip, &h)?, 2)?
                }
            };
        }
        Ok(y)
    }
}

impl Params for Block2d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        for (i, u) in self.units.iter().enumerate() {
            let p = join(prefix, &format!("unit{i}"));
            u.first.visit(&join(&p, "conv1"), f);
            u.second.visit(&join(&p, "conv2"), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        for (i, u) in self.units.iter_mut().enumerate() {
            let p = join(prefix, &format!("unit{i}"));
            u.first.visit_mut(&join(&p, "conv1"), f);
            u.second.visit_mut(&join(&p, "conv2"), f);
        }
    }
}
