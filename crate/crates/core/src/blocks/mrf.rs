use super::LRELU_SLOPE;
use crate::error::{Error, Result};
use crate::params::{join, Params};
use crate::tensor::{channel_concat, conv1d, leaky_relu, leaky_relu_inplace, Conv1dParams, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fusion {
    /// Branch outputs are averaged; channel count is preserved.
    Add,
    /// Branch outputs are stacked along the channel axis.
    Concat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mrf1dConfig {
    pub channels: usize,
    pub kernel_sizes: Vec<usize>,
    /// One dilation list per kernel size.
    pub dilations: Vec<Vec<usize>>,
    pub fusion: Fusion,
}

impl Mrf1dConfig {
    /// Kernels 3/7/11, dilations 1/3/5 in every branch.
    pub fn new(channels: usize, fusion: Fusion) -> Self {
        Self {
            channels,
            kernel_sizes: vec![3, 7, 11],
            dilations: vec![vec![1, 3, 5]; 3],
            fusion,
        }
    }

    pub fn out_channels(&self) -> usize {
        match self.fusion {
            Fusion::Add => self.channels,
            Fusion::Concat => self.channels * self.kernel_sizes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ResUnit {
    dilated: Conv1dParams,
    undilated: Conv1dParams,
}

/// HiFi-GAN style multi-receptive-field block: one residual branch per
/// kernel size, each a stack of `LReLU → dilated conv → LReLU → conv (+x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrf1d {
    cfg: Mrf1dConfig,
    branches: Vec<Vec<ResUnit>>,
}

impl Mrf1d {
    pub fn new(cfg: Mrf1dConfig) -> Result<Self> {
        if cfg.channels == 0 || cfg.kernel_sizes.is_empty() {
            return Err(Error::Config(
                "MRF needs channels and at least one kernel".into(),
            ));
        }
        if cfg.dilations.len() != cfg.kernel_sizes.len() {
            return Err(Error::Config(format!(
                "{} kernel sizes but {} dilation lists",
                cfg.kernel_sizes.len(),
                cfg.dilations.len()
            )));
        }
        let c = cfg.channels;
        let mut branches = Vec::with_capacity(cfg.kernel_sizes.len());
        for (&k, dils) in cfg.kernel_sizes.iter().zip(&cfg.dilations) {
            if k % 2 == 0 || dils.is_empty() || dils.contains(&0) {
                return Err(Error::Config(format!(
                    "MRF branch needs an odd kernel and positive dilations (k={k}, d={dils:?})"
                )));
            }
            branches.push(
                dils.iter()
                    .map(|&d| ResUnit {
                        dilated: Conv1dParams::same(c, c, [k], [d]),
                        undilated: Conv1dParams::same(c, c, [k], [1]),
                    })
                    .collect(),
            );
        }
        Ok(Self { cfg, branches })
    }

    pub fn config(&self) -> &Mrf1dConfig {
        &self.cfg
    }

    pub fn out_channels(&self) -> usize {
        self.cfg.out_channels()
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 2 || input[0] != self.cfg.channels {
            return Err(Error::ChannelMismatch {
                expected: self.cfg.channels,
                got: input.first().copied().unwrap_or(0),
            });
        }
        Ok(vec![self.out_channels(), input[1]])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.output_shape(x.shape())?;
        let mut fused: Option<Tensor> = None;
        for units in &self.branches {
            let mut y = x.clone();
            for unit in units {
                let mut h = conv1d(&leaky_relu(&y, LRELU_SLOPE), &unit.dilated)?;
                leaky_relu_inplace(&mut h, LRELU_SLOPE);
                let h = conv1d(&h, &unit.undilated)?;
                for (a, b) in y.data_mut().iter_mut().zip(h.data()) {
                    *a += b;
                }
            }
            fused = Some(match (fused, self.cfg.fusion) {
                (None, _) => y,
                (Some(mut acc), Fusion::Add) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(y.data()) {
                        *a += b;
                    }
                    acc
                }
                (Some(acc), Fusion::Concat) => channel_concat(&acc, &y)?,
            });
        }
        let mut out = fused.expect("at least one branch");
        if self.cfg.fusion == Fusion::Add {
            let n = self.branches.len() as f32;
            out.map_inplace(|v| v / n);
        }
        Ok(out)
    }
}

impl Params for Mrf1d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        for (b, units) in self.branches.iter().enumerate() {
            for (u, unit) in units.iter().enumerate() {
                let p = join(prefix, &format!("branch{b}.unit{u}"));
                unit.dilated.visit(&join(&p, "conv1"), f);
                unit.undilated.visit(&join(&p, "conv2"), f);
            }
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        for (b, units) in self.branches.iter_mut().enumerate() {
            for (u, unit) in units.iter_mut().enumerate() {
                let p = join(prefix, &format!("branch{b}.unit{u}"));
                unit.dilated.visit_mut(&join(&p, "conv1"), f);
                unit.undilated.visit_mut(&join(&p, "conv2"), f);
            }
        }
    }
}
