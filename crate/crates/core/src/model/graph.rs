use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::arch::ArchSpec;
use super::hyper::Hyper;
use crate::blocks::{
    Block2d, Block2dConfig, FreqUpsampleHead, Fusion, Mrf1d, Mrf1dConfig, To2d, Upsample1d,
};
use crate::dsp::{istft, PqmfBank, Spectrogram, StftConfig};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::{conv1d, leaky_relu, Conv1dParams, Tensor};

/// Slope of the leaky ReLU in front of a 1D output convolution.
pub const POST_SLOPE: f32 = 0.01;

/// Standard deviation of [`InitPolicy::Gaussian`] weights unless overridden.
pub const INIT_STD: f32 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitPolicy {
    Zeros,
    /// Weights drawn from `N(0, std²)` with a seeded ChaCha8 stream; biases zero.
    Gaussian {
        seed: u64,
        std: f32,
    },
}

impl InitPolicy {
    pub fn seeded(seed: u64) -> Self {
        Self::Gaussian {
            seed,
            std: INIT_STD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Plain 1D convolution, optionally preceded by a leaky ReLU.
    Conv1d {
        conv: Conv1dParams,
        pre_slope: Option<f32>,
    },
    Upsample(Upsample1d),
    Mrf(Mrf1d),
    To2d(To2d),
    Trunk(Block2d),
    FreqHead(FreqUpsampleHead),
}

impl Layer {
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv1d { conv, .. } => conv.output_shape(input),
            Layer::Upsample(l) => l.output_shape(input),
            Layer::Mrf(l) => l.output_shape(input),
            Layer::To2d(l) => l.output_shape(input),
            Layer::Trunk(l) => l.output_shape(input),
            Layer::FreqHead(l) => l.output_shape(input),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv1d {
                conv,
                pre_slope: Some(slope),
            } => conv1d(&leaky_relu(x, *slope), conv),
            Layer::Conv1d {
                conv,
                pre_slope: None,
            } => conv1d(x, conv),
            Layer::Upsample(l) => l.forward(x),
            Layer::Mrf(l) => l.forward(x),
            Layer::To2d(l) => l.forward(x),
            Layer::Trunk(l) => l.forward(x),
            Layer::FreqHead(l) => l.forward(x),
        }
    }

    fn params(&self) -> &dyn Params {
        match self {
            Layer::Conv1d { conv, .. } => conv,
            Layer::Upsample(l) => l,
            Layer::Mrf(l) => l,
            Layer::To2d(l) => l,
            Layer::Trunk(l) => l,
            Layer::FreqHead(l) => l,
        }
    }

    fn params_mut(&mut self) -> &mut dyn Params {
        match self {
            Layer::Conv1d { conv, .. } => conv,
            Layer::Upsample(l) => l,
            Layer::Mrf(l) => l,
            Layer::To2d(l) => l,
            Layer::Trunk(l) => l,
            Layer::FreqHead(l) => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedLayer {
    pub name: String,
    pub layer: Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadLayout {
    /// `[1, samples]`, squashed by `tanh`.
    Waveform,
    /// `[bands * 2F, frames]`: per band, F magnitude rows then F phase rows.
    Spectral1d,
    /// `[2 * bands, F, frames]`: per band, a magnitude channel then a phase channel.
    Spectral2d,
}

/// How the last layer's output is turned into audio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Head {
    pub layout: HeadLayout,
    /// Frequency bins per band (0 for waveform output).
    pub freq: usize,
    pub bands: usize,
    pub stft: Option<StftConfig>,
}

impl Head {
    /// Channels the final layer must produce.
    pub fn channels(&self) -> usize {
        match self.layout {
            HeadLayout::Waveform => 1,
            HeadLayout::Spectral1d => 2 * self.freq * self.bands,
            HeadLayout::Spectral2d => 2 * self.bands,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForwardMode {
    /// Reject non-finite activations after every layer.
    #[default]
    Checked,
    /// No per-layer checks (benchmarking).
    Fast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    arch: ArchSpec,
    hyper: Hyper,
    layers: Vec<NamedLayer>,
    head: Head,
    pqmf: Option<PqmfBank>,
}

/// Builds the layer graph for `spec` and initializes its weights.
pub fn build(spec: &ArchSpec, hyper: &Hyper, init: InitPolicy) -> Result<ModelGraph> {
    spec.validate()?;
    hyper.validate()?;
    if hyper.mrf_dilations.len() != hyper.mrf_kernels.len() {
        return Err(Error::Config(format!(
            "{} MRF kernels but {} dilation lists",
            hyper.mrf_kernels.len(),
            hyper.mrf_dilations.len()
        )));
    }

    let mut layers = Vec::new();
    let mut push = |name: String, layer: Layer| layers.push(NamedLayer { name, layer });

    let mut ch = hyper.base_channels;
    push(
        "conv_pre".into(),
        Layer::Conv1d {
            conv: Conv1dParams::same(hyper.mel_channels, ch, [hyper.input_kernel], [1]),
            pre_slope: None,
        },
    );

    let factors: Vec<usize> = spec.conv_factors().collect();
    let two_d = spec.block2d();
    for (i, &factor) in factors.iter().enumerate() {
        let up = Upsample1d::new(ch, factor, hyper.unit_stage_kernel)?;
        ch = up.out_channels();
        push(format!("ups.{i}"), Layer::Upsample(up));

        let fusion = if two_d.is_some() && i + 1 == factors.len() {
            Fusion::Concat
        } else {
            Fusion::Add
        };
        let mrf = Mrf1d::new(Mrf1dConfig {
            channels: ch,
            kernel_sizes: hyper.mrf_kernels.clone(),
            dilations: hyper.mrf_dilations.clone(),
            fusion,
        })?;
        ch = mrf.out_channels();
        push(format!("mrf.{i}"), Layer::Mrf(mrf));
    }

    let stft = spec.istft_config();
    let freq = spec.head_freq().unwrap_or(0);
    let layout = match (stft, two_d) {
        (None, _) => HeadLayout::Waveform,
        (Some(_), None) => HeadLayout::Spectral1d,
        (Some(_), Some(_)) => HeadLayout::Spectral2d,
    };
    let head = Head {
        layout,
        freq,
        bands: spec.bands,
        stft,
    };

    match (layout, two_d) {
        (HeadLayout::Spectral2d, Some(kind)) => {
            if !(freq - 1).is_multiple_of(hyper.freq_down) || freq <= hyper.freq_down {
                return Err(Error::Config(format!(
                    "{} frequency bins cannot be reduced {}× for the 2D trunk",
                    freq, hyper.freq_down
                )));
            }
            let trunk_freq = (freq - 1) / hyper.freq_down;
            push(
                "to2d".into(),
                Layer::To2d(To2d::new(ch, hyper.trunk_channels, trunk_freq)?),
            );
            push(
                "trunk".into(),
                Layer::Trunk(Block2d::new(Block2dConfig {
                    channels: hyper.trunk_channels,
                    kernel: hyper.trunk_kernel,
                    repeats: hyper.trunk_repeats,
                    kind,
                    expansion: hyper.shuffle_expansion,
                })?),
            );
            push(
                "head".into(),
                Layer::FreqHead(FreqUpsampleHead::new(
                    hyper.trunk_channels,
                    trunk_freq,
                    freq,
                    head.channels(),
                    hyper.head_kernel,
                )?),
            );
        }
        _ => push(
            "conv_post".into(),
            Layer::Conv1d {
                conv: Conv1dParams::same(ch, head.channels(), [hyper.output_kernel], [1]),
                pre_slope: Some(POST_SLOPE),
            },
        ),
    }

    let pqmf = match spec.bands {
        1 => None,
        4 => Some(PqmfBank::four_band()),
        b => return Err(Error::Config(format!("no PQMF design for {b} bands"))),
    };

    let mut graph = ModelGraph {
        arch: spec.clone(),
        hyper: hyper.clone(),
        layers,
        head,
        pqmf,
    };
    graph.static_shapes(1)?;
    graph.init(init);
    Ok(graph)
}

impl ModelGraph {
    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn layers(&self) -> &[NamedLayer] {
        &self.layers
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    /// Output samples produced for `frames` mel frames.
    pub fn output_len(&self, frames: usize) -> usize {
        frames * self.arch.base.hop()
    }

    /// Total learnable scalars.
    pub fn count_params(&self) -> usize {
        self.num_params()
    }

    pub fn init(&mut self, policy: InitPolicy) {
        match policy {
            InitPolicy::Zeros => self.visit_mut("", &mut |_, t| t.data_mut().fill(0.0)),
            InitPolicy::Gaussian { seed, std } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0f32, std).expect("std must be finite and ≥ 0");
                self.visit_mut("", &mut |name, t| {
                    if name.ends_with(".bias") {
                        t.data_mut().fill(0.0);
                    } else {
                        t.data_mut()
                            .iter_mut()
                            .for_each(|w| *w = normal.sample(&mut rng));
                    }
                });
            }
        }
    }

    /// Re-draws all weights from the seeded Gaussian policy.
    pub fn init_random(&mut self, seed: u64) {
        self.init(InitPolicy::seeded(seed));
    }

    /// Per-layer output shapes for a `frames`-long mel input, computed without
    /// running the network.
    pub fn static_shapes(&self, frames: usize) -> Result<Vec<(String, Vec<usize>)>> {
        let mut shape = vec![self.hyper.mel_channels, frames];
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            shape = l.layer.output_shape(&shape).map_err(|e| match e {
                Error::ChannelMismatch { expected, got } => Error::Shape(format!(
                    "layer {}: expected {expected} input channels, got {got}",
                    l.name
                )),
                other => other,
            })?;
            out.push((l.name.clone(), shape.clone()));
        }
        let expected = match self.head.layout {
            HeadLayout::Waveform => vec![1, self.output_len(frames)],
            HeadLayout::Spectral1d => {
                vec![self.head.channels(), frames * self.arch.neural_upsampling()]
            }
            HeadLayout::Spectral2d => vec![
                self.head.channels(),
                self.head.freq,
                frames * self.arch.neural_upsampling(),
            ],
        };
        if shape != expected {
            return Err(Error::Shape(format!(
                "final layer yields {shape:?}, head expects {expected:?}"
            )));
        }
        Ok(out)
    }

    /// Runs every layer, handing each named output to `observe`, and returns
    /// the raw head tensor.
    pub fn run_layers(
        &self,
        mel: &Tensor,
        mode: ForwardMode,
        observe: &mut dyn FnMut(&str, &Tensor),
    ) -> Result<Tensor> {
        if mel.ndim() != 2 || mel.channels() != self.hyper.mel_channels {
            return Err(Error::Shape(format!(
                "expected a [{}, T] mel spectrogram, got {:?}",
                self.hyper.mel_channels,
                mel.shape()
            )));
        }
        let mut x = mel.clone();
        for l in &self.layers {
            x = l.layer.forward(&x)?;
            if mode == ForwardMode::Checked && !x.is_finite() {
                return Err(Error::NonFinite {
                    layer: l.name.clone(),
                });
            }
            observe(&l.name, &x);
        }
        Ok(x)
    }

    /// Splits a spectral head output into per-band magnitude/phase
    /// spectrograms, with magnitude `exp(raw)` and phase taken as radians.
    pub fn decode_spectra(&self, raw: &Tensor) -> Result<Vec<Spectrogram>> {
        let Head {
            layout,
            freq,
            bands,
            ..
        } = self.head;
        let frames = *raw.shape().last().expect("non-empty shape");
        let plane = freq * frames;
        let rows = |band: usize, phase: bool| -> &[f32] {
            match layout {
                HeadLayout::Spectral1d => {
                    let start = (band * 2 + phase as usize) * plane;
                    &raw.data()[start..start + plane]
                }
                _ => raw.channel(2 * band + phase as usize),
            }
        };
        (0..bands)
            .map(|b| {
                let mag: Vec<f32> = rows(b, false).iter().map(|v| v.exp()).collect();
                Spectrogram::new(
                    Tensor::new(vec![freq, frames], mag)?,
                    Tensor::new(vec![freq, frames], rows(b, true).to_vec())?,
                )
            })
            .collect()
    }

    /// Mel spectrogram `[mel_channels, T]` to `hop * T` audio samples.
    pub fn forward(&self, mel: &Tensor) -> Result<Vec<f32>> {
        let mode = if cfg!(debug_assertions) {
            ForwardMode::Checked
        } else {
            ForwardMode::Fast
        };
        self.forward_with(mel, mode)
    }

    pub fn forward_with(&self, mel: &Tensor, mode: ForwardMode) -> Result<Vec<f32>> {
        let raw = self.run_layers(mel, mode, &mut |_, _| {})?;
        self.synthesize(&raw, mel.shape()[1], mode)
    }

    /// Turns a raw head tensor into audio for `frames` mel frames.
    pub fn synthesize(&self, raw: &Tensor, frames: usize, mode: ForwardMode) -> Result<Vec<f32>> {
        let total = self.output_len(frames);
        let audio = match self.head.layout {
            HeadLayout::Waveform => raw.data().iter().map(|v| v.tanh()).collect(),
            _ => {
                let cfg = self.head.stft.expect("spectral head has an STFT config");
                let spectra = self.decode_spectra(raw)?;
                let band_len = total / self.head.bands;
                let mut bands = Vec::with_capacity(band_len * self.head.bands);
                for spec in &spectra {
                    if mode == ForwardMode::Checked && !spec.magnitude.is_finite() {
                        return Err(Error::NonFinite {
                            layer: "magnitude".into(),
                        });
                    }
                    bands.extend(istft(spec, &cfg, band_len)?);
                }
                match &self.pqmf {
                    None => bands,
                    Some(bank) => {
                        bank.synthesis(&Tensor::new(vec![self.head.bands, band_len], bands)?)?
                    }
                }
            }
        };
        debug_assert_eq!(audio.len(), total);
        Ok(audio)
    }
}

impl Params for ModelGraph {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        for l in &self.layers {
            l.layer
                .params()
                .visit(&crate::params::join(prefix, &l.name), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        for l in &mut self.layers {
            l.layer
                .params_mut()
                .visit_mut(&crate::params::join(prefix, &l.name), f);
        }
    }
}
