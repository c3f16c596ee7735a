//! Residual convolutional regressor with a K-node quantile head.
//!
//! Layout for a `C x 50 x 50` input with width `w`:
//!
//! ```text
//! stem:   conv kxk(C -> w) -> scale/shift -> ReLU -> avgpool(p x p)
//! block:  x -> conv3x3 -> scale/shift -> ReLU -> conv3x3 -> scale/shift
//!           -> (+ x) -> ReLU -> dropout                      (n_blocks times)
//! head:   global avg pool -> FC(w -> hidden) -> ReLU -> FC(hidden -> K) -> ReLU
//! output: output_scale * head
//! ```
//!
//! Per-channel learnable scale/shift takes the place of batch normalization,
//! which keeps every sample's forward pass independent of the rest of the
//! batch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{self, ConvGeom};
use super::{QuantileSpec, Scalar, Tensor};
use crate::raster::{ChannelStats, Patch};
use crate::rng::stream;
use crate::{Error, Result, N_CHANNELS, PATCH_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub n_blocks: usize,
    pub base_width: usize,
    pub dropout_rate: f64,
    pub quantiles: QuantileSpec,
    pub head_hidden: usize,
    /// Odd kernel size of the full-resolution stem convolution.
    pub stem_kernel: usize,
    /// Average-pooling factor after the stem; must divide the patch size.
    pub stem_pool: usize,
    /// Fixed multiplier from head activations to pixel counts.
    pub output_scale: f64,
    /// Initial bias of the output layer (whose weights start at zero).
    pub head_bias_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            in_channels: N_CHANNELS,
            n_blocks: 3,
            base_width: 16,
            dropout_rate: 0.2,
            quantiles: QuantileSpec::default_three(),
            head_hidden: 32,
            stem_kernel: 3,
            stem_pool: 5,
            output_scale: 100.0,
            head_bias_init: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quantiles.median_index().is_none() {
            return Err(Error::Config(format!(
                "quantiles {:?} have no 0.5 node to read predictions from",
                self.quantiles.levels()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} is outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.in_channels == 0 || self.base_width == 0 || self.head_hidden == 0 {
            return Err(Error::Config("channel and layer widths must be positive".into()));
        }
        if self.stem_kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("stem kernel {} must be odd", self.stem_kernel)));
        }
        if self.stem_pool == 0 || !PATCH_SIZE.is_multiple_of(self.stem_pool) {
            return Err(Error::Config(format!(
                "stem pool {} does not divide the patch size {PATCH_SIZE}",
                self.stem_pool
            )));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::Config(format!(
                "output scale {} must be positive",
                self.output_scale
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.quantiles.len()
    }

    fn stem_geom(&self) -> ConvGeom {
        ConvGeom {
            in_ch: self.in_channels,
            out_ch: self.base_width,
            in_h: PATCH_SIZE,
            in_w: PATCH_SIZE,
            kernel: self.stem_kernel,
            stride: 1,
            pad: self.stem_kernel / 2,
        }
    }

    fn pooled_side(&self) -> usize {
        PATCH_SIZE / self.stem_pool
    }

    fn block_geom(&self) -> ConvGeom {
        let side = self.pooled_side();
        ConvGeom {
            in_ch: self.base_width,
            out_ch: self.base_width,
            in_h: side,
            in_w: side,
            kernel: 3,
            stride: 1,
            pad: 1,
        }
    }
}

/// Named learnable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

const STEM: usize = 0;
const BLOCK_STRIDE: usize = 6;

fn block_base(i: usize) -> usize {
    3 + BLOCK_STRIDE * i
}

/// Parameter tensors of a [`Network`] in declaration order.
pub fn param_layout(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let w = config.base_width;
    let mut out = vec![
        ("stem.conv.weight".to_string(), vec![w, config.stem_geom().patch_len()]),
        ("stem.affine.scale".to_string(), vec![w]),
        ("stem.affine.shift".to_string(), vec![w]),
    ];
    for i in 0..config.n_blocks {
        let p = config.block_geom().patch_len();
        for j in 1..=2 {
            out.push((format!("block{i}.conv{j}.weight"), vec![w, p]));
            out.push((format!("block{i}.affine{j}.scale"), vec![w]));
            out.push((format!("block{i}.affine{j}.shift"), vec![w]));
        }
    }
    let (h, k) = (config.head_hidden, config.k());
    out.push(("head.fc1.weight".to_string(), vec![h, w]));
    out.push(("head.fc1.bias".to_string(), vec![h]));
    out.push(("head.fc2.weight".to_string(), vec![k, h]));
    out.push(("head.fc2.bias".to_string(), vec![k]));
    out
}

/// Forward-pass mode. Dropout masks in training mode are drawn from a stream
/// derived from `dropout_seed` and the sample's position in the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

#[derive(Debug, Clone)]
struct BlockTape<T> {
    cols1: Vec<T>,
    conv1: Vec<T>,
    act1: Vec<T>,
    cols2: Vec<T>,
    conv2: Vec<T>,
    merged: Vec<T>,
    mask: Option<Vec<T>>,
}

/// Activations of one sample's forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct SampleTape<T> {
    stem_cols: Vec<T>,
    stem_conv: Vec<T>,
    stem_act: Vec<T>,
    blocks: Vec<BlockTape<T>>,
    features: Vec<T>,
    hidden: Vec<T>,
    head_pre: Vec<T>,
}

/// Recorded forward pass over a batch.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    samples: Vec<SampleTape<T>>,
}

impl<T> Tape<T> {
    pub fn new() -> Self {
        Tape { samples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl<T: Scalar> Tape<T> {
    /// On/off state of every ReLU in the recorded pass, output ReLU included.
    /// Two passes with equal patterns lie on the same linear piece.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let on = |v: &[T]| v.iter().map(|&x| x > T::zero()).collect::<Vec<_>>();
        let mut out = Vec::new();
        for s in &self.samples {
            out.extend(on(&s.stem_act));
            for b in &s.blocks {
                out.extend(on(&b.act1));
                out.extend(on(&b.merged));
            }
            out.extend(on(&s.hidden));
            out.extend(on(&s.head_pre));
        }
        out
    }
}

/// Gradient buffers matching a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_for(net: &Network<T>) -> Self {
        Gradients {
            tensors: net.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|v| *v == T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    config: ModelConfig,
    params: Vec<Param<T>>,
}

impl<T: Scalar> Network<T> {
    /// He-normal (fan-in) conv and hidden FC weights, unit scales, zero
    /// shifts and biases. The output layer starts with zero weights and a
    /// positive bias so no output unit begins inactive.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_layout(&config)
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = if name.ends_with(".scale") {
                    vec![T::one(); n]
                } else if name == "head.fc2.weight" {
                    vec![T::zero(); n]
                } else if name == "head.fc2.bias" {
                    vec![T::from_f64_lossy(config.head_bias_init); n]
                } else if name.ends_with(".weight") {
                    let fan_in = shape[1] as f64;
                    let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("valid std");
                    (0..n).map(|_| T::from_f64_lossy(normal.sample(&mut rng))).collect()
                } else {
                    vec![T::zero(); n]
                };
                Param { name, shape, data }
            })
            .collect();
        Ok(Network { config, params })
    }

    /// Rebuild from explicit parameter tensors, checked against the layout.
    pub fn from_params(config: ModelConfig, params: Vec<Param<T>>) -> Result<Self> {
        config.validate()?;
        let layout = param_layout(&config);
        if layout.len() != params.len() {
            return Err(Error::shape(
                format!("{} parameter tensors", layout.len()),
                params.len(),
            ));
        }
        for ((name, shape), p) in layout.iter().zip(&params) {
            if *name != p.name || *shape != p.shape || p.data.len() != shape.iter().product::<usize>() {
                return Err(Error::shape(
                    format!("{name} {shape:?}"),
                    format!("{} {:?} ({} values)", p.name, p.shape, p.data.len()),
                ));
            }
        }
        Ok(Network { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.params.iter().flat_map(|p| p.data.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::shape(format!("{} parameters", self.n_params()), flat.len()));
        }
        let mut off = 0;
        for p in &mut self.params {
            let n = p.data.len();
            p.data.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: p.data.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.config.in_channels * PATCH_SIZE * PATCH_SIZE
    }

    fn check_batch(&self, batch: &Tensor<T>) -> Result<usize> {
        let want = [self.config.in_channels, PATCH_SIZE, PATCH_SIZE];
        let shape = batch.shape();
        if shape.len() != 4 || shape[1..] != want {
            return Err(Error::shape(
                format!("[B, {}, {PATCH_SIZE}, {PATCH_SIZE}]", self.config.in_channels),
                format!("{shape:?}"),
            ));
        }
        Ok(shape[0])
    }

    /// Batched forward pass; returns `(B, K)` predictions.
    pub fn forward(&self, batch: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let b = self.check_batch(batch)?;
        let mut out = Vec::with_capacity(b * self.config.k());
        for i in 0..b {
            let (y, _) = self.forward_sample(batch.row(i), sample_rng(mode, i).as_mut());
            out.extend(y);
        }
        Tensor::new(vec![b, self.config.k()], out)
    }

    /// Forward pass that records activations into `tape` (replacing its contents).
    pub fn forward_recorded(&self, batch: &Tensor<T>, mode: Mode, tape: &mut Tape<T>) -> Result<Tensor<T>> {
        let b = self.check_batch(batch)?;
        tape.samples.clear();
        let mut out = Vec::with_capacity(b * self.config.k());
        for i in 0..b {
            let (y, t) = self.forward_sample(batch.row(i), sample_rng(mode, i).as_mut());
            out.extend(y);
            tape.samples.push(t);
        }
        Tensor::new(vec![b, self.config.k()], out)
    }

    /// Parameter gradients of `sum(dout * outputs)` for the recorded batch.
    pub fn backward(&self, tape: &Tape<T>, dout: &Tensor<T>) -> Result<Gradients<T>> {
        if tape.is_empty() {
            return Err(Error::Usage("backward called without a recorded forward pass".into()));
        }
        let k = self.config.k();
        if dout.shape() != [tape.len(), k] {
            return Err(Error::shape(
                format!("[{}, {k}]", tape.len()),
                format!("{:?}", dout.shape()),
            ));
        }
        let mut grads = Gradients::zeros_for(self);
        for (i, t) in tape.samples.iter().enumerate() {
            self.backward_sample(t, &dout.data()[i * k..(i + 1) * k], &mut grads);
        }
        Ok(grads)
    }

    /// One sample through the network. `input` is planar `C x 50 x 50`;
    /// passing an RNG enables dropout.
    pub fn forward_sample(&self, input: &[T], mut dropout: Option<&mut ChaCha8Rng>) -> (Vec<T>, SampleTape<T>) {
        let cfg = &self.config;
        let w = cfg.base_width;
        let sg = cfg.stem_geom();
        let p = &self.params;

        let mut stem_cols = Vec::new();
        let mut stem_conv = vec![T::zero(); sg.out_len()];
        layers::conv2d_forward(input, &sg, &p[STEM].data, &mut stem_cols, &mut stem_conv);
        let mut stem_act = vec![T::zero(); sg.out_len()];
        layers::scale_shift_forward(&stem_conv, &p[STEM + 1].data, &p[STEM + 2].data, &mut stem_act);
        layers::relu_inplace(&mut stem_act);

        let side = cfg.pooled_side();
        let mut x = vec![T::zero(); w * side * side];
        layers::avg_pool_forward(&stem_act, w, PATCH_SIZE, PATCH_SIZE, cfg.stem_pool, &mut x);

        let bg = cfg.block_geom();
        let mut blocks = Vec::with_capacity(cfg.n_blocks);
        for i in 0..cfg.n_blocks {
            let base = block_base(i);
            let mut cols1 = Vec::new();
            let mut conv1 = vec![T::zero(); bg.out_len()];
            layers::conv2d_forward(&x, &bg, &p[base].data, &mut cols1, &mut conv1);
            let mut act1 = vec![T::zero(); bg.out_len()];
            layers::scale_shift_forward(&conv1, &p[base + 1].data, &p[base + 2].data, &mut act1);
            layers::relu_inplace(&mut act1);

            let mut cols2 = Vec::new();
            let mut conv2 = vec![T::zero(); bg.out_len()];
            layers::conv2d_forward(&act1, &bg, &p[base + 3].data, &mut cols2, &mut conv2);
            let mut merged = vec![T::zero(); bg.out_len()];
            layers::scale_shift_forward(&conv2, &p[base + 4].data, &p[base + 5].data, &mut merged);
            for (m, &s) in merged.iter_mut().zip(&x) {
                *m += s;
            }
            layers::relu_inplace(&mut merged);

            let mut out = merged.clone();
            let mask = match dropout.as_deref_mut() {
                Some(rng) if cfg.dropout_rate > 0.0 => {
                    let mask = layers::dropout_mask(out.len(), cfg.dropout_rate, rng);
                    layers::apply_mask(&mut out, &mask);
                    Some(mask)
                }
                _ => None,
            };
            blocks.push(BlockTape {
                cols1,
                conv1,
                act1,
                cols2,
                conv2,
                merged,
                mask,
            });
            x = out;
        }

        let head = block_base(cfg.n_blocks);
        let mut features = vec![T::zero(); w];
        layers::gap_forward(&x, w, &mut features);
        let mut hidden = vec![T::zero(); cfg.head_hidden];
        layers::linear_forward(&features, &p[head].data, &p[head + 1].data, &mut hidden);
        layers::relu_inplace(&mut hidden);
        let mut head_pre = vec![T::zero(); cfg.k()];
        layers::linear_forward(&hidden, &p[head + 2].data, &p[head + 3].data, &mut head_pre);

        let scale = T::from_f64_lossy(cfg.output_scale);
        let out = head_pre
            .iter()
            .map(|&v| if v > T::zero() { v * scale } else { T::zero() })
            .collect();
        (
            out,
            SampleTape {
                stem_cols,
                stem_conv,
                stem_act,
                blocks,
                features,
                hidden,
                head_pre,
            },
        )
    }

    /// Accumulate into `grads` the parameter gradient of `sum(dout * outputs)`.
    pub fn backward_sample(&self, tape: &SampleTape<T>, dout: &[T], grads: &mut Gradients<T>) {
        let cfg = &self.config;
        let w = cfg.base_width;
        let p = &self.params;
        let g = &mut grads.tensors;
        let head = block_base(cfg.n_blocks);

        let scale = T::from_f64_lossy(cfg.output_scale);
        let dpre: Vec<T> = dout
            .iter()
            .zip(&tape.head_pre)
            .map(|(&d, &v)| if v > T::zero() { d * scale } else { T::zero() })
            .collect();

        let mut dhidden = vec![T::zero(); cfg.head_hidden];
        {
            let (gw, gb) = split_pair(g, head + 2);
            layers::linear_backward(&dpre, &tape.hidden, &p[head + 2].data, gw, gb, Some(&mut dhidden));
        }
        layers::relu_backward_inplace(&mut dhidden, &tape.hidden);
        let mut dfeat = vec![T::zero(); w];
        {
            let (gw, gb) = split_pair(g, head);
            layers::linear_backward(&dhidden, &tape.features, &p[head].data, gw, gb, Some(&mut dfeat));
        }

        let bg = cfg.block_geom();
        let mut dx = vec![T::zero(); bg.out_len()];
        layers::gap_backward(&dfeat, w, &mut dx);

        let mut scratch = Vec::new();
        let mut tmp = vec![T::zero(); bg.out_len()];
        let mut dprev = vec![T::zero(); bg.out_len()];
        for i in (0..cfg.n_blocks).rev() {
            let bt = &tape.blocks[i];
            let base = block_base(i);
            // dx: gradient w.r.t. the block output; turn it into d(sum) in place.
            if let Some(mask) = &bt.mask {
                layers::apply_mask(&mut dx, mask);
            }
            layers::relu_backward_inplace(&mut dx, &bt.merged);
            {
                let (gs, gb) = split_pair(g, base + 4);
                layers::scale_shift_backward(&dx, &bt.conv2, &p[base + 4].data, gs, gb, &mut tmp);
            }
            let mut dact1 = vec![T::zero(); bg.out_len()];
            layers::conv2d_backward(
                &tmp,
                &bg,
                &p[base + 3].data,
                &bt.cols2,
                &mut g[base + 3],
                Some(&mut dact1),
                &mut scratch,
            );
            layers::relu_backward_inplace(&mut dact1, &bt.act1);
            {
                let (gs, gb) = split_pair(g, base + 1);
                layers::scale_shift_backward(&dact1, &bt.conv1, &p[base + 1].data, gs, gb, &mut tmp);
            }
            layers::conv2d_backward(
                &tmp,
                &bg,
                &p[base].data,
                &bt.cols1,
                &mut g[base],
                Some(&mut dprev),
                &mut scratch,
            );
            // identity skip
            for (a, &b) in dprev.iter_mut().zip(&dx) {
                *a += b;
            }
            std::mem::swap(&mut dx, &mut dprev);
        }

        let sg = cfg.stem_geom();
        let mut dstem = vec![T::zero(); sg.out_len()];
        layers::avg_pool_backward(&dx, w, PATCH_SIZE, PATCH_SIZE, cfg.stem_pool, &mut dstem);
        layers::relu_backward_inplace(&mut dstem, &tape.stem_act);
        let mut dconv = vec![T::zero(); sg.out_len()];
        {
            let (gs, gb) = split_pair(g, STEM + 1);
            layers::scale_shift_backward(&dstem, &tape.stem_conv, &p[STEM + 1].data, gs, gb, &mut dconv);
        }
        layers::conv2d_backward(
            &dconv,
            &sg,
            &p[STEM].data,
            &tape.stem_cols,
            &mut g[STEM],
            None,
            &mut scratch,
        );
    }
}

/// Mutable borrows of two adjacent gradient tensors.
fn split_pair<T>(g: &mut [Vec<T>], i: usize) -> (&mut [T], &mut [T]) {
    let (a, b) = g[i..].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

fn sample_rng(mode: Mode, index: usize) -> Option<ChaCha8Rng> {
    match mode {
        Mode::Eval => None,
        Mode::Train { dropout_seed } => Some(stream(dropout_seed, &[index as u64])),
    }
}

/// A trained model: network parameters plus everything needed to prepare
/// raw patch inputs for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub network: Network<f32>,
    /// Statistics for the selected channels, estimated on the training split.
    pub stats: ChannelStats,
    /// Canonical channel indices fed to the network, in order.
    pub input_channels: Vec<usize>,
    pub rng_seed: u64,
}

impl ModelState {
    pub fn new(network: Network<f32>, stats: ChannelStats, input_channels: Vec<usize>, rng_seed: u64) -> Result<Self> {
        let c = network.config().in_channels;
        if input_channels.len() != c || stats.channels() != c {
            return Err(Error::shape(
                format!("{c} input channels and statistics"),
                format!("{} channels, {} statistics", input_channels.len(), stats.channels()),
            ));
        }
        if let Some(&bad) = input_channels.iter().find(|&&i| i >= N_CHANNELS) {
            return Err(Error::Config(format!("input channel index {bad} out of range")));
        }
        Ok(ModelState {
            network,
            stats,
            input_channels,
            rng_seed,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.network.config()
    }

    pub fn quantiles(&self) -> &QuantileSpec {
        &self.network.config().quantiles
    }

    /// Select this model's channels from a canonical 5-channel planar input
    /// and standardize them.
    pub fn prepare_input(&self, raw: &[f32]) -> Result<Vec<f32>> {
        let plane = PATCH_SIZE * PATCH_SIZE;
        if raw.len() != N_CHANNELS * plane {
            return Err(Error::shape(
                format!("{N_CHANNELS}x{PATCH_SIZE}x{PATCH_SIZE} input"),
                format!("{} values", raw.len()),
            ));
        }
        let mut selected = Vec::with_capacity(self.input_channels.len() * plane);
        for &c in &self.input_channels {
            selected.extend_from_slice(&raw[c * plane..(c + 1) * plane]);
        }
        self.stats.normalize(&selected)
    }

    /// All K node outputs for one raw patch input, in eval mode.
    pub fn predict_nodes(&self, raw: &[f32]) -> Result<Vec<f32>> {
        let x = self.prepare_input(raw)?;
        Ok(self.network.forward_sample(&x, None).0)
    }

    /// Building-pixel estimate: the output of the 0.5 node.
    pub fn predict_median(&self, patch: &Patch) -> Result<f64> {
        let idx = self
            .quantiles()
            .median_index()
            .ok_or_else(|| Error::Config("model has no 0.5 quantile node".into()))?;
        Ok(self.predict_nodes(&patch.input)?[idx] as f64)
    }
}
