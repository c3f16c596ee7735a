//! Experiment-setting-aware splits, the training loop and the ablation
//! harness.

mod checkpoint;
mod optim;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, CheckpointHeader, ParamEntry,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use optim::{Adam, Optimizer, OptimizerKind};

use crate::nnet::{Gradients, ModelConfig, ModelState, Network, QuantileSpec};
use crate::qloss::quantile_loss;
use crate::raster::{ChannelStats, Patch};
use crate::rng::stream;
use crate::synthdata::{Dataset, Manifest};
use crate::{Error, Result, N_CHANNELS, PATCH_AREA};

/// Which tiles train and which test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum ExperimentSetting {
    /// Random split over every region.
    #[default]
    Holistic,
    /// Random split within one region only.
    IntraCountry(String),
    /// Train on every other region, test on all of this one.
    Exclusive(String),
}

impl fmt::Display for ExperimentSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentSetting::Holistic => write!(f, "holistic"),
            ExperimentSetting::IntraCountry(t) => write!(f, "intra:{t}"),
            ExperimentSetting::Exclusive(t) => write!(f, "exclusive:{t}"),
        }
    }
}

impl FromStr for ExperimentSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = |rest: &str| {
            if rest.is_empty() {
                Err(Error::Config(format!("setting {s:?} needs a region tag")))
            } else {
                Ok(rest.to_string())
            }
        };
        if s == "holistic" {
            Ok(ExperimentSetting::Holistic)
        } else if let Some(rest) = s.strip_prefix("intra:") {
            Ok(ExperimentSetting::IntraCountry(tag(rest)?))
        } else if let Some(rest) = s.strip_prefix("exclusive:") {
            Ok(ExperimentSetting::Exclusive(tag(rest)?))
        } else {
            Err(Error::Config(format!(
                "unknown setting {s:?}; expected holistic, intra:<tag> or exclusive:<tag>"
            )))
        }
    }
}

/// Model variant used for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Ablation {
    #[default]
    None,
    /// A single 0.5 output node instead of the multi-node head.
    SingleNode,
    /// Remove one canonical input channel.
    DropChannel(usize),
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ablation::None => write!(f, "none"),
            Ablation::SingleNode => write!(f, "single-node"),
            Ablation::DropChannel(i) => write!(f, "drop-channel:{i}"),
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ablation::None),
            "single-node" | "single_node" => Ok(Ablation::SingleNode),
            _ => {
                let rest = s
                    .strip_prefix("drop-channel:")
                    .or_else(|| s.strip_prefix("drop_channel:"))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown ablation {s:?}; expected none, single-node or drop-channel:<i>"
                        ))
                    })?;
                let i: usize = rest
                    .parse()
                    .map_err(|_| Error::Config(format!("bad channel index in {s:?}")))?;
                if i >= N_CHANNELS {
                    return Err(Error::Config(format!("channel index {i} out of range 0..{N_CHANNELS}")));
                }
                Ok(Ablation::DropChannel(i))
            }
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
string_serde!(ExperimentSetting);
string_serde!(Ablation);

impl Ablation {
    /// Canonical channel indices fed to the model.
    pub fn input_channels(&self) -> Vec<usize> {
        match self {
            Ablation::DropChannel(i) => (0..N_CHANNELS).filter(|c| c != i).collect(),
            _ => (0..N_CHANNELS).collect(),
        }
    }

    /// The model config this ablation actually trains.
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut cfg = base.clone();
        match self {
            Ablation::None => {}
            Ablation::SingleNode => cfg.quantiles = QuantileSpec::median_only(),
            Ablation::DropChannel(_) => cfg.in_channels = N_CHANNELS - 1,
        }
        cfg
    }
}

/// Granularity of the random train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitUnit {
    /// Whole tiles, so tile-level coverage can be evaluated on the test side.
    #[default]
    Tile,
    Patch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub setting: ExperimentSetting,
    pub ablation: Ablation,
    pub split_unit: SplitUnit,
    /// Share of units held out for testing (random settings only).
    pub test_fraction: f64,
    /// Share of the training units carved off for the validation loss.
    pub validation_fraction: f64,
    /// Set output biases from training-label quantiles before the first step.
    pub warm_start_head: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.002,
            epochs: 60,
            batch_size: 64,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            setting: ExperimentSetting::Holistic,
            ablation: Ablation::None,
            split_unit: SplitUnit::Tile,
            test_fraction: 0.1,
            validation_fraction: 0.1,
            warm_start_head: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("validation_fraction", self.validation_fraction),
        ] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("{name} {f} is outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// One patch of a manifest: `(tile index, patch index within the tile)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatchRef {
    pub tile: usize,
    pub patch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<PatchRef>,
    pub test: Vec<PatchRef>,
}

const DOMAIN_SPLIT: u64 = 0x5350_4c54;
const DOMAIN_VALID: u64 = 0x5641_4c44;
const DOMAIN_INIT: u64 = 0x494e_4954;
const DOMAIN_SHUFFLE: u64 = 0x5348_4646;
const DOMAIN_DROPOUT: u64 = 0x4452_4f50;

fn all_refs(manifest: &Manifest, tiles: &[usize]) -> Vec<PatchRef> {
    tiles
        .iter()
        .flat_map(|&t| (0..manifest.tiles[t].patches.len()).map(move |p| PatchRef { tile: t, patch: p }))
        .collect()
}

/// Shuffle `units` with `seed` and move `round(fraction * n)` of them to the
/// second output. Both outputs come back sorted.
fn split_units<T: Ord + Clone>(units: &[T], fraction: f64, seed: u64, domain: u64) -> (Vec<T>, Vec<T>) {
    let mut shuffled = units.to_vec();
    shuffled.shuffle(&mut stream(seed, &[domain]));
    let n_out = (fraction * units.len() as f64).round() as usize;
    let mut held = shuffled[..n_out].to_vec();
    let mut kept = shuffled[n_out..].to_vec();
    held.sort();
    kept.sort();
    (kept, held)
}

fn random_split(manifest: &Manifest, tiles: &[usize], unit: SplitUnit, fraction: f64, seed: u64) -> Splits {
    match unit {
        SplitUnit::Tile => {
            let (train, test) = split_units(tiles, fraction, seed, DOMAIN_SPLIT);
            Splits {
                train: all_refs(manifest, &train),
                test: all_refs(manifest, &test),
            }
        }
        SplitUnit::Patch => {
            let (train, test) = split_units(&all_refs(manifest, tiles), fraction, seed, DOMAIN_SPLIT);
            Splits { train, test }
        }
    }
}

/// Disjoint, seeded train/test partition of a manifest's patches.
pub fn build_splits(
    manifest: &Manifest,
    setting: &ExperimentSetting,
    seed: u64,
    unit: SplitUnit,
    test_fraction: f64,
) -> Result<Splits> {
    if manifest.tiles.is_empty() {
        return Err(Error::Empty("manifest lists no tiles".into()));
    }
    let tags = manifest.region_tags();
    let check_tag = |t: &str| {
        if tags.iter().any(|x| x == t) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown region tag {t:?}; available: {}",
                tags.join(", ")
            )))
        }
    };
    let tiles_where = |pred: &dyn Fn(&str) -> bool| -> Vec<usize> {
        (0..manifest.tiles.len())
            .filter(|&i| pred(&manifest.tiles[i].region_tag))
            .collect()
    };
    let splits = match setting {
        ExperimentSetting::Holistic => random_split(manifest, &tiles_where(&|_| true), unit, test_fraction, seed),
        ExperimentSetting::IntraCountry(t) => {
            check_tag(t)?;
            random_split(manifest, &tiles_where(&|r| r == t), unit, test_fraction, seed)
        }
        ExperimentSetting::Exclusive(t) => {
            check_tag(t)?;
            Splits {
                train: all_refs(manifest, &tiles_where(&|r| r != t)),
                test: all_refs(manifest, &tiles_where(&|r| r == t)),
            }
        }
    };
    if splits.train.is_empty() || splits.test.is_empty() {
        return Err(Error::Empty(format!(
            "setting {setting} leaves {} train and {} test patches",
            splits.train.len(),
            splits.test.len()
        )));
    }
    Ok(splits)
}

/// Independent check of a split against its setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAudit {
    pub setting: String,
    pub train_patches: usize,
    pub validation_patches: usize,
    pub test_patches: usize,
    pub train_by_region: BTreeMap<String, usize>,
    pub test_by_region: BTreeMap<String, usize>,
    /// Patches appearing in both train (incl. validation) and test.
    pub overlap: usize,
    /// Training patches from a region the setting forbids in training.
    pub forbidden_in_train: usize,
    pub ok: bool,
}

pub fn audit_split(
    manifest: &Manifest,
    setting: &ExperimentSetting,
    splits: &Splits,
    validation: &[PatchRef],
) -> SplitAudit {
    use std::collections::HashSet;
    let region = |r: &PatchRef| manifest.tiles[r.tile].region_tag.clone();
    let mut train_by_region = BTreeMap::new();
    let mut test_by_region = BTreeMap::new();
    for r in splits.train.iter().chain(validation) {
        *train_by_region.entry(region(r)).or_insert(0) += 1;
    }
    for r in &splits.test {
        *test_by_region.entry(region(r)).or_insert(0) += 1;
    }
    let test: HashSet<&PatchRef> = splits.test.iter().collect();
    let overlap = splits
        .train
        .iter()
        .chain(validation)
        .filter(|r| test.contains(r))
        .count();
    let forbidden_in_train = splits
        .train
        .iter()
        .chain(validation)
        .filter(|r| match setting {
            ExperimentSetting::Holistic => false,
            ExperimentSetting::IntraCountry(t) => region(r) != *t,
            ExperimentSetting::Exclusive(t) => region(r) == *t,
        })
        .count();
    let test_outside = splits
        .test
        .iter()
        .filter(|r| match setting {
            ExperimentSetting::Holistic => false,
            ExperimentSetting::IntraCountry(t) | ExperimentSetting::Exclusive(t) => region(r) != *t,
        })
        .count();
    SplitAudit {
        setting: setting.to_string(),
        train_patches: splits.train.len(),
        validation_patches: validation.len(),
        test_patches: splits.test.len(),
        train_by_region,
        test_by_region,
        overlap,
        forbidden_in_train,
        ok: overlap == 0 && forbidden_in_train == 0 && test_outside == 0,
    }
}

/// Carve a validation subset out of the training refs, by the same unit.
pub fn carve_validation(
    train: &[PatchRef],
    unit: SplitUnit,
    fraction: f64,
    seed: u64,
) -> (Vec<PatchRef>, Vec<PatchRef>) {
    match unit {
        SplitUnit::Patch => split_units(train, fraction, seed, DOMAIN_VALID),
        SplitUnit::Tile => {
            let mut tiles: Vec<usize> = train.iter().map(|r| r.tile).collect();
            tiles.dedup();
            let (_, val_tiles) = split_units(&tiles, fraction, seed, DOMAIN_VALID);
            train.iter().partition(|r| val_tiles.binary_search(&r.tile).is_err())
        }
    }
}

/// One row of the per-epoch metrics trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when no validation patches could be carved off.
    pub val_loss: Option<f64>,
    pub wall_seconds: f64,
}

fn fmt_loss(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

/// `epoch,train_loss,val_loss,wall_seconds`
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,wall_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3}\n",
            r.epoch,
            fmt_loss(Some(r.train_loss)),
            fmt_loss(r.val_loss),
            r.wall_seconds
        ));
    }
    out
}

/// The trace without wall-clock times: a pure function of the inputs.
pub fn loss_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.epoch,
            fmt_loss(Some(r.train_loss)),
            fmt_loss(r.val_loss)
        ));
    }
    out
}

/// In-memory training examples with channels already selected.
pub struct Examples {
    pub inputs: Vec<Vec<f32>>,
    pub labels: Vec<f64>,
}

impl Examples {
    pub fn from_patches(patches: &[Patch], channels: &[usize]) -> Self {
        let plane = PATCH_AREA;
        let inputs = patches
            .iter()
            .map(|p| {
                let mut x = Vec::with_capacity(channels.len() * plane);
                for &c in channels {
                    x.extend_from_slice(&p.input[c * plane..(c + 1) * plane]);
                }
                x
            })
            .collect();
        Examples {
            inputs,
            labels: patches.iter().map(|p| p.label as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn normalize(&mut self, stats: &ChannelStats) -> Result<()> {
        for x in &mut self.inputs {
            *x = stats.normalize(x)?;
        }
        Ok(())
    }
}

pub struct TrainOutcome {
    pub state: ModelState,
    pub trace: Vec<TraceRow>,
    pub splits: Splits,
    pub validation: Vec<PatchRef>,
    pub audit: SplitAudit,
}

/// Load the referenced patches, in order.
pub fn load_refs(dataset: &Dataset, refs: &[PatchRef]) -> Result<Vec<Patch>> {
    let mut out = Vec::with_capacity(refs.len());
    let mut cache: Option<(usize, Vec<Patch>)> = None;
    for r in refs {
        if cache.as_ref().map(|c| c.0) != Some(r.tile) {
            cache = Some((r.tile, dataset.tile_patches(&dataset.manifest.tiles[r.tile])?));
        }
        let patches = &cache.as_ref().expect("just filled").1;
        out.push(patches[r.patch].clone());
    }
    Ok(out)
}

/// Per-sample loss and gradient for one example, in train mode.
fn sample_step(
    net: &Network<f32>,
    x: &[f32],
    label: f64,
    spec: &QuantileSpec,
    dropout_seed: u64,
    inv_batch: f64,
) -> Result<(f64, Gradients<f32>)> {
    let mut rng = stream(dropout_seed, &[]);
    let (out, tape) = net.forward_sample(x, Some(&mut rng));
    let preds: Vec<f64> = out.iter().map(|&v| v as f64).collect();
    let loss = quantile_loss(label, &preds, spec)?;
    let dout: Vec<f32> = loss.gradient.iter().map(|g| (g * inv_batch) as f32).collect();
    let mut grads = Gradients::zeros_for(net);
    net.backward_sample(&tape, &dout, &mut grads);
    Ok((loss.value, grads))
}

#[cfg(feature = "parallel")]
fn batch_steps(
    net: &Network<f32>,
    ex: &Examples,
    idx: &[usize],
    spec: &QuantileSpec,
    seeds: &[u64],
    inv_batch: f64,
) -> Result<Vec<(f64, Gradients<f32>)>> {
    use rayon::prelude::*;
    idx.par_iter()
        .zip(seeds)
        .map(|(&i, &s)| sample_step(net, &ex.inputs[i], ex.labels[i], spec, s, inv_batch))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn batch_steps(
    net: &Network<f32>,
    ex: &Examples,
    idx: &[usize],
    spec: &QuantileSpec,
    seeds: &[u64],
    inv_batch: f64,
) -> Result<Vec<(f64, Gradients<f32>)>> {
    idx.iter()
        .zip(seeds)
        .map(|(&i, &s)| sample_step(net, &ex.inputs[i], ex.labels[i], spec, s, inv_batch))
        .collect()
}

/// Mean eval-mode quantile loss over normalized examples.
pub fn eval_loss(net: &Network<f32>, ex: &Examples) -> Result<f64> {
    let spec = &net.config().quantiles;
    let mut total = 0.0;
    for (x, &y) in ex.inputs.iter().zip(&ex.labels) {
        let out: Vec<f64> = net.forward_sample(x, None).0.iter().map(|&v| v as f64).collect();
        total += quantile_loss(y, &out, spec)?.value;
    }
    Ok(total / ex.len() as f64)
}

/// Start each output node at the training-label quantile it is pulled
/// toward (node q settles on the (1 - q)-quantile), floored at one pixel so
/// the output ReLU begins active. A head started far above small labels can
/// overshoot below zero on its way down and never recover.
pub fn warm_start_head(net: &mut Network<f32>, labels: &[f64]) {
    if labels.is_empty() {
        return;
    }
    let mut sorted = labels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = net.config().output_scale;
    let levels = net.config().quantiles.levels().to_vec();
    let bias = net
        .params_mut()
        .iter_mut()
        .find(|p| p.name == "head.fc2.bias")
        .expect("every network has an output bias");
    for (b, q) in bias.data.iter_mut().zip(levels) {
        let pos = ((1.0 - q) * (sorted.len() - 1) as f64).round() as usize;
        *b = (sorted[pos].max(1.0) / scale) as f32;
    }
}

/// Train on preloaded, unnormalized examples. Per-sample gradients are summed
/// in batch order, so results do not depend on the thread count.
pub fn train_on_examples(
    mut train: Examples,
    mut validation: Option<Examples>,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    input_channels: Vec<usize>,
    mut on_epoch: impl FnMut(&TraceRow),
) -> Result<(ModelState, Vec<TraceRow>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("no training examples".into()));
    }
    let stats = ChannelStats::from_inputs(train.inputs.iter().map(|x| x.as_slice()), model_cfg.in_channels)?;
    train.normalize(&stats)?;
    if let Some(v) = validation.as_mut() {
        v.normalize(&stats)?;
    }

    let mut net = Network::<f32>::init(model_cfg.clone(), crate::rng::derive_seed(cfg.seed, &[DOMAIN_INIT]))?;
    if cfg.warm_start_head {
        warm_start_head(&mut net, &train.labels);
    }
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &net);
    let spec = model_cfg.quantiles.clone();
    let start = Instant::now();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut stream(cfg.seed, &[DOMAIN_SHUFFLE, epoch as u64]));
        let mut epoch_loss = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let seeds: Vec<u64> = (0..idx.len())
                .map(|j| crate::rng::derive_seed(cfg.seed, &[DOMAIN_DROPOUT, epoch as u64, b as u64, j as u64]))
                .collect();
            let inv_batch = 1.0 / idx.len() as f64;
            let steps = batch_steps(&net, &train, idx, &spec, &seeds, inv_batch)?;
            let mut grads = Gradients::zeros_for(&net);
            let mut batch_loss = 0.0;
            for (l, g) in &steps {
                batch_loss += l;
                grads.add_assign(g);
            }
            let batch_loss = batch_loss * inv_batch;
            if !batch_loss.is_finite() || grads.tensors.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch: b + 1,
                    loss: batch_loss,
                });
            }
            opt.step(&mut net, &grads);
            epoch_loss += batch_loss * idx.len() as f64;
        }
        let train_loss = epoch_loss / train.len() as f64;
        let val_loss = match &validation {
            Some(v) if !v.is_empty() => Some(eval_loss(&net, v)?),
            _ => None,
        };
        if val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                batch: 0,
                loss: val_loss.unwrap_or(f64::NAN),
            });
        }
        let row = TraceRow {
            epoch,
            train_loss,
            val_loss,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&row);
        trace.push(row);
    }
    let state = ModelState::new(net, stats, input_channels, cfg.seed)?;
    Ok((state, trace))
}

/// Full training run on a dataset: split by setting, carve validation, apply
/// the ablation, train.
pub fn train_model(
    dataset: &Dataset,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    on_epoch: impl FnMut(&TraceRow),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let model_cfg = cfg.ablation.apply(model_cfg);
    model_cfg.validate()?;
    let manifest = &dataset.manifest;
    let splits = build_splits(manifest, &cfg.setting, cfg.seed, cfg.split_unit, cfg.test_fraction)?;
    let (fit, validation) = carve_validation(&splits.train, cfg.split_unit, cfg.validation_fraction, cfg.seed);
    let splits = Splits {
        train: fit,
        test: splits.test,
    };
    let audit = audit_split(manifest, &cfg.setting, &splits, &validation);
    if !audit.ok {
        return Err(Error::Usage(format!("split audit failed: {audit:?}")));
    }
    log::info!(
        "setting {}: {} train / {} validation / {} test patches; train regions {:?}",
        cfg.setting,
        splits.train.len(),
        validation.len(),
        splits.test.len(),
        audit.train_by_region
    );

    let channels = cfg.ablation.input_channels();
    let train_ex = Examples::from_patches(&load_refs(dataset, &splits.train)?, &channels);
    let val_ex = if validation.is_empty() {
        None
    } else {
        Some(Examples::from_patches(&load_refs(dataset, &validation)?, &channels))
    };
    let (state, trace) = train_on_examples(train_ex, val_ex, cfg, &model_cfg, channels, on_epoch)?;
    Ok(TrainOutcome {
        state,
        trace,
        splits,
        validation,
        audit,
    })
}
