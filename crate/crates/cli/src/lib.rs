//! Subcommands of the `coverest` binary. Each command writes its outputs plus
//! one `run_manifest.json` into its output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use coverest::eval::{self, median_estimate, predict_nodes, tile_coverage, write_json};
use coverest::nnet::{ModelConfig, ModelState};
use coverest::raster::read_mask_cras;
use coverest::sha256_hex;
use coverest::synthdata::{generate_dataset, load_dataset, Dataset, SceneConfig};
use coverest::train::{
    load_checkpoint, loss_trace_csv, save_checkpoint, trace_csv, train_model, Ablation, ExperimentSetting, PatchRef,
    SplitAudit, SplitUnit, TrainConfig, TrainOutcome,
};

mod error;
pub use error::{CliError, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK};

pub type CliResult<T> = Result<T, CliError>;

pub const RUN_MANIFEST: &str = "run_manifest.json";
pub const SPLIT_FILE: &str = "split.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

#[derive(Debug, Parser)]
#[command(
    name = "coverest",
    version,
    about = "Building-coverage estimation with multi-node quantile regression"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic tile corpus with exact ground truth.
    GenData(GenDataArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Patch- and tile-level metrics of a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Predicted counts and tile coverage, without using labels.
    Predict(PredictArgs),
    /// Region-level coverage growth between two acquisitions.
    Temporal(TemporalArgs),
    /// Train and evaluate the full model and its ablations under one budget.
    Ablate(AblateArgs),
    /// Score external binary settlement masks against ground truth per tile.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    /// Scene config JSON; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset directory (contains manifest.json).
    #[arg(long)]
    pub data: PathBuf,
    /// JSON with optional "train" and "model" sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// holistic | intra:<tag> | exclusive:<tag>
    #[arg(long)]
    pub setting: Option<String>,
    /// none | single-node | drop-channel:<i>
    #[arg(long)]
    pub ablation: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    All,
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitChoice,
    /// Split record from training (default: split.json next to the checkpoint).
    #[arg(long)]
    pub split_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TemporalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset of the earlier acquisition.
    #[arg(long)]
    pub t1: PathBuf,
    /// Dataset of the later acquisition.
    #[arg(long)]
    pub t2: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub setting: Option<String>,
    /// Comma-separated variants; "none" is always run first.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "single-node,drop-channel:0,drop-channel:4"
    )]
    pub ablation: Vec<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory of `<tile id>.cras` binary masks on the tile grid.
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Training-side config file: both sections optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
}

/// Provenance record written once per command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub arguments: serde_json::Value,
    /// SHA-256 of the resolved config, after flag overrides.
    pub config_digest: Option<String>,
    pub inputs: BTreeMap<String, String>,
    /// Output path (relative to the output directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub wall_seconds: f64,
}

/// What `train` stores about its split, so `eval` can reuse it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub manifest_sha256: String,
    pub setting: ExperimentSetting,
    pub split_unit: SplitUnit,
    pub seed: u64,
    pub audit: SplitAudit,
    pub train: Vec<PatchRef>,
    pub validation: Vec<PatchRef>,
    pub test: Vec<PatchRef>,
}

struct Recorder {
    command: &'static str,
    arguments: serde_json::Value,
    start: Instant,
    config_digest: Option<String>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Recorder {
    fn new(command: &'static str, args: &impl Serialize) -> Self {
        Recorder {
            command,
            arguments: serde_json::to_value(args).expect("arguments serialize"),
            start: Instant::now(),
            config_digest: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn config(&mut self, resolved: &impl Serialize) {
        let bytes = serde_json::to_vec(resolved).expect("config serializes");
        self.config_digest = Some(sha256_hex(&bytes));
    }

    fn input(&mut self, name: &str, digest: String) {
        self.inputs.insert(name.to_string(), digest);
    }

    fn output_file(&mut self, out: &Path, rel: &str) -> CliResult<()> {
        let digest = file_digest(&out.join(rel))?;
        self.outputs.insert(rel.to_string(), digest);
        Ok(())
    }

    fn finish(self, out: &Path) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            tool: "coverest".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            arguments: self.arguments,
            config_digest: self.config_digest,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_seconds: self.start.elapsed().as_secs_f64(),
        };
        write_json(&out.join(RUN_MANIFEST), &manifest)?;
        Ok(manifest)
    }
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Content digest of a dataset: its manifest plus every referenced file.
pub fn dataset_digest(ds: &Dataset) -> CliResult<String> {
    let mut parts = file_digest(&ds.root.join("manifest.json"))?;
    for t in &ds.manifest.tiles {
        for rel in [&t.tile, &t.mask] {
            let header = ds.root.join(rel);
            let mut blob = header.clone().into_os_string();
            blob.push(".bin");
            parts.push_str(&file_digest(&header)?);
            parts.push_str(&file_digest(Path::new(&blob))?);
        }
    }
    Ok(sha256_hex(parts.as_bytes()))
}

fn create_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Parse a JSON config file, or defaults when no path is given. Syntax and
/// schema errors are config errors carrying line and column.
pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}: line {}, column {}: {}",
            path.display(),
            e.line(),
            e.column(),
            e
        ))
    })
}

pub fn cmd_gen_data(args: &GenDataArgs) -> CliResult<RunManifest> {
    let mut rec = Recorder::new("gen-data", args);
    let mut config: SceneConfig = read_config(args.config.as_deref())?;
    config.seed = args.seed;
    config.validate()?;
    rec.config(&config);
    create_out(&args.out)?;
    let manifest = generate_dataset(&config, &args.out)?;
    let ds = Dataset {
        root: args.out.clone(),
        manifest,
    };
    rec.output_file(&args.out, "manifest.json")?;
    rec.outputs.insert("dataset".into(), dataset_digest(&ds)?);
    rec.finish(&args.out)
}

fn resolve_train_config(
    config: Option<&Path>,
    seed: u64,
    setting: Option<&str>,
    ablation: Option<&str>,
    epochs: Option<usize>,
) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = read_config(config)?;
    cfg.train.seed = seed;
    if let Some(s) = setting {
        cfg.train.setting = s.parse()?;
    }
    if let Some(a) = ablation {
        cfg.train.ablation = a.parse()?;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    cfg.train.validate()?;
    Ok(cfg)
}

fn run_training(ds: &Dataset, cfg: &RunConfig) -> CliResult<TrainOutcome> {
    let outcome = train_model(ds, &cfg.train, &cfg.model, |row| match row.val_loss {
        Some(v) => log::info!("epoch {:>4}  train {:.4}  val {:.4}", row.epoch, row.train_loss, v),
        None => log::info!("epoch {:>4}  train {:.4}", row.epoch, row.train_loss),
    })?;
    Ok(outcome)
}

/// Write checkpoint, traces and split record; returns the relative paths.
fn write_training_outputs(
    out: &Path,
    ds: &Dataset,
    cfg: &RunConfig,
    outcome: &TrainOutcome,
) -> CliResult<Vec<&'static str>> {
    create_out(out)?;
    save_checkpoint(&outcome.state, out.join(CHECKPOINT_FILE))?;
    write_text(&out.join("trace.csv"), &trace_csv(&outcome.trace))?;
    write_text(&out.join("loss_trace.csv"), &loss_trace_csv(&outcome.trace))?;
    let record = SplitRecord {
        manifest_sha256: file_digest(&ds.root.join("manifest.json"))?,
        setting: cfg.train.setting.clone(),
        split_unit: cfg.train.split_unit,
        seed: cfg.train.seed,
        audit: outcome.audit.clone(),
        train: outcome.splits.train.clone(),
        validation: outcome.validation.clone(),
        test: outcome.splits.test.clone(),
    };
    write_json(&out.join(SPLIT_FILE), &record)?;
    Ok(vec![CHECKPOINT_FILE, "trace.csv", "loss_trace.csv", SPLIT_FILE])
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<RunManifest> {
    let mut rec = Recorder::new("train", args);
    let cfg = resolve_train_config(
        args.config.as_deref(),
        args.seed,
        args.setting.as_deref(),
        args.ablation.as_deref(),
        args.epochs,
    )?;
    rec.config(&cfg);
    create_out(&args.out)?;
    let ds = load_dataset(&args.data)?;
    rec.input("dataset", dataset_digest(&ds)?);
    let outcome = run_training(&ds, &cfg)?;
    for rel in write_training_outputs(&args.out, &ds, &cfg, &outcome)? {
        rec.output_file(&args.out, rel)?;
    }
    rec.finish(&args.out)
}

pub fn read_split_record(path: &Path) -> CliResult<SplitRecord> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: malformed split record: {e}", path.display())))
}

fn all_refs(ds: &Dataset) -> Vec<PatchRef> {
    ds.manifest
        .tiles
        .iter()
        .enumerate()
        .flat_map(|(tile, t)| (0..t.patches.len()).map(move |patch| PatchRef { tile, patch }))
        .collect()
}

fn select_refs(args: &EvalArgs, ds: &Dataset) -> CliResult<Vec<PatchRef>> {
    if args.split == SplitChoice::All {
        return Ok(all_refs(ds));
    }
    let path = match &args.split_file {
        Some(p) => p.clone(),
        None => args.checkpoint.with_file_name(SPLIT_FILE),
    };
    let record = read_split_record(&path)?;
    let digest = file_digest(&ds.root.join("manifest.json"))?;
    if record.manifest_sha256 != digest {
        return Err(CliError::Config(format!(
            "split record {} was made for a different dataset than {}",
            path.display(),
            ds.root.display()
        )));
    }
    Ok(match args.split {
        SplitChoice::Train => record.train,
        SplitChoice::Validation => record.validation,
        SplitChoice::Test => record.test,
        SplitChoice::All => unreachable!(),
    })
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<(RunManifest, eval::Summary)> {
    let mut rec = Recorder::new("eval", args);
    create_out(&args.out)?;
    let state = load_checkpoint(&args.checkpoint)?;
    rec.input("checkpoint", file_digest(&args.checkpoint)?);
    let ds = load_dataset(&args.data)?;
    rec.input("dataset", dataset_digest(&ds)?);
    let refs = select_refs(args, &ds)?;
    let evaluation = eval::evaluate(&state, &ds, &refs)?;
    eval::write_reports(&args.out, &evaluation)?;
    for rel in ["patches.csv", "tiles.csv", "scatter.csv", "summary.json"] {
        rec.output_file(&args.out, rel)?;
    }
    let m = &evaluation.summary.metrics;
    log::info!(
        "{} patches: MAE {:.2}, Pearson r2 {:.4}, R2 {:.4}; {} tiles, mean abs error {:.3} pp",
        m.n_samples,
        m.mae,
        m.pearson_r2,
        m.r2_determination,
        evaluation.summary.n_tiles,
        evaluation.summary.mean_tile_abs_error
    );
    Ok((rec.finish(&args.out)?, evaluation.summary))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_row<I, T>(w: &mut csv::Writer<fs::File>, path: &Path, record: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(record)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_flush(mut w: csv::Writer<fs::File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<RunManifest> {
    let mut rec = Recorder::new("predict", args);
    create_out(&args.out)?;
    let state = load_checkpoint(&args.checkpoint)?;
    rec.input("checkpoint", file_digest(&args.checkpoint)?);
    let ds = load_dataset(&args.data)?;
    rec.input("dataset", dataset_digest(&ds)?);

    let levels = state.quantiles().levels().to_vec();
    let p_path = args.out.join("predictions.csv");
    let c_path = args.out.join("coverage.csv");
    let mut pw = csv_writer(&p_path)?;
    let mut cw = csv_writer(&c_path)?;
    let mut header = vec!["tile_id".to_string(), "row".into(), "col".into(), "prediction".into()];
    header.extend(levels.iter().map(|q| format!("node_q{q}")));
    csv_row(&mut pw, &p_path, &header)?;
    csv_row(
        &mut cw,
        &c_path,
        ["tile_id", "region_tag", "n_patches", "coverage_pred"],
    )?;
    for entry in &ds.manifest.tiles {
        let patches = ds.tile_patches(entry)?;
        let nodes = predict_nodes(&state, &patches)?;
        let mut counts = Vec::with_capacity(patches.len());
        for (p, n) in patches.iter().zip(&nodes) {
            let est = median_estimate(&state, n);
            counts.push(est);
            let mut row = vec![
                p.tile_id.clone(),
                p.offset.0.to_string(),
                p.offset.1.to_string(),
                est.to_string(),
            ];
            row.extend(n.iter().map(|v| v.to_string()));
            csv_row(&mut pw, &p_path, &row)?;
        }
        let cov = tile_coverage(&counts, entry.height, entry.width)?;
        csv_row(
            &mut cw,
            &c_path,
            [
                entry.id.clone(),
                entry.region_tag.clone(),
                counts.len().to_string(),
                cov.to_string(),
            ],
        )?;
    }
    csv_flush(pw, &p_path)?;
    csv_flush(cw, &c_path)?;
    rec.output_file(&args.out, "predictions.csv")?;
    rec.output_file(&args.out, "coverage.csv")?;
    rec.finish(&args.out)
}

pub fn cmd_temporal(args: &TemporalArgs) -> CliResult<(RunManifest, Vec<eval::RegionGrowth>)> {
    let mut rec = Recorder::new("temporal", args);
    create_out(&args.out)?;
    let state = load_checkpoint(&args.checkpoint)?;
    rec.input("checkpoint", file_digest(&args.checkpoint)?);
    let t1 = load_dataset(&args.t1)?;
    let t2 = load_dataset(&args.t2)?;
    rec.input("t1", dataset_digest(&t1)?);
    rec.input("t2", dataset_digest(&t2)?);
    let rows = eval::temporal_growth(&state, &t1, &t2)?;
    for r in &rows {
        match r.growth.value() {
            Some(g) => log::info!(
                "{}: {:.3}% -> {:.3}%  growth {:+.2}%",
                r.region_tag,
                r.coverage_t1,
                r.coverage_t2,
                g
            ),
            None => log::warn!(
                "{}: growth undefined (zero coverage at t1 or region missing)",
                r.region_tag
            ),
        }
    }
    eval::write_growth_csv(&args.out.join("growth.csv"), &rows)?;
    rec.output_file(&args.out, "growth.csv")?;
    Ok((rec.finish(&args.out)?, rows))
}

/// One line of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub pearson_r2: f64,
    pub r2_determination: f64,
    pub mae: f64,
    pub mean_tile_abs_error: f64,
    pub n_test_patches: usize,
}

/// Train and test one variant; the checkpoint and split go to `out`.
pub fn train_and_test(ds: &Dataset, cfg: &RunConfig, out: &Path) -> CliResult<(ModelState, eval::Evaluation)> {
    let outcome = run_training(ds, cfg)?;
    write_training_outputs(out, ds, cfg, &outcome)?;
    let evaluation = eval::evaluate(&outcome.state, ds, &outcome.splits.test)?;
    eval::write_reports(out, &evaluation)?;
    Ok((outcome.state, evaluation))
}

pub fn cmd_ablate(args: &AblateArgs) -> CliResult<(RunManifest, Vec<AblationRow>)> {
    let mut rec = Recorder::new("ablate", args);
    let base = resolve_train_config(
        args.config.as_deref(),
        args.seed,
        args.setting.as_deref(),
        None,
        args.epochs,
    )?;
    let mut variants = vec![Ablation::None];
    for a in &args.ablation {
        let a: Ablation = a.parse()?;
        if !variants.contains(&a) {
            variants.push(a);
        }
    }
    rec.config(&(&base, &variants));
    create_out(&args.out)?;
    let ds = load_dataset(&args.data)?;
    rec.input("dataset", dataset_digest(&ds)?);

    let mut rows = Vec::new();
    for ablation in variants {
        let name = ablation.to_string();
        let mut cfg = base.clone();
        cfg.train.ablation = ablation;
        log::info!("ablation variant {name}");
        let (_, evaluation) = train_and_test(&ds, &cfg, &args.out.join(name.replace(':', "-")))?;
        let m = &evaluation.summary.metrics;
        rows.push(AblationRow {
            variant: name,
            pearson_r2: m.pearson_r2,
            r2_determination: m.r2_determination,
            mae: m.mae,
            mean_tile_abs_error: evaluation.summary.mean_tile_abs_error,
            n_test_patches: m.n_samples,
        });
    }
    let path = args.out.join("ablation.csv");
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    csv_flush(w, &path)?;
    rec.output_file(&args.out, "ablation.csv")?;
    Ok((rec.finish(&args.out)?, rows))
}

pub fn cmd_baseline(args: &BaselineArgs) -> CliResult<(RunManifest, Vec<eval::MaskComparison>)> {
    let mut rec = Recorder::new("baseline", args);
    create_out(&args.out)?;
    let ds = load_dataset(&args.data)?;
    rec.input("dataset", dataset_digest(&ds)?);
    let mut rows = Vec::with_capacity(ds.manifest.tiles.len());
    let mut mask_digests = String::new();
    for entry in &ds.manifest.tiles {
        let path = args.masks.join(format!("{}.cras", entry.id));
        mask_digests.push_str(&file_digest(&path)?);
        let baseline = read_mask_cras(&path)?;
        let truth = ds.load_tile(entry)?.mask;
        rows.push(eval::compare_mask(&entry.id, &baseline, &truth)?);
    }
    rec.input("masks", coverest::sha256_hex(mask_digests.as_bytes()));
    if !rows.is_empty() {
        let mean = rows.iter().map(|r| r.abs_error).sum::<f64>() / rows.len() as f64;
        log::info!("{} tiles, mean abs coverage error {:.3} pp", rows.len(), mean);
    }
    eval::write_mask_comparison_csv(&args.out.join("baseline.csv"), &rows)?;
    rec.output_file(&args.out, "baseline.csv")?;
    Ok((rec.finish(&args.out)?, rows))
}

/// Execute a parsed command line; the caller maps errors to exit codes.
pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::GenData(a) => cmd_gen_data(&a).map(drop),
        Command::Train(a) => cmd_train(&a).map(drop),
        Command::Eval(a) => cmd_eval(&a).map(drop),
        Command::Predict(a) => cmd_predict(&a).map(drop),
        Command::Temporal(a) => cmd_temporal(&a).map(drop),
        Command::Ablate(a) => cmd_ablate(&a).map(drop),
        Command::Baseline(a) => cmd_baseline(&a).map(drop),
    }
}
