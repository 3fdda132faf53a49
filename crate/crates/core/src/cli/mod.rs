//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and maps failures to exit codes; `main` only forwards to it.

pub mod config;
pub mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{classify_element, Featurizer};
use crate::net::{load_checkpoint, save_checkpoint, CheckpointError, Model, Provenance};
use crate::pipeline::{featurize_model, load_structure, voxelize_model, VoxelizeOptions, VoxelizeStats};
use crate::predictions::{read_predictions_csv, write_predictions_csv, write_topk_csv, PredictionRow};
use crate::train::{history_csv, predict, train, Dataset, DatasetError, MetricsReport, TrainError};
use crate::voxel::{write_emog, EmogError};
pub use config::RunConfig;
use output::{check_paths, write_atomic, write_json, RunProvenance, TOOL_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_INVALID: i32 = 5;
pub const EXIT_TRAINING: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "emocpd", version, about = "Residue microenvironment amino-acid classifier")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed (sampling, initialisation, shuffling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-atom features of one structure as CSV.
    Featurize(FeaturizeArgs),
    /// Labelled site grids of one or more structures as an EMOG dataset.
    Voxelize(VoxelizeArgs),
    /// Fit a model on EMOG datasets and save the best checkpoint.
    Train(TrainArgs),
    /// Class probabilities for every grid of a dataset.
    Predict(PredictArgs),
    /// Accuracy, per-class metrics, top-k curve and confusion matrix.
    Evaluate(EvaluateArgs),
    /// Accuracy versus amino-acid composition across structures.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// PDB or PQR file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Feature CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Comma-separated chain ids; all chains when omitted.
    #[arg(long, value_delimiter = ',')]
    pub chains: Vec<char>,
}

#[derive(Debug, Args)]
pub struct VoxelizeArgs {
    /// PDB or PQR files; their grids are concatenated in order.
    #[arg(long, short, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// EMOG dataset; a JSON sidecar is written next to it.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Comma-separated chain ids; all chains when omitted.
    #[arg(long, value_delimiter = ',')]
    pub chains: Vec<char>,
    /// Structures with more sites than this are subsampled.
    #[arg(long)]
    pub sample_threshold: Option<usize>,
    /// Number of sites kept from a subsampled structure.
    #[arg(long)]
    pub sample_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// EMOG training datasets.
    #[arg(long, num_args = 1.., required = true)]
    pub train: Vec<PathBuf>,
    /// EMOG validation datasets.
    #[arg(long, num_args = 1..)]
    pub val: Vec<PathBuf>,
    /// Checkpoint path (best validation state, or final state without --val).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Per-step history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Stop after this many optimiser steps even if epochs remain.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Validate every N steps (and after the last one).
    #[arg(long)]
    pub val_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// EMOC checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// EMOG datasets to score.
    #[arg(long, short, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Predictions CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Write the K most probable classes per site instead of all twenty.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=20))]
    pub topk: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// EMOC checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labelled EMOG datasets.
    #[arg(long, short, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Metrics report JSON.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write the confusion matrix as CSV.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Predictions CSV written by `predict` (without --topk).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Correlation report JSON.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Per-structure accuracy and group content CSV.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    /// Accuracy histogram CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Significance level separating the positive and negative groups.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Histogram bin width, in accuracy units.
    #[arg(long)]
    pub bin_width: Option<f64>,
}

/// Category and exit code of a failure.
pub fn classify_error(e: &Error) -> (&'static str, i32) {
    use crate::structure::StructureError;
    match e {
        Error::Io { .. } => ("io", EXIT_IO),
        Error::Dataset(DatasetError::Io { .. }) => ("io", EXIT_IO),
        Error::Emog(EmogError::Io(_)) | Error::Checkpoint(CheckpointError::Io(_)) => ("io", EXIT_IO),
        Error::Emog(_) | Error::Checkpoint(_) | Error::Dataset(DatasetError::File { .. }) => ("format", EXIT_FORMAT),
        Error::Structure(StructureError::Parse { .. }) | Error::Predictions(_) => ("parse", EXIT_INVALID),
        Error::Train(TrainError::NonFinite { .. }) => ("training", EXIT_TRAINING),
        Error::Config(_) | Error::Train(TrainError::Config(_)) => ("config", EXIT_INVALID),
        Error::Tensor(_) => ("shape", EXIT_INVALID),
        Error::Structure(_)
        | Error::Feature(_)
        | Error::Frame(_)
        | Error::Dataset(_)
        | Error::Train(_)
        | Error::Metrics(_)
        | Error::Stats(_)
        | Error::Invalid(_) => ("invalid", EXIT_INVALID),
    }
}

/// `error kind=<kind> code=<n> msg="<escaped message>"`.
pub fn error_line(e: &Error) -> String {
    let (kind, code) = classify_error(e);
    let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
    format!("error kind={kind} code={code} msg=\"{msg}\"")
}

/// Entry point shared by the binary and the tests. Returns the exit code;
/// stdout carries `--dump-config` and progress, stderr the error line.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("error kind=usage code={EXIT_USAGE} msg=\"{}\"", first.replace('"', "\\\""));
            return EXIT_USAGE;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            classify_error(&e).1
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Some(Command::Voxelize(a)) => {
            if let Some(v) = a.sample_threshold {
                cfg.voxelize.sample_threshold = v;
            }
            if let Some(v) = a.sample_cap {
                cfg.voxelize.sample_cap = v;
            }
        }
        Some(Command::Train(a)) => {
            let t = &mut cfg.train;
            t.lr = a.lr.unwrap_or(t.lr);
            t.weight_decay = a.weight_decay.unwrap_or(t.weight_decay);
            t.batch_size = a.batch_size.unwrap_or(t.batch_size);
            t.epochs = a.epochs.unwrap_or(t.epochs);
            t.val_every = a.val_every.unwrap_or(t.val_every);
            if a.max_steps.is_some() {
                t.max_steps = a.max_steps;
            }
        }
        Some(Command::Analyze(a)) => {
            cfg.analyze.alpha = a.alpha.unwrap_or(cfg.analyze.alpha);
            cfg.analyze.bin_width = a.bin_width.unwrap_or(cfg.analyze.bin_width);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let prov = RunProvenance {
        tool_version: TOOL_VERSION.to_string(),
        config_sha256: cfg.sha256(),
        seed: cfg.seed,
    };
    match cli.command {
        None => Err(Error::Invalid("no subcommand given (see --help)".into())),
        Some(Command::Featurize(a)) => featurize_cmd(&cfg, &prov, a),
        Some(Command::Voxelize(a)) => voxelize_cmd(&cfg, &prov, a),
        Some(Command::Train(a)) => train_cmd(&cfg, &prov, a),
        Some(Command::Predict(a)) => predict_cmd(&prov, a),
        Some(Command::Evaluate(a)) => evaluate_cmd(&prov, a),
        Some(Command::Analyze(a)) => analyze_cmd(&cfg, &prov, a),
    }
}

fn featurizer(cfg: &RunConfig) -> Featurizer {
    Featurizer {
        probe: cfg.voxelize.probe,
        n_points: cfg.voxelize.sasa_points,
        ..Featurizer::default()
    }
}

fn paths(v: &[PathBuf]) -> Vec<&Path> {
    v.iter().map(PathBuf::as_path).collect()
}

fn featurize_cmd(cfg: &RunConfig, prov: &RunProvenance, a: FeaturizeArgs) -> Result<()> {
    check_paths(&[&a.input], &[&a.output])?;
    let model = load_structure(&a.input, cfg.voxelize.include_hetatm)?;
    let (model, features) = featurize_model(&model, &a.chains, &featurizer(cfg))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "serial", "name", "residue", "chain", "seq", "icode", "element", "class", "charge", "radius", "sasa",
    ])
    .expect("in-memory write");
    for (atom, feat) in model.atoms.iter().zip(&features.features) {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        w.write_record([
            atom.serial.to_string(),
            atom.name.clone(),
            atom.residue_name.clone(),
            atom.chain_id.to_string(),
            atom.residue_seq.to_string(),
            atom.insertion_code.map(String::from).unwrap_or_default(),
            atom.element.clone(),
            classify_element(atom).map(|c| c.symbol().to_string()).unwrap_or_default(),
            opt(feat.map(|f| f.fc)),
            opt(atom.vdw_radius),
            opt(feat.map(|f| f.sasa)),
        ])
        .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    write_atomic(&a.output, format!("{}{body}", prov.csv_header()).as_bytes())?;
    println!(
        "featurized {} atoms ({} with features, {} charge misses) -> {}",
        model.atoms.len(),
        features.included(),
        features.charge_misses,
        a.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct VoxelizeSidecar<'a> {
    provenance: &'a RunProvenance,
    samples: usize,
    files: Vec<FileStats>,
    class_histogram: Vec<(String, usize)>,
}

#[derive(Serialize)]
struct FileStats {
    path: String,
    samples: usize,
    #[serde(flatten)]
    stats: VoxelizeStats,
}

/// The JSON written next to a binary artifact: `<path>.json`.
fn sidecar_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn voxelize_cmd(cfg: &RunConfig, prov: &RunProvenance, a: VoxelizeArgs) -> Result<()> {
    let sidecar = sidecar_path(&a.output);
    check_paths(&paths(&a.input), &[&a.output, &sidecar])?;
    let opts = VoxelizeOptions {
        chains: a.chains.clone(),
        sample_threshold: cfg.voxelize.sample_threshold,
        sample_cap: cfg.voxelize.sample_cap,
        seed: cfg.seed,
    };
    let feat = featurizer(cfg);
    let mut grids = Vec::new();
    let mut files = Vec::new();
    for path in &a.input {
        let model = load_structure(path, cfg.voxelize.include_hetatm)?;
        let (g, stats) = voxelize_model(&model, &feat, &opts)?;
        files.push(FileStats {
            path: path.display().to_string(),
            samples: g.len(),
            stats,
        });
        grids.extend(g);
    }
    let mut bytes = Vec::new();
    write_emog(&mut bytes, &grids)?;
    let ds = Dataset::new(grids);
    let hist = crate::amino::AminoAcid::ALL
        .iter()
        .zip(ds.class_histogram())
        .map(|(aa, n)| (aa.three_letter().to_string(), n))
        .collect();
    write_atomic(&a.output, &bytes)?;
    write_json(
        &sidecar,
        &VoxelizeSidecar {
            provenance: prov,
            samples: ds.len(),
            files,
            class_histogram: hist,
        },
    )?;
    println!("wrote {} grids -> {}", ds.len(), a.output.display());
    Ok(())
}

fn train_cmd(cfg: &RunConfig, prov: &RunProvenance, a: TrainArgs) -> Result<()> {
    let mut inputs = paths(&a.train);
    inputs.extend(paths(&a.val));
    let mut outputs = vec![a.output.as_path()];
    outputs.extend(a.history.as_deref());
    check_paths(&inputs, &outputs)?;
    let train_set = Dataset::from_files(&a.train)?;
    let val_set = if a.val.is_empty() { None } else { Some(Dataset::from_files(&a.val)?) };
    let tc = cfg.train_config();
    println!(
        "training on {} samples ({} validation), {} steps",
        train_set.len(),
        val_set.as_ref().map_or(0, Dataset::len),
        tc.total_steps(train_set.len())
    );
    let outcome = train(&cfg.model, &tc, &train_set, val_set.as_ref(), |r| {
        if r.step % 10 == 0 || r.val_acc.is_some() {
            let val = r.val_acc.map(|v| format!(" val_acc={v:.4}")).unwrap_or_default();
            println!("step {} loss={:.5} acc={:.4}{val}", r.step, r.train_loss, r.train_acc);
        }
    })?;
    let provenance = Provenance {
        tool_version: prov.tool_version.clone(),
        seed: prov.seed,
        config_sha256: prov.config_sha256.clone(),
    };
    let mut bytes = Vec::new();
    save_checkpoint(&mut bytes, &outcome.best, &provenance)?;
    write_atomic(&a.output, &bytes)?;
    if let Some(h) = &a.history {
        write_atomic(h, format!("{}{}", prov.csv_header(), history_csv(&outcome.history)).as_bytes())?;
    }
    println!("saved step {} -> {}", outcome.best_step, a.output.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<(Model<f32>, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (model, _) = load_checkpoint::<_, f32>(bytes.as_slice())?;
    Ok((model, hex::encode(Sha256::digest(&bytes))))
}

fn prediction_rows(model: &Model<f32>, data: &Dataset) -> Result<Vec<PredictionRow>> {
    let probs = predict(model, data, 64)?;
    Ok(data
        .samples
        .iter()
        .zip(probs)
        .map(|(s, p)| PredictionRow::new(&s.site_id, s.label, p))
        .collect())
}

fn predict_cmd(prov: &RunProvenance, a: PredictArgs) -> Result<()> {
    let mut inputs = paths(&a.input);
    inputs.push(&a.checkpoint);
    check_paths(&inputs, &[&a.output])?;
    let (model, ckpt_hash) = load_model(&a.checkpoint)?;
    let data = Dataset::from_files(&a.input)?;
    let rows = prediction_rows(&model, &data)?;
    let header = format!("{}# checkpoint_sha256={ckpt_hash}\n", prov.csv_header());
    let text = match a.topk {
        Some(k) => write_topk_csv(&rows, k as usize, &header),
        None => write_predictions_csv(&rows, &header),
    };
    write_atomic(&a.output, text.as_bytes())?;
    println!("predicted {} sites -> {}", rows.len(), a.output.display());
    Ok(())
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    provenance: &'a RunProvenance,
    checkpoint_sha256: String,
    #[serde(flatten)]
    metrics: MetricsReport,
}

fn evaluate_cmd(prov: &RunProvenance, a: EvaluateArgs) -> Result<()> {
    let mut inputs = paths(&a.input);
    inputs.push(&a.checkpoint);
    let mut outputs = vec![a.output.as_path()];
    outputs.extend(a.confusion.as_deref());
    check_paths(&inputs, &outputs)?;
    let (model, ckpt_hash) = load_model(&a.checkpoint)?;
    let data = Dataset::from_files(&a.input)?;
    let probs = predict(&model, &data, 64)?;
    let metrics = MetricsReport::compute(&probs, &data.labels())?;
    if let Some(c) = &a.confusion {
        write_atomic(c, format!("{}{}", prov.csv_header(), metrics.confusion.to_csv()).as_bytes())?;
    }
    println!(
        "accuracy {:.4} top-5 {:.4} over {} samples",
        metrics.accuracy, metrics.topk[4], metrics.samples
    );
    write_json(
        &a.output,
        &EvaluateReport {
            provenance: prov,
            checkpoint_sha256: ckpt_hash,
            metrics,
        },
    )
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    provenance: &'a RunProvenance,
    #[serde(flatten)]
    report: crate::analysis::CorrelationReport,
}

fn analyze_cmd(cfg: &RunConfig, prov: &RunProvenance, a: AnalyzeArgs) -> Result<()> {
    let mut outputs = vec![a.output.as_path()];
    outputs.extend(a.scatter.as_deref());
    outputs.extend(a.histogram.as_deref());
    check_paths(&[&a.predictions], &outputs)?;
    let text = std::fs::read_to_string(&a.predictions).map_err(|e| Error::io(&a.predictions, e))?;
    let sites: Vec<_> = read_predictions_csv(&text)?.iter().map(PredictionRow::site).collect();
    let (report, _, scatter) = crate::analysis::analyze(&sites, cfg.analyze.alpha, cfg.analyze.bin_width)?;
    if let Some(p) = &a.scatter {
        let mut s = prov.csv_header();
        s.push_str("structure,accuracy,positive,negative,neutral\n");
        for r in &scatter {
            s.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", r.id, r.accuracy, r.positive, r.negative, r.neutral));
        }
        write_atomic(p, s.as_bytes())?;
    }
    if let (Some(p), Some(h)) = (&a.histogram, &report.histogram) {
        let mut s = prov.csv_header();
        s.push_str("bin_start,bin_end,count\n");
        for (i, c) in h.counts.iter().enumerate() {
            s.push_str(&format!("{:.6},{:.6},{c}\n", i as f64 * h.bin_width, (i + 1) as f64 * h.bin_width));
        }
        write_atomic(p, s.as_bytes())?;
    }
    println!("analyzed {} structures -> {}", report.structures, a.output.display());
    write_json(&a.output, &AnalyzeReport { provenance: prov, report })
}

/// Reads every grid of an EMOG file; convenience for examples and tests.
pub fn read_emog_file(path: &Path) -> Result<Vec<crate::voxel::MicroEnvGrid>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(crate::voxel::read_emog(BufReader::new(f))?)
}
