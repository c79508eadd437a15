//! The `qklstm` command line.
//!
//! Settings are resolved as built-in defaults, then the `--config` file, then
//! command-line flags.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lstm::ModelKind;
use crate::metrics::{compare, render_table, ComparisonRow, EvalResult};
use crate::preprocess::{load_csv, run_pipeline, DatasetArchive, Schema, SplitTag};
use crate::qkernel::{encode, kernel_circuit, FeatureMap};
use crate::training::{self, OptimizerKind};

#[derive(Debug, Parser)]
#[command(name = "qklstm", version, about = "Quantum-kernel LSTM forecasting of daily AQI")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for initialisation and shuffling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for all outputs.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, scale and window a daily pollutant CSV.
    Preprocess(PreprocessArgs),
    /// Train a model on a dataset archive.
    Train(TrainArgs),
    /// Evaluate a checkpoint on both splits.
    Evaluate(EvaluateArgs),
    /// Compare two checkpoints metric by metric.
    Compare(CompareArgs),
    /// Print the encoding or kernel circuit for a vector and its final state.
    CircuitDump(CircuitDumpArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Z-score outlier threshold.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// First date of the test period (YYYY-MM-DD).
    #[arg(long)]
    pub test_start: Option<NaiveDate>,
    /// Keep only rows for this city.
    #[arg(long)]
    pub city: Option<String>,
    #[arg(long)]
    pub seq_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset archive (default `<output-dir>/dataset.json`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<KindArg>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Keep windows in chronological order.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Clip the gradient to this L2 norm (5.0 when given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "5.0")]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Checkpoint whose change is reported.
    #[arg(long = "a")]
    pub checkpoint_a: PathBuf,
    /// Baseline checkpoint.
    #[arg(long = "b")]
    pub checkpoint_b: PathBuf,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long)]
    pub label_a: Option<String>,
    #[arg(long)]
    pub label_b: Option<String>,
}

#[derive(Debug, Args)]
pub struct CircuitDumpArgs {
    /// Comma-separated input vector.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub vector: Vec<f64>,
    /// Second vector; dumps the kernel circuit U†(b)U(a) instead.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub against: Option<Vec<f64>>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub angle_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Classical,
    Qk,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.optimizer.seed = s;
    }
    if let Some(d) = &cli.output_dir {
        cfg.paths.output_dir = d.clone();
    }
    Ok(cfg)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn kind_dir(out: &Path, kind: ModelKind) -> Result<PathBuf> {
    let d = out.join(kind.to_string());
    create_dir(&d)?;
    Ok(d)
}

fn label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Classical => "LSTM",
        ModelKind::Qk => "QK-LSTM",
    }
}

pub fn cmd_preprocess(cfg: &mut RunConfig, args: &PreprocessArgs, out: &mut dyn Write) -> Result<DatasetArchive> {
    if let Some(p) = &args.input {
        cfg.paths.input = Some(p.clone());
    }
    if let Some(g) = args.gamma {
        cfg.preprocess.gamma = g;
    }
    if let Some(d) = args.test_start {
        cfg.preprocess.test_start = d;
    }
    if let Some(c) = &args.city {
        cfg.preprocess.city = Some(c.clone());
    }
    if let Some(s) = args.seq_len {
        cfg.model.seq_len = s;
    }
    cfg.validate()?;
    let input = cfg
        .paths
        .input
        .clone()
        .ok_or_else(|| Error::Config("no input CSV given (use --input or paths.input)".into()))?;
    let schema = Schema {
        city: cfg.preprocess.city.clone(),
        ..Schema::default()
    };
    let raw = load_csv(&input, &schema)?;
    let archive = run_pipeline(&raw, &cfg.pipeline_options(), &cfg.breakpoint_table()?)?;

    create_dir(&cfg.paths.output_dir)?;
    let path = cfg.dataset_path();
    archive.save(&path)?;
    let digest = archive.digest();
    write(&path.with_extension("sha256"), format!("{digest}\n").as_bytes())?;
    write_json(&cfg.paths.output_dir.join("preprocess_report.json"), &archive.report)?;

    let r = &archive.report;
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "rows: {} ({} .. {})", r.rows, r.first_date, r.last_date).map_err(io)?;
    for f in &r.features {
        writeln!(
            out,
            "  {:<8} missing {:>4}  outliers {:>4}  filled {:>4}",
            f.name, f.missing_in_input, f.outliers_removed, f.gaps_filled
        )
        .map_err(io)?;
    }
    writeln!(out, "windows: {} train, {} test", r.train_windows, r.test_windows).map_err(io)?;
    writeln!(out, "dataset: {}", path.display()).map_err(io)?;
    writeln!(out, "sha256: {digest}").map_err(io)?;
    Ok(archive)
}

pub fn cmd_train(cfg: &mut RunConfig, args: &TrainArgs, out: &mut dyn Write) -> Result<training::TrainReport> {
    if let Some(d) = &args.dataset {
        cfg.paths.dataset = Some(d.clone());
    }
    if let Some(k) = args.model {
        cfg.model.kind = match k {
            KindArg::Classical => ModelKind::Classical,
            KindArg::Qk => ModelKind::Qk,
        };
    }
    if let Some(o) = args.optimizer {
        cfg.optimizer.kind = match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        };
    }
    if let Some(e) = args.epochs {
        cfg.optimizer.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.optimizer.learning_rate = lr;
    }
    if args.no_shuffle {
        cfg.optimizer.shuffle = false;
    }
    if let Some(c) = args.clip_norm {
        cfg.optimizer.clip_norm = Some(c);
    }
    cfg.validate()?;
    let archive = DatasetArchive::load(&cfg.dataset_path())?;
    let (model, report) = training::train(&cfg.model, &archive.train, Some(&archive.test), &cfg.optimizer)?;

    let dir = kind_dir(&cfg.paths.output_dir, cfg.model.kind)?;
    Checkpoint::new(model, cfg.model.clone(), cfg.optimizer.clone(), &archive.train)
        .save(&dir.join("checkpoint.json"))?;
    training::write_losses_csv(&dir.join("losses.csv"), &report.epochs)?;
    training::write_timings_csv(&dir.join("timings.csv"), &report.epochs)?;
    write_json(&dir.join("train_report.json"), &report)?;

    let io = |e| Error::io("<stdout>", e);
    writeln!(
        out,
        "{} ({} optimizer, seed {}): {} parameters",
        label(cfg.model.kind),
        cfg.optimizer.kind,
        report.seed,
        report.param_count
    )
    .map_err(io)?;
    for e in &report.epochs {
        writeln!(
            out,
            "  epoch {:>3}  loss {:.6}  {:.2}s",
            e.epoch, e.mean_loss, e.seconds
        )
        .map_err(io)?;
    }
    if let Some(m) = &report.test_metrics {
        writeln!(out, "test RMSE {:.3}  MAE {:.3}", m.rmse, m.mae).map_err(io)?;
    }
    writeln!(out, "checkpoint: {}", dir.join("checkpoint.json").display()).map_err(io)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalFile {
    pub kind: ModelKind,
    pub param_count: usize,
    pub train: EvalResult,
    pub test: Option<EvalResult>,
}

fn load_pair(checkpoint: &Path, cfg: &RunConfig, dataset: &Option<PathBuf>) -> Result<(Checkpoint, DatasetArchive)> {
    let ck = Checkpoint::load(checkpoint)?;
    let data_path = dataset.clone().unwrap_or_else(|| cfg.dataset_path());
    let archive = DatasetArchive::load(&data_path)?;
    ck.check_dataset(&archive.train)?;
    Ok((ck, archive))
}

pub fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs, out: &mut dyn Write) -> Result<EvalFile> {
    let (ck, archive) = load_pair(&args.checkpoint, cfg, &args.dataset)?;
    let dir = kind_dir(&cfg.paths.output_dir, ck.kind())?;
    let (train, train_preds) = training::evaluate_model(&ck.model, &archive.train)?;
    training::write_predictions_csv(&dir.join("predictions_train.csv"), &train_preds)?;
    let test = if archive.test.len() >= 2 {
        let (m, preds) = training::evaluate_model(&ck.model, &archive.test)?;
        training::write_predictions_csv(&dir.join("predictions_test.csv"), &preds)?;
        Some(m)
    } else {
        None
    };
    let file = EvalFile {
        kind: ck.kind(),
        param_count: ck.model.param_counts().total(),
        train,
        test,
    };
    write_json(&dir.join("eval.json"), &file)?;
    let io = |e| Error::io("<stdout>", e);
    for (name, m) in [("train", Some(&file.train)), ("test", file.test.as_ref())] {
        if let Some(m) = m {
            writeln!(
                out,
                "{name:<5} RMSE {:.3}  MAE {:.3}  MAPE {}  R2 {}",
                m.rmse,
                m.mae,
                m.mape.map_or("n/a".into(), |v| format!("{v:.2}%")),
                m.r2.map_or("n/a".into(), |v| format!("{v:.3}"))
            )
            .map_err(io)?;
        }
    }
    writeln!(out, "outputs: {}", dir.display()).map_err(io)?;
    Ok(file)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Internal(format!("csv encoding: {e}"));
    w.write_record(["metric", "model_a", "model_b", "change_pct"])
        .map_err(fail)?;
    let f = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in rows {
        w.write_record([r.metric.clone(), f(r.model_a), f(r.model_b), f(r.change_pct)])
            .map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| Error::Internal(format!("csv encoding: {e}")))
}

pub fn cmd_compare(cfg: &RunConfig, args: &CompareArgs, out: &mut dyn Write) -> Result<Vec<ComparisonRow>> {
    let (a, archive) = load_pair(&args.checkpoint_a, cfg, &args.dataset)?;
    let b = Checkpoint::load(&args.checkpoint_b)?;
    b.check_dataset(&archive.train)?;
    let tag = match args.split {
        SplitArg::Train => SplitTag::Train,
        SplitArg::Test => SplitTag::Test,
    };
    let data = archive.split(tag);
    let (ma, _) = training::evaluate_model(&a.model, data)?;
    let (mb, _) = training::evaluate_model(&b.model, data)?;
    let rows = compare(&ma, &mb);

    let la = args.label_a.clone().unwrap_or_else(|| label(a.kind()).to_string());
    let mut lb = args.label_b.clone().unwrap_or_else(|| label(b.kind()).to_string());
    if la == lb {
        lb.push_str(" (B)");
    }
    let table = render_table(&rows, &la, &lb);
    create_dir(&cfg.paths.output_dir)?;
    write(&cfg.paths.output_dir.join("compare.csv"), &comparison_csv(&rows)?)?;
    write(&cfg.paths.output_dir.join("compare.md"), table.as_bytes())?;
    out.write_all(table.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(rows)
}

pub fn cmd_circuit_dump(cfg: &RunConfig, args: &CircuitDumpArgs, out: &mut dyn Write) -> Result<String> {
    let n = args.qubits.unwrap_or(cfg.model.n_qubits);
    let scale = args.angle_scale.unwrap_or(cfg.model.angle_scale);
    let map = FeatureMap::new(n, args.vector.len(), scale, cfg.model.assignment)?;
    let circuit = match &args.against {
        Some(b) => kernel_circuit(&args.vector, b, &map)?,
        None => encode(&args.vector, &map)?,
    };
    let text = crate::sim::dump(&circuit)?;
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(text)
}

/// Runs a parsed command line.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = resolve_config(&cli)?;
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(&mut cfg, a, out).map(drop),
        Command::Train(a) => cmd_train(&mut cfg, a, out).map(drop),
        Command::Evaluate(a) => cmd_evaluate(&cfg, a, out).map(drop),
        Command::Compare(a) => cmd_compare(&cfg, a, out).map(drop),
        Command::CircuitDump(a) => cmd_circuit_dump(&cfg, a, out).map(drop),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
