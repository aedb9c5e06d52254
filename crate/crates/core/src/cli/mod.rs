// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `pizzaclock` command line and its figures.
//!
//! Exit codes: 0 success, 2 usage, 3 data (unreadable or malformed files),
//! 4 numeric failure (divergence, non-finite values, failed self-check).

mod svg;

pub use svg::{render_circle, render_heatmap, render_phase, Reindex, CELL, COLD, HOT, NEUTRAL};

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autodiff::{finite_difference_check, Activation};
use crate::error::{Error, Result};
use crate::isolation::{circle_reports, six_component_accuracy};
use crate::metrics::{all_logits, analyze, correct_logits, distance_irrelevance, gradient_symmetricity, SampleSet, DEFAULT_SAMPLE_COUNT};
use crate::models::{build, Family, Network, RunConfig};
use crate::oracles::{abs_cos_identity_deviation, fve, logit_tensor, pizza_logit, symmetric_decomposition_check, AnalyticModel};
use crate::sweep::{
    classify, default_workers, export_csv, import_dir, load_record, phase_boundary, run_sweep,
    save_record, RunRecord, RunStatus, SweepSpec, Thresholds,
};
use crate::training::{train_with, EarlyStop};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Exit code and category name for an error.
pub fn classify_error(e: &Error) -> (i32, &'static str) {
    match e {
        Error::Io { .. } | Error::Data { .. } => (EXIT_DATA, "data"),
        Error::Numeric(_) | Error::NonFinite(_) => (EXIT_NUMERIC, "numeric"),
        Error::Dimension(_) | Error::InvalidArgument(_) | Error::Config(_) | Error::Tokens(_) => {
            (EXIT_USAGE, "usage")
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pizzaclock", version, about = "Train modular-addition networks and tell Clock from Pizza")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write its run record.
    Train(TrainArgs),
    /// Recompute the metric report of a stored run.
    Analyze(AnalyzeArgs),
    /// Isolate circles in a stored run and attribute each to an algorithm.
    Isolate(IsolateArgs),
    /// Execute a sweep described by a JSON spec.
    Sweep(SweepArgs),
    /// Print the class of stored runs.
    Classify(ClassifyArgs),
    /// Summarize a directory of runs: CSV, phase boundary and figures.
    Report(ReportArgs),
    /// Quick internal consistency checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Transformer,
    LinearAlpha,
    LinearAlphaPrime,
    LinearBeta,
    LinearGamma,
    LinearDelta,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Transformer => Family::Transformer,
            FamilyArg::LinearAlpha => Family::LinearAlpha,
            FamilyArg::LinearAlphaPrime => Family::LinearAlphaPrime,
            FamilyArg::LinearBeta => Family::LinearBeta,
            FamilyArg::LinearGamma => Family::LinearGamma,
            FamilyArg::LinearDelta => Family::LinearDelta,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ActivationArg {
    Relu,
    Gelu,
    Linear,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Relu => Activation::Relu,
            ActivationArg::Gelu => Activation::Gelu,
            ActivationArg::Linear => Activation::Linear,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Start from a JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub attention_rate: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long, value_enum)]
    pub activation: Option<ActivationArg>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long)]
    pub checkpoint_metrics: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Print a line per checkpoint.
    #[arg(long)]
    pub verbose: bool,
}

impl TrainArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => crate::sweep::read_json(path)?,
            None => RunConfig::default(),
        };
        if let Some(f) = self.family {
            c.family = f.into();
            if c.family == Family::LinearAlphaPrime {
                c.embedding = crate::models::EmbeddingVariant::Separate;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v.into(); } )* };
        }
        set!(attention_rate, width, layers, heads, p, seed, lr, weight_decay, epochs, train_fraction, checkpoint_every);
        if let Some(a) = self.activation {
            c.activation = a.into();
        }
        c.early_stop |= self.early_stop;
        c.checkpoint_metrics |= self.checkpoint_metrics;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub record: PathBuf,
    /// Use every triple for gradient symmetricity instead of the default sample.
    #[arg(long)]
    pub exhaustive: bool,
    /// Write the updated record here instead of in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the correct-logit heatmap (rows a−b, columns a+b).
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IsolateArgs {
    pub record: PathBuf,
    /// Number of principal-component pairs to isolate.
    #[arg(long, default_value_t = 3)]
    pub pairs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one embedding-circle SVG per pair.
    #[arg(long)]
    pub figures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the PIZZACLOCK_WORKERS variable or all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(required = true)]
    pub records: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub runs: PathBuf,
    /// Phase scatter SVG.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Probes per finite-difference check.
    #[arg(long, default_value_t = 10)]
    pub probes: usize,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    crate::sweep::write_text(path, contents)
}

/// Parses `args` (program name first), runs the verb, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let (code, category) = classify_error(&e);
            let _ = writeln!(err, "error[{category}]: {e}");
            code
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

/// Runs one parsed command.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match command {
        Command::Train(args) => {
            let config = args.to_config()?;
            let record = train_with(&config, EarlyStop::default(), |cp| {
                if args.verbose {
                    let _ = writeln!(
                        std::io::stderr(),
                        "epoch {:>6}  train loss {:.3e}  val acc {:.4}",
                        cp.epoch, cp.train_loss, cp.val_acc
                    );
                }
            })?;
            save_record(&args.out, &record)?;
            writeln!(out, "{}", summary(&record)).map_err(io)?;
            Ok(match record.status {
                RunStatus::Completed => EXIT_OK,
                RunStatus::Failed { .. } => EXIT_NUMERIC,
            })
        }
        Command::Analyze(args) => {
            let mut record = load_record(&args.record)?;
            let model = weights(&record, &args.record)?;
            let samples = if args.exhaustive {
                SampleSet::Exhaustive
            } else {
                SampleSet::Random {
                    count: DEFAULT_SAMPLE_COUNT,
                    seed: record.config.seed,
                }
            };
            let val = record.checkpoints.last().map(|c| c.val_acc);
            let report = analyze(model, &samples, val)?;
            if let Some(path) = &args.heatmap {
                write_file(path, &render_heatmap(&correct_logits(model)?, Reindex::DifferenceSum))?;
            }
            writeln!(out, "{}", to_json(&report)).map_err(io)?;
            record.classification = record.converged.then(|| classify(&report, &Thresholds::default()));
            record.metrics = Some(report);
            save_record(args.out.as_ref().unwrap_or(&args.record), &record)?;
            Ok(EXIT_OK)
        }
        Command::Isolate(args) => {
            let mut record = load_record(&args.record)?;
            let model = weights(&record, &args.record)?.clone();
            let reports = circle_reports(&model, args.pairs)?;
            if let Some(dir) = &args.figures {
                let emb = model.operand_embeddings();
                let pca = crate::numerics::principal_components(&emb, 2 * args.pairs)?;
                let labels: Vec<String> = (0..model.arch.p).map(|t| t.to_string()).collect();
                for (i, r) in reports.iter().enumerate() {
                    let pts = crate::numerics::Matrix::from_fn(model.arch.p, 2, |t, c| {
                        pca.projections[(t, if c == 0 { r.pc_pair.0 } else { r.pc_pair.1 })]
                    });
                    write_file(&dir.join(format!("circle-{}.svg", i + 1)), &render_circle(&pts, &labels))?;
                }
            }
            let six = if model.operand_embeddings().cols() >= 6 {
                Some(six_component_accuracy(&model)?)
            } else {
                None
            };
            writeln!(
                out,
                "{}",
                to_json(&serde_json::json!({ "circles": reports, "six_component_accuracy": six }))
            )
            .map_err(io)?;
            record.circles = reports;
            save_record(args.out.as_ref().unwrap_or(&args.record), &record)?;
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => {
            let spec: SweepSpec = crate::sweep::read_json(&args.spec)?;
            let workers = args.workers.unwrap_or_else(default_workers);
            let records = run_sweep(&spec, Some(&args.out), workers)?;
            for r in &records {
                writeln!(out, "{}", summary(r)).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Classify(args) => {
            for path in &args.records {
                let r = load_record(path)?;
                let label = match (&r.metrics, r.converged) {
                    (Some(m), true) => classify(m, &Thresholds::default()).label.name(),
                    _ => "unconverged",
                };
                writeln!(out, "{}\t{label}", path.display()).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Report(args) => {
            let records = import_dir(&args.runs)?;
            write_file(&args.out, &render_phase(&records))?;
            if let Some(csv) = &args.csv {
                write_file(csv, &export_csv(&records))?;
            }
            let boundary = phase_boundary(&records)?;
            writeln!(out, "{}", to_json(&boundary)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Selfcheck(args) => selfcheck(args.probes, out),
    }
}

fn weights<'a>(record: &'a RunRecord, path: &Path) -> Result<&'a crate::models::ModelParams> {
    record.weights.as_ref().ok_or_else(|| Error::Data {
        path: path.to_path_buf(),
        message: "record carries no weights".into(),
    })
}

fn summary(r: &RunRecord) -> String {
    let m = r.metrics.as_ref();
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    format!(
        "{} alpha={} d={} seed={} epochs={} converged={} circ={} s_g={} q={} label={}",
        r.config.family.name(),
        r.config.attention_rate,
        r.config.width,
        r.config.seed,
        r.epochs_run,
        r.converged,
        f(m.and_then(|m| m.circularity)),
        f(m.and_then(|m| m.gradient_symmetricity)),
        f(m.and_then(|m| m.distance_irrelevance)),
        r.label().map_or("-", |l| l.name()),
    )
}

fn selfcheck(probes: usize, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    let mut ok = true;
    let mut line = |name: &str, pass: bool, detail: String| -> Result<()> {
        ok &= pass;
        writeln!(out, "{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }).map_err(io)
    };
    let fd_configs = [
        RunConfig { p: 13, ..RunConfig::transformer(0.5, 16, 1) },
        RunConfig { p: 13, ..RunConfig::linear(Family::LinearBeta, 16, 1) },
    ];
    for cfg in &fd_configs {
        let model = build(cfg)?;
        let r = finite_difference_check(&model, probes, 1e-4)?;
        line(
            &format!("gradients {}", cfg.family.name()),
            r.max_rel_error < 1e-4,
            format!("max relative error {:.2e}", r.max_rel_error),
        )?;
    }
    let pizza = AnalyticModel::pizza(23, 1);
    let sg = gradient_symmetricity(&pizza, &SampleSet::Exhaustive)?.value.unwrap_or(f64::NAN);
    line("pizza symmetricity", (sg - 1.0).abs() < 1e-6, format!("{sg}"))?;
    let clock = AnalyticModel::clock(23, 1);
    let q = distance_irrelevance(&correct_logits(&clock)?);
    line("clock correct logits constant", q.is_none(), format!("{q:?}"))?;
    let f = fve(&all_logits(&pizza)?, &logit_tensor(&pizza.spec, pizza_logit))?.unwrap_or(f64::NAN);
    line("pizza example fve", f >= 0.98, format!("{f:.5}"))?;
    let dev = abs_cos_identity_deviation(10_000);
    line("abs-cos identity", dev < 0.25, format!("{dev:.9}"))?;
    let res = symmetric_decomposition_check(0.7, -0.3, 50);
    line("symmetric decomposition", res < 1e-12, format!("{res:.2e}"))?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERIC })
}
