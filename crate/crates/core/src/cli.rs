//! Command-line front end: `synth`, `optimize`, `fuse`, `predict`, `eval`.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! data and I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::data::{
    self, generate_synthetic, preset, read_labels, read_predictions, write_basic_predictions, write_ce_predictions,
    write_diagnostics, write_report, DatasetManifest, LabelTask, SyntheticProfile, WeightsFile, PRESETS,
};
use crate::emotion::{BasicEmotion, ClassLabel, CompoundExpression, ProbabilityVector};
use crate::error::{Error, Result};
use crate::fusion::{FusedVector, FusionMode, FusionParameters};
use crate::metrics::{confusion_for, AbsentClassPolicy, EvaluationReport};
use crate::optimizer::{evaluate_params, search, trial_params, Metric, SearchConfig, VStrategy};
use crate::rules::{predict_ce, AllMaskedPolicy, CePrediction, RuleConfig, RuleKind, DEFAULT_MASK_THRESHOLD};
use crate::temporal::AlignedDataset;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cefusion", version, about = "Fuse emotion probability streams and predict compound expressions")]
pub struct Cli {
    /// Seed for synthetic data and weight search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Log filter, e.g. `info` or `cefusion=debug`.
    #[arg(long, global = true, env = "CEFUSION_LOG", default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (streams, labels, manifest).
    Synth(SynthArgs),
    /// Search fusion weights on a labelled dataset.
    Optimize(OptimizeArgs),
    /// Write fused basic-emotion predictions.
    Fuse(FuseArgs),
    /// Write per-frame compound expression predictions.
    Predict(PredictArgs),
    /// Score a predictions file against labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in profile name.
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    pub preset: Option<String>,
    /// Profile JSON file.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Override the profile's frame count.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Dirichlet,
    Hierarchical,
}

impl From<ModeArg> for FusionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dirichlet => FusionMode::Dirichlet,
            ModeArg::Hierarchical => FusionMode::Hierarchical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    F1,
    Uar,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::F1 => Metric::MacroF1,
            MetricArg::Uar => Metric::Uar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VStrategyArg {
    GridRandom,
    GridExhaustive,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Dirichlet)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::F1)]
    pub metric: MetricArg,
    /// Dirichlet concentration for the class weights.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Model-weight search in hierarchical mode.
    #[arg(long, value_enum, default_value_t = VStrategyArg::GridRandom)]
    pub v_strategy: VStrategyArg,
    /// Weights file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    None,
}

impl From<RuleArg> for RuleKind {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::One => RuleKind::Rule1,
            RuleArg::Two => RuleKind::Rule2,
            RuleArg::None => RuleKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllMaskedArg {
    UseUnmasked,
    FirstClass,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, value_enum)]
    pub rule: RuleArg,
    /// Rule 1 masking threshold.
    #[arg(long, default_value_t = DEFAULT_MASK_THRESHOLD)]
    pub mask_threshold: f64,
    /// Rule 1 behaviour when every compound score is masked to zero.
    #[arg(long, value_enum, default_value_t = AllMaskedArg::UseUnmasked)]
    pub all_masked: AllMaskedArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Also list frames with masking events.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Basic,
    Compound,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Leave classes without ground-truth frames out of the averages.
    #[arg(long)]
    pub exclude_absent: bool,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Output goes to stdout, errors to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log_level).try_init();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed, out),
        Command::Optimize(a) => optimize(a, cli.seed.unwrap_or(0), out),
        Command::Fuse(a) => fuse(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Eval(a) => eval(a, out),
    }
}

fn say(out: &mut dyn std::io::Write, text: String) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new(""))
}

fn load_manifest(path: &Path) -> Result<(DatasetManifest, AlignedDataset)> {
    let manifest = DatasetManifest::load(path)?;
    let dataset = manifest.load_dataset(base_dir(path))?;
    Ok((manifest, dataset))
}

fn synth(a: &SynthArgs, seed: Option<u64>, out: &mut dyn std::io::Write) -> Result<()> {
    let mut profile = match (&a.preset, &a.profile) {
        (Some(name), _) => preset(name, seed.unwrap_or(0)).ok_or_else(|| {
            Error::Config(format!("unknown preset '{name}' (available: {})", PRESETS.join(", ")))
        })?,
        (None, Some(path)) => {
            let mut p = SyntheticProfile::read(path)?;
            if let Some(s) = seed {
                p.seed = s;
            }
            p
        }
        (None, None) => return Err(Error::Config("either --preset or --profile is required".into())),
    };
    if let Some(n) = a.frames {
        profile.frame_count = n;
    }
    profile.validate()?;
    let corpus = generate_synthetic(&profile)?;
    corpus.write(&a.out)?;
    say(
        out,
        format!(
            "wrote {} frames from {} models to {}",
            profile.frame_count,
            profile.models.len(),
            a.out.display()
        ),
    )
}

fn optimize(a: &OptimizeArgs, seed: u64, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = SearchConfig {
        trials: a.trials,
        seed,
        alpha: a.alpha,
        metric: a.metric.into(),
        mode: a.mode.into(),
        v_strategy: match a.v_strategy {
            VStrategyArg::GridRandom => VStrategy::GridRandom,
            VStrategyArg::GridExhaustive => VStrategy::GridExhaustive,
        },
        record_trace: false,
    };
    let manifest = DatasetManifest::load(&a.manifest)?;
    cfg.validate(manifest.models.len())?;
    if manifest.labels_for(LabelTask::Basic).is_none() {
        return Err(Error::Config(format!(
            "{}: optimization requires labels (no basic-emotion labels entry)",
            a.manifest.display()
        )));
    }
    let dataset = manifest.load_dataset(base_dir(&a.manifest))?;
    let baseline = evaluate_params(&trial_params(&cfg, &dataset.model_ids, 0)?, &dataset, cfg.metric)?;
    let result = search(&cfg, &dataset)?;
    WeightsFile::from_result(&result, &cfg, &dataset.dataset_id).write(&a.out)?;
    say(
        out,
        format!(
            "best {} = {:.2} at trial {} (uniform baseline {:.2}); wrote {}",
            cfg.metric,
            result.best_score * 100.0,
            result.trial_index,
            baseline * 100.0,
            a.out.display()
        ),
    )
}

/// Fused vectors for every frame, with the dataset's models reordered to
/// the weights' model order.
fn fuse_all(params: &FusionParameters, dataset: &AlignedDataset) -> Result<Vec<ProbabilityVector>> {
    let order = dataset.model_order(params.model_ids())?;
    (0..dataset.frame_count)
        .into_par_iter()
        .map(|i| {
            let frame: Vec<_> = order.iter().map(|&m| dataset.streams[m][i]).collect();
            params.fuse(&frame).map(|f| f.probs)
        })
        .collect()
}

fn fuse(a: &FuseArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let weights = WeightsFile::read(&a.weights)?;
    let params = weights.to_params()?;
    let (_, dataset) = load_manifest(&a.manifest)?;
    let fused = fuse_all(&params, &dataset)?;
    write_basic_predictions(&a.out, &fused)?;
    say(out, format!("wrote {} fused frames to {}", fused.len(), a.out.display()))
}

fn predict(a: &PredictArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let rule = RuleConfig::new(a.rule.into())
        .with_threshold(a.mask_threshold)?
        .with_policy(match a.all_masked {
            AllMaskedArg::UseUnmasked => AllMaskedPolicy::UseUnmasked,
            AllMaskedArg::FirstClass => AllMaskedPolicy::FirstClass,
        });
    let params = WeightsFile::read(&a.weights)?.to_params()?;
    if rule.rule == RuleKind::Rule1 && params.mode() != FusionMode::Dirichlet {
        return Err(Error::Config(format!(
            "rule 1 applies only to dirichlet fusion, {} has mode {}",
            a.weights.display(),
            params.mode()
        )));
    }
    let (_, dataset) = load_manifest(&a.manifest)?;
    let predictions: Vec<CePrediction> = fuse_all(&params, &dataset)?
        .into_iter()
        .map(|probs| predict_ce(&FusedVector { probs, mode: params.mode() }, &rule))
        .collect::<Result<_>>()?;
    write_ce_predictions(&a.out, &predictions)?;
    if let Some(path) = &a.diagnostics {
        write_diagnostics(path, &predictions)?;
    }
    let events: Vec<String> = data::event_counts(&predictions)
        .iter()
        .map(|(e, n)| format!("{} {n}", e.name()))
        .collect();
    say(
        out,
        format!("wrote {} predictions to {} ({})", predictions.len(), a.out.display(), events.join(", ")),
    )
}

/// Pairs predictions with labels frame by frame. Both files must list the
/// same frames; unlabelled frames are skipped.
fn paired<L: ClassLabel>(pred_path: &Path, labels_path: &Path) -> Result<(Vec<L>, Vec<L>)> {
    let preds = read_predictions::<L>(pred_path)?;
    let labels = read_labels::<L>(labels_path)?;
    if preds.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} has {} frames but {} has {}",
            pred_path.display(),
            preds.len(),
            labels_path.display(),
            labels.len()
        )));
    }
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for ((pf, p), (lf, l)) in preds.into_iter().zip(labels) {
        if pf != lf {
            return Err(Error::Config(format!(
                "frame {pf} of {} does not match frame {lf} of {}",
                pred_path.display(),
                labels_path.display()
            )));
        }
        if let Some(l) = l {
            truth.push(l);
            pred.push(p);
        }
    }
    Ok((truth, pred))
}

fn eval(a: &EvalArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let policy = if a.exclude_absent { AbsentClassPolicy::Exclude } else { AbsentClassPolicy::Zero };
    let cm = match a.task {
        TaskArg::Basic => {
            let (t, p) = paired::<BasicEmotion>(&a.pred, &a.labels)?;
            confusion_for(&t, &p)?
        }
        TaskArg::Compound => {
            let (t, p) = paired::<CompoundExpression>(&a.pred, &a.labels)?;
            confusion_for(&t, &p)?
        }
    };
    let report = EvaluationReport::from_confusion(cm, policy)?;
    if let Some(path) = &a.out {
        write_report(path, &report)?;
    }
    write!(out, "{}", report.render_table()).map_err(|e| Error::io("<stdout>", e))
}
