//! Command-line front end.
//!
//! Every sub-command reads an optional TOML config (`--config`) whose keys
//! are the long flag names with `-` replaced by `_`; flags override the file.
//! The effective configuration is echoed in a versioned JSON run report
//! (`--report`, or stdout). Exit status: 0 success, 1 runtime failure (the
//! failing stage is named on stderr), 2 usage error.

pub mod ablation;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use ablation::{run_ablation, AblationConfig, AblationOutcome, AblationReport, VariantReport};
pub use commands::{
    AblationCommand, EvaluateCommand, GradcheckCommand, PhantomCommand, PredictCommand, RankCommand, TrainCommand,
};

use crate::error::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: Error },
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T, E: Into<Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Stage { stage, source: e.into() })
    }
}

/// Machine-readable record of one invocation. Contains no timestamps or
/// durations, so identical inputs give byte-identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub result: serde_json::Value,
    pub success: bool,
}

#[derive(Debug, Parser)]
#[command(name = "wmhseg", version, about = "Two-stage white-matter-hyperintensity segmentation on T1/FLAIR volumes")]
pub struct Cli {
    /// Write the JSON run report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// TOML file with default values for the sub-command's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Log errors only.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic T1/FLAIR dataset with WM and lesion ground truth.
    Phantom(PhantomFlags),
    /// Train the white-matter network (trimmed plain U-Net on T1).
    TrainWm(TrainFlags),
    /// Train the lesion network (residual U-Net on T1 + FLAIR).
    TrainWmh(TrainFlags),
    /// Run both stages on a dataset or a single T1/FLAIR pair.
    Predict(PredictFlags),
    /// Score a predicted mask against a reference mask.
    Evaluate(EvaluateFlags),
    /// Rank teams from a CSV of per-team metric averages.
    Rank(RankFlags),
    /// Check analytic gradients against finite differences.
    Gradcheck(GradcheckFlags),
    /// Train plain and residual U-Nets under identical settings and compare.
    Ablation(AblationFlags),
}

#[derive(Debug, Args, Serialize)]
pub struct PhantomFlags {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of cases [default: 10].
    #[arg(long)]
    pub cases: Option<usize>,
    /// Dataset seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Volume size, e.g. 64,64,8.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Voxel size in mm, e.g. 1,1,3.
    #[arg(long, value_delimiter = ',')]
    pub spacing: Option<Vec<f64>>,
    /// Inclusive lesion count range, e.g. 2,5.
    #[arg(long, value_delimiter = ',')]
    pub lesion_count: Option<Vec<usize>>,
    /// Lesion radius range in mm, e.g. 3,5.
    #[arg(long, value_delimiter = ',')]
    pub lesion_radius: Option<Vec<f64>>,
    #[arg(long)]
    pub noise_std: Option<f32>,
    /// Add a FLAIR-bright structure outside the white matter.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub confounder: Option<bool>,
    #[arg(long)]
    pub confounder_radius: Option<f64>,
    #[arg(long)]
    pub shape_jitter: Option<f64>,
}

/// Optimization flags shared by the training commands.
#[derive(Debug, Args, Serialize)]
pub struct OptimFlags {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Random rotations and flips.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub augment: Option<bool>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Stop after this many SGD steps.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub base_width: Option<usize>,
    /// Pooling stages [default: 3 for train-wm, 4 otherwise].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Loss weight placement: paper (β on foreground) or swapped.
    #[arg(long)]
    pub placement: Option<String>,
    /// Fixed β instead of the training-split background fraction.
    #[arg(long)]
    pub beta: Option<f64>,
}

/// Post-processing flags shared by commands that run the pipeline.
#[derive(Debug, Args, Serialize)]
pub struct PipelineFlags {
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub dilation_radius: Option<usize>,
    /// 6, 18 or 26.
    #[arg(long)]
    pub refine_connectivity: Option<String>,
    /// Remove lesion predictions outside the white-matter mask.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub confine: Option<bool>,
    #[arg(long)]
    pub inference_batch: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainFlags {
    /// Dataset directory written by `phantom`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// train-wmh only: derive the normalization mask from this WM model
    /// instead of the refined WM ground truth.
    #[arg(long)]
    pub wm_model: Option<PathBuf>,
    /// Per-iteration loss CSV.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub optim: OptimFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictFlags {
    #[arg(long)]
    pub wm_model: Option<PathBuf>,
    #[arg(long)]
    pub wmh_model: Option<PathBuf>,
    /// Dataset directory (ground truth, if present, is scored).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Single-case T1 NIfTI (with --flair, instead of --data).
    #[arg(long)]
    pub t1: Option<PathBuf>,
    #[arg(long)]
    pub flair: Option<PathBuf>,
    /// Output directory for masks and per-case reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateFlags {
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub case_id: Option<String>,
    /// Per-case metrics CSV to write.
    #[arg(long)]
    pub cases_csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RankFlags {
    /// CSV with columns team,dice,h95,avd,recall,f1.
    #[arg(long)]
    pub summaries: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckFlags {
    #[arg(long)]
    pub base_width: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Input height and width.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AblationFlags {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory for the two checkpoints (optional).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub optim: OptimFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineFlags,
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).try_init();
}

/// Execute a parsed command line and produce its report.
pub fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    let file = cli.config.as_deref();
    match &cli.command {
        Command::Phantom(f) => commands::phantom(file, f),
        Command::TrainWm(f) => commands::train_stage(file, f, commands::Stage::WhiteMatter),
        Command::TrainWmh(f) => commands::train_stage(file, f, commands::Stage::Lesion),
        Command::Predict(f) => commands::predict(file, f),
        Command::Evaluate(f) => commands::evaluate(file, f),
        Command::Rank(f) => commands::rank(file, f),
        Command::Gradcheck(f) => commands::gradcheck(file, f),
        Command::Ablation(f) => commands::ablation(file, f),
    }
}

fn emit(report: &RunReport, path: Option<&std::path::Path>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).stage("write-report")?;
    match path {
        Some(p) => std::fs::write(p, json + "\n").stage("write-report"),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose, cli.quiet);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    let outcome = pool.install(|| execute(&cli)).and_then(|report| {
        emit(&report, cli.report.as_deref())?;
        if report.success {
            Ok(())
        } else {
            Err(CliError::Stage {
                stage: report.command,
                source: Error::InvalidArgument("check did not pass; see report".into()),
            })
        }
    });
    match outcome {
        Ok(()) => 0,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
