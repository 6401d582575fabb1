//! `age`: train and evaluate adversarial graph embeddings.

mod commands;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use age_core::AgeError;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "age", version, about = "Adversarial graph embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write embeddings, a checkpoint and reports.
    Train(TrainArgs),
    /// Score a checkpoint on link prediction or node classification.
    Evaluate(EvaluateArgs),
    /// Graph reconstruction precision@k for a checkpoint.
    Reconstruct(ReconstructArgs),
    /// Plot-ready CSV sweeps.
    Sweep(SweepArgs),
    /// Finite-difference check of every loss gradient on built-in graphs.
    CheckGrad(CheckGradArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Edge list (`u v`) or triple file (`head relation tail`).
    #[arg(long)]
    pub graph: PathBuf,
    /// How to read `--graph`. Defaults to what the variant expects.
    #[arg(long, value_enum)]
    pub graph_kind: Option<GraphKindArg>,
    /// `node type` lines, used for type-matched negatives.
    #[arg(long)]
    pub types: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Flat `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for gradient accumulation; 1 is the deterministic
    /// reference mode.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub variant: String,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Hold out test edges per the link-prediction protocol, write the
    /// split files and train on the remaining edges.
    #[arg(long)]
    pub holdout: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub task: Task,
    /// Split file(s) written by `train --holdout` (link prediction).
    #[arg(long)]
    pub split: Vec<PathBuf>,
    /// `node label` lines (node classification).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub train_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', default_values_t = age_core::eval::DEFAULT_K_GRID)]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub sample_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    #[arg(long)]
    pub variant: String,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Reuse a trained model instead of training (sparsity and k sweeps).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = age_core::eval::DEFAULT_K_GRID)]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub sample_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CheckGradArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit one JSON object per line instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Metric records as JSON lines; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a CSV with a provenance header.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKindArg {
    Undirected,
    Directed,
    Triples,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Lp,
    Nc,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Node classification over training ratios 0.1..0.9.
    Sparsity,
    /// Directed link prediction over reversed-negative fractions.
    Gamma,
    /// Graph reconstruction over the k grid.
    K,
    /// Link prediction retrained at each training-edge ratio 0.1..0.9.
    Edges,
}

/// Errors the user can fix by changing the command line or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Exit code of a failed command: 1 usage, 2 data, 3 numeric.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<AgeError>() {
        Some(e) if e.is_numeric() => 3,
        Some(AgeError::InvalidArgument(_)) => 1,
        Some(_) => 2,
        None if err.downcast_ref::<commands::GradCheckFailed>().is_some() => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::CheckGrad(a) => commands::check_grad(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
