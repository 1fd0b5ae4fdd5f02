//! `sparseflow` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when an
//! input file or model cannot be read or processed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] sparseflow::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sparseflow",
    version,
    about = "Dataflow selection for sparse matrix-matrix multiplication"
)]
pub struct Cli {
    /// Seed for every random choice (generation, splits, folds, Q-network training)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory that relative output paths are written under
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// key = value file overriding simulator, tree and Q-network defaults
    /// (num_pes=4, mem_block_rows=256, resident_blocks=4, miss_penalty_cycles=64,
    /// max_depth=9, min_samples_leaf=1, feature_subset=<top five>, class_weights=balanced,
    /// epsilon_start=1.0, epsilon_decay=0.995, epsilon_min=0.05, replay_capacity=10000,
    /// batch_size=64, learning_rate=0.001, reward_weight=0.1, episodes=20000)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random matrices, or a synthetic corpus of pairs with a manifest
    Gen(GenArgs),
    /// Run the dataflow simulators on one pair
    Simulate(SimulateArgs),
    /// Extract the twelve raw features of one pair
    Features(PairArgs),
    /// Simulate every block pair of a corpus and write labeled datasets
    BuildDataset(BuildArgs),
    /// Train the decision tree
    TrainDt(TrainDtArgs),
    /// Train the Q-network selector
    TrainRl(TrainRlArgs),
    /// Write a decision tree as nested if/elif rules
    ExportRules(ExportArgs),
    /// Label rows of a feature CSV with the fixed two-level heuristic
    Heuristic(HeuristicArgs),
    /// Speedups and accuracy of a selector on a dataset
    Evaluate(EvaluateArgs),
    /// Grouped, stratified k-fold cross-validation of the decision tree
    Cv(CvArgs),
    /// Byte sizes of model and rule files
    StorageReport(StorageArgs),
    /// Per-row sparsity, row length and latencies for plotting
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of matrices to write
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    /// Defaults to --rows
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub density: f64,
    /// uniform, banded or clustered
    #[arg(long, default_value = "uniform")]
    pub pattern: String,
    /// Write this many synthetic pairs plus manifest.txt instead of single matrices
    #[arg(long)]
    pub corpus: Option<usize>,
    /// Corpus side lengths are drawn from [min-dim, max-dim]
    #[arg(long, default_value_t = 64)]
    pub min_dim: usize,
    #[arg(long, default_value_t = 256)]
    pub max_dim: usize,
    /// Corpus densities are drawn log-uniformly from [min-density, max-density]
    #[arg(long, default_value_t = 1e-3)]
    pub min_density: f64,
    #[arg(long, default_value_t = 0.5)]
    pub max_density: f64,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// CSV output; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataflowChoice {
    Ip,
    Op,
    Rw,
    All,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub dataflow: DataflowChoice,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Pair manifest (`a.mtx b.mtx [id]` per line)
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Generate this many synthetic pairs instead of reading a manifest
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub block_rows: usize,
    /// Defaults to --block-rows
    #[arg(long)]
    pub block_cols: Option<usize>,
    /// Worker threads; all cores when omitted
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Share of pair groups in the training split
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Full dataset CSV; `<stem>_train.csv` and `<stem>_eval.csv` are written beside it
    #[arg(long, default_value = "dataset.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainDtArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Default 9
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Default 1
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long, default_value = "model.dt")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainRlArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Default 20000
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long, default_value = "model.rl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value = "rules.txt")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    /// CSV with a header naming the twelve feature columns (other columns are kept)
    #[arg(long)]
    pub features: PathBuf,
    /// Scale raw features with this scaler file first; otherwise inputs must already be scaled
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// CSV output; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the heuristic's rule text here
    #[arg(long)]
    pub rules_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Dt,
    Rl,
    Heuristic,
    Ip,
    Op,
    Rw,
    Oracle,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Model file for dt and rl
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Default 9
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StorageArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// CSV output; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
