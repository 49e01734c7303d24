use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use clids_core::data::DEFAULT_BENIGN_LABEL;

#[derive(Debug, Parser)]
#[command(name = "clids", version, about = "Dual-head CNN-LSTM intrusion detection for network-flow CSVs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a run directory.
    Train(TrainArgs),
    /// Score a labelled CSV with a trained model.
    Evaluate(EvaluateArgs),
    /// Write per-row probabilities and labels for a CSV.
    Predict(PredictArgs),
    /// Finite-difference check of every backward pass.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic flow CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DifficultyArg {
    Separable,
    Noisy,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Raw label value meaning benign; anything else is malicious.
    #[arg(long, default_value = DEFAULT_BENIGN_LABEL)]
    pub benign_label: String,
    /// Treat labels starting with --benign-label as benign.
    #[arg(long)]
    pub label_prefix: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["data", "synth"])))]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate this many synthetic rows instead of reading a CSV.
    #[arg(long, value_name = "N")]
    pub synth: Option<usize>,
    #[arg(long, value_enum, default_value = "separable")]
    pub synth_difficulty: DifficultyArg,
    #[command(flatten)]
    pub labels: LabelArgs,
    #[arg(long, default_value_t = 25)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Seeds initialization, the split and shuffling.
    #[arg(long, env = "CLIDS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Run directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Labelled CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column; defaults to the one used in training.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Benign label; defaults to the one used in training.
    #[arg(long)]
    pub benign_label: Option<String>,
    /// Where metrics.json and roc.csv go; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV to score; a label column, if present, is ignored.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column to skip; defaults to the one used in training.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Output CSV: p_benign,p_malicious,label.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, env = "CLIDS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = clids_core::gradcheck::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "N")]
    pub rows: usize,
    #[arg(long, env = "CLIDS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "separable")]
    pub difficulty: DifficultyArg,
    #[arg(long)]
    pub out: PathBuf,
}
