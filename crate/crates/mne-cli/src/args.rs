//! Argument surface and config-file handling. A config file holds
//! `key = value` lines using long flag names; command-line flags override
//! file values, which override built-in defaults.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Print to stderr, exit 1. Help/version requests carry exit 0.
    Usage { message: String, exit_zero: bool },
    /// Config file problems are usage errors too.
    Config(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage { message, .. } => write!(f, "{message}"),
            CliError::Config(message) => write!(f, "config error: {message}"),
        }
    }
}

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(
    name = "mne",
    version,
    about = "Structure-preserving multi-relational network embeddings",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Count triangular and parallelogram structures in a graph.
    Census(CensusArgs),
    /// Train embeddings and write a checkpoint directory.
    Train(TrainArgs),
    /// Triplet classification over a checkpoint trained on the full graph.
    EvalTc(EvalTcArgs),
    /// Link prediction: split, train on the train split, classify held-out edges.
    EvalLp(EvalLpArgs),
    /// Train and evaluate across a list of dimensions.
    SweepDim(SweepDimArgs),
    /// Train and evaluate on subgraphs with controlled tri-node ratios.
    SweepTri(SweepTriArgs),
    /// Print one embedding file of a checkpoint to standard output.
    DumpEmbeddings(DumpArgs),
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CensusArgs {
    /// Triple file (TSV: head, relation, tail, optional weight).
    #[arg(long)]
    pub graph: PathBuf,
    /// Count triangles over any relation combination instead of requiring
    /// one shared relation.
    #[arg(long, default_value_t = false)]
    pub relaxed_relations: bool,
    /// Maximum edge count for exact parallelogram enumeration.
    #[arg(long, default_value_t = 300_000)]
    pub exact_limit: usize,
    /// Edge-pair draws for the sampled parallelogram estimate.
    #[arg(long, default_value_t = 2_000_000)]
    pub sample_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the TSV report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file with key = value defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct TrainArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Checkpoint directory to create.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Training flags shared by every training-capable subcommand.
#[derive(Args, Debug, Clone, PartialEq)]
pub struct TrainFlags {
    /// Model: mne, rline or transe.
    #[arg(long, default_value = "mne")]
    pub model: String,
    /// Bridge for the mne model: add or mul.
    #[arg(long)]
    pub bridge: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Initial learning rate.
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    /// Negative samples per positive.
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    /// Total training samples (default: 200 per edge).
    #[arg(long)]
    pub samples: Option<u64>,
    /// Ranking margin (transe only).
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Learning-rate schedule: linear-decay or constant.
    #[arg(long, default_value = "linear-decay")]
    pub lr_schedule: String,
    /// Pin relation vectors at zero.
    #[arg(long, default_value_t = false)]
    pub freeze_relations: bool,
    /// Suppress progress lines.
    #[arg(long, default_value_t = false)]
    pub quiet: bool,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ClassifierFlags {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Classifier learning rate.
    #[arg(long, default_value_t = 0.01)]
    pub clf_lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Z-score features with training-set statistics.
    #[arg(long, default_value_t = false)]
    pub standardize: bool,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct EvalTcArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Checkpoint directory produced by `train`.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Train fraction of the labeled-set split.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub classifier: ClassifierFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct EvalLpArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Train fraction of the edge split.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub classifier: ClassifierFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SweepDimArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated dimensions, e.g. 2,5,10,20,50,100.
    #[arg(long)]
    pub dims: String,
    /// Task: tc or lp.
    #[arg(long, default_value = "tc")]
    pub task: String,
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub classifier: ClassifierFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SweepTriArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated target tri-node ratios in (0, 1].
    #[arg(long)]
    pub ratios: String,
    /// Comma-separated models: mne+, mne*, rline, transe.
    #[arg(long, default_value = "mne+,transe")]
    pub models: String,
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub classifier: ClassifierFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct DumpArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Which matrix: source, target or relation.
    #[arg(long, default_value = "source")]
    pub kind: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Every key a config file may define, in long-flag form.
const KNOWN_KEYS: &[&str] = &[
    "graph",
    "out",
    "ckpt",
    "relaxed-relations",
    "exact-limit",
    "sample-budget",
    "seed",
    "model",
    "bridge",
    "dim",
    "lr",
    "negatives",
    "samples",
    "margin",
    "threads",
    "lr-schedule",
    "freeze-relations",
    "quiet",
    "split",
    "epochs",
    "clf-lr",
    "l2",
    "standardize",
    "dims",
    "task",
    "ratios",
    "models",
    "kind",
];

/// Boolean flags take no value on the command line.
const FLAG_KEYS: &[&str] = &["relaxed-relations", "freeze-relations", "quiet", "standardize"];

fn parse_config_file(
    path: &std::path::Path,
) -> Result<Vec<(String, Option<String>)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}:{}: expected 'key = value'", path.display(), i + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown key {key:?}",
                path.display(),
                i + 1
            )));
        }
        if FLAG_KEYS.contains(&key) {
            let on: bool = value.parse().map_err(|_| {
                CliError::Config(format!(
                    "{}:{}: {key} must be true or false, got {value:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            if on {
                entries.push((key.to_string(), None));
            }
        } else {
            entries.push((key.to_string(), Some(value.to_string())));
        }
    }
    Ok(entries)
}

fn clap_error(err: clap::Error) -> CliError {
    let exit_zero =
        matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
    CliError::Usage { message: err.render().to_string(), exit_zero }
}

fn config_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Census(a) => a.config.as_ref(),
        Command::Train(a) => a.config.as_ref(),
        Command::EvalTc(a) => a.config.as_ref(),
        Command::EvalLp(a) => a.config.as_ref(),
        Command::SweepDim(a) => a.config.as_ref(),
        Command::SweepTri(a) => a.config.as_ref(),
        Command::DumpEmbeddings(a) => a.config.as_ref(),
    }
}

/// Parses argv, folding in config-file defaults when `--config` is given.
/// A key set explicitly on the command line always beats the file value;
/// file values beat built-in defaults.
pub fn resolve(argv: &[String]) -> Result<Cli, CliError> {
    let first = Cli::try_parse_from(argv).map_err(clap_error)?;
    let Some(config) = config_path(&first.command) else {
        return Ok(first);
    };
    let entries = parse_config_file(config)?;
    if entries.is_empty() || argv.len() < 2 {
        return Ok(first);
    }
    let user_has = |key: &str| {
        let exact = format!("--{key}");
        let prefix = format!("--{key}=");
        argv[2..].iter().any(|a| a == &exact || a.starts_with(&prefix))
    };
    // argv[1] is the subcommand token; config-derived flags go right after it.
    let mut merged: Vec<String> = Vec::with_capacity(argv.len() + 2 * entries.len());
    merged.extend_from_slice(&argv[..2]);
    for (key, value) in entries {
        if user_has(&key) {
            continue;
        }
        merged.push(format!("--{key}"));
        if let Some(value) = value {
            merged.push(value);
        }
    }
    merged.extend_from_slice(&argv[2..]);
    Cli::try_parse_from(&merged).map_err(clap_error)
}
