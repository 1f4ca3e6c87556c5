mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Multilabel classification by problem transformation.
#[derive(Debug, Parser)]
#[command(name = "mlforge", version)]
struct Cli {
    /// Worker threads for label-parallel fits, folds and grid cells.
    #[arg(long, global = true, env = "MLFORGE_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Only print warnings and errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (.arff, otherwise CSV with a header row).
    pub dataset: PathBuf,
    /// Label columns: `last:K` or a comma-separated list of names.
    #[arg(long)]
    pub labels: String,
    /// Keep constant attributes instead of dropping them.
    #[arg(long)]
    pub keep_constant: bool,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// BR, CC, NST, DBR or STA.
    #[arg(long, default_value = "BR")]
    pub method: String,
    /// Base learner, e.g. `logistic` or `tree:max_depth=4,min_split=5`.
    #[arg(long, default_value = "logistic")]
    pub base: String,
    /// Meta-level learner for DBR and STA (defaults to the base learner).
    #[arg(long)]
    pub meta: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Folds of the internal cross-fitting used by NST and STA.
    #[arg(long, default_value_t = 2)]
    pub internal_folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop labels with prevalence below this value before fitting.
    #[arg(long, default_value_t = 0.0)]
    pub min_prevalence: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print size and label statistics of a dataset.
    Stats {
        #[command(flatten)]
        data: DataArgs,
        /// Report the labels this prevalence threshold would remove.
        #[arg(long, default_value_t = 0.02)]
        min_prevalence: f64,
    },
    /// Fit a multilabel model and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        /// CC/NST chain order as comma-separated label indices (default: identity).
        #[arg(long)]
        order: Option<String>,
        /// Output model file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Predict a dataset with a saved model and write a prediction file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Dataset file; label columns named as in the model are kept as truth.
        dataset: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score a prediction file.
    Eval {
        /// Prediction file written by `predict`.
        predictions: PathBuf,
        /// Dataset supplying the truth when the prediction file has none.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Label columns of the truth dataset (default: the prediction label names).
        #[arg(long)]
        labels: Option<String>,
        /// Comma-separated measures (default: all six).
        #[arg(long)]
        measures: Option<String>,
        /// `strict` or `skip` handling of undefined per-instance precision.
        #[arg(long, default_value = "strict")]
        policy: String,
        /// Also print per-label acc, mmce and auc.
        #[arg(long)]
        per_label: bool,
    },
    /// Cross-validate one learner on one dataset.
    Resample {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        /// Number of folds.
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Chain orders for CC/NST: `identity` or `random` (fresh per fold).
        #[arg(long, default_value = "random")]
        chain_order: String,
        #[arg(long)]
        measures: Option<String>,
        #[arg(long, default_value = "strict")]
        policy: String,
        /// Write the full-precision long-format results here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a learner × dataset benchmark described by a config file.
    Bench {
        config: PathBuf,
        /// Directory for the per-measure tables and `long.csv`.
        #[arg(long, short, default_value = "bench-out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let workers = cli.workers.max(1);
    let outcome = match cli.command {
        Command::Stats { data, min_prevalence } => commands::stats(&data, min_prevalence),
        Command::Train {
            data,
            learner,
            order,
            out,
        } => commands::train(&data, &learner, order.as_deref(), &out, workers),
        Command::Predict { model, dataset, out } => commands::predict(&model, &dataset, &out),
        Command::Eval {
            predictions,
            truth,
            labels,
            measures,
            policy,
            per_label,
        } => commands::eval(&commands::EvalArgs {
            predictions,
            truth,
            labels,
            measures,
            policy,
            per_label,
        }),
        Command::Resample {
            data,
            learner,
            iters,
            chain_order,
            measures,
            policy,
            out,
        } => commands::resample(&commands::ResampleArgs {
            data,
            learner,
            iters,
            chain_order,
            measures,
            policy,
            out,
            workers,
        }),
        Command::Bench { config, out_dir } => commands::bench(&config, &out_dir, workers),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
