//! `gnnbench`: prepare datasets, train single models, run benchmarks and
//! grid searches, and regenerate reports.

mod commands;
mod error;
mod overrides;

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gnnbench",
    version,
    about = "Node-classification benchmark for graph neural networks"
)]
struct Cli {
    /// Worker threads for trial execution.
    #[arg(long, global = true, env = "GNNBENCH_WORKERS")]
    workers: Option<NonZeroUsize>,
    /// Experiment seed; overrides the one in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Standardize a raw dataset and write a container.
    Prepare(PrepareArgs),
    /// Train one model on one split and print the outcome as JSON.
    Train(TrainArgs),
    /// Run every dataset x model x split x init of a plan.
    Benchmark(BenchmarkArgs),
    /// Pick the best configuration of each model by validation accuracy.
    GridSearch(GridSearchArgs),
    /// Regenerate summaries from an existing results.csv.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct PrepareArgs {
    /// Raw edge-list bundle or container directory.
    #[arg(long)]
    input: PathBuf,
    /// Output container directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    min_class_count: usize,
    /// Dataset name stored in the container.
    #[arg(long)]
    name: Option<String>,
    /// Row-normalize features when they are fed to models.
    #[arg(long)]
    feature_norm: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSON with `dataset`, `model`, `train_config`, `split_sizes`,
    /// `split_id`, `init_id`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset container or bundle.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Model kind; starts from its reference configuration.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    split_id: Option<usize>,
    #[arg(long)]
    init_id: Option<usize>,
    /// Dotted-path override, e.g. `model.hidden_size=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Experiment plan JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep wall-clock times in results.csv.
    #[arg(long)]
    record_timing: bool,
    /// Dotted-path override, e.g. `train_config.patience=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct GridSearchArgs {
    /// Grid-search JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// results.csv to summarize.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `name=results.csv` of a split regime; two or more enable the
    /// split-sensitivity report.
    #[arg(long = "regime", value_name = "NAME=PATH")]
    regimes: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let workers = cli
        .workers
        .map(NonZeroUsize::get)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get));
    let result = match cli.command {
        Command::Prepare(a) => {
            commands::prepare(&a.input, &a.out, a.min_class_count, a.name.as_deref(), a.feature_norm)
        }
        Command::Train(a) => commands::train(commands::TrainInput {
            config: a.config.as_deref(),
            dataset: a.dataset.as_deref(),
            model: a.model.as_deref(),
            split_id: a.split_id,
            init_id: a.init_id,
            seed: cli.seed,
            overrides: &a.overrides,
        }),
        Command::Benchmark(a) => {
            commands::benchmark(&a.config, &a.out, workers, cli.seed, a.record_timing, &a.overrides)
        }
        Command::GridSearch(a) => commands::grid_search(&a.config, &a.out, workers, cli.seed, &a.overrides),
        Command::Report(a) => commands::report(&a.results, &a.out, &a.regimes),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
