//! Thin command-line front end over the library: `train` runs an
//! experiment matrix, `evaluate` backtests a checkpoint against a CSV,
//! `report` re-emits summary tables from stored runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtrader::agent::{evaluate, AgentKind};
use qtrader::harness::{
    emit_summary_table, emit_trade_profile, load_report, run_experiments, DatasetSpec,
    ExperimentConfig, TRADES_FILE,
};
use qtrader::market_data::load_csv;
use qtrader::neural::checkpoint;

#[derive(Parser)]
#[command(
    name = "qtrader",
    about = "Train and backtest DQN, Double DQN and Dueling Double DQN trading agents on daily close-price CSVs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full (dataset x agent x seed) training matrix.
    Train(TrainArgs),
    /// Backtest a saved checkpoint against a price CSV.
    Evaluate(EvaluateArgs),
    /// Re-emit the summary table from a directory of stored runs.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price CSV; repeat for several datasets.
    #[arg(long = "data")]
    data: Vec<PathBuf>,
    /// Agent kind (dqn, ddqn, dueling); repeat for several. Defaults to
    /// all three when neither flags nor config name any.
    #[arg(long = "agent")]
    agents: Vec<AgentKind>,
    /// Training seed; repeat for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Episodes per run.
    #[arg(long)]
    episodes: Option<usize>,
    /// State window size (also the network input width).
    #[arg(long)]
    window: Option<usize>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV column holding the close price.
    #[arg(long)]
    close_column: Option<String>,
    /// CSV column holding the date.
    #[arg(long)]
    date_column: Option<String>,
    /// Concurrent runs.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Checkpoint written by a training run.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Price CSV to backtest against (used in full as the test series).
    #[arg(long)]
    data: PathBuf,
    /// Where to write the trade profile CSV (defaults to stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    close_column: Option<String>,
    #[arg(long)]
    date_column: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding stored runs.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Train(args) => train_command(args),
        Command::Evaluate(args) => evaluate_command(args),
        Command::Report(args) => report_command(args),
    }
    .unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}

fn train_command(args: TrainArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for path in args.data {
        config.datasets.push(DatasetSpec::from_path(path));
    }
    if !args.agents.is_empty() {
        config.agents = args.agents;
    } else if config.agents.is_empty() && args.config.is_none() {
        config.agents = AgentKind::ALL.to_vec();
    }
    if !args.seeds.is_empty() {
        config.seeds = args.seeds;
    }
    if let Some(episodes) = args.episodes {
        config.hyperparams.episodes = episodes;
    }
    if let Some(window) = args.window {
        config.hyperparams.window_size = window;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(close) = args.close_column {
        config.columns.close = close;
    }
    if let Some(date) = args.date_column {
        config.columns.date = date;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }

    let report = run_experiments(&config)?;
    let (text, _) = emit_summary_table(&report);
    print!("{text}");
    println!("artifacts written to {}", config.output_dir.display());
    for run in report.runs.iter().filter(|r| !r.succeeded()) {
        eprintln!(
            "run {} {} seed {} failed: {}",
            run.symbol,
            run.agent,
            run.seed,
            run.error.as_deref().unwrap_or("unknown")
        );
    }
    Ok(if report.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn evaluate_command(args: EvaluateArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let params = checkpoint::load(&args.checkpoint)?;
    let close = args.close_column.as_deref().unwrap_or("Close");
    let date = args.date_column.as_deref().unwrap_or("Date");
    let loaded = load_csv(&args.data, close, date, "%Y-%m-%d")?;
    if loaded.skipped_rows > 0 {
        eprintln!("skipped {} unparseable rows", loaded.skipped_rows);
    }
    let eval = evaluate(&loaded.series, &params)?;
    println!(
        "symbol={} steps={} test_rewards={} test_profit={} open_positions={}",
        loaded.series.symbol(),
        eval.events.len(),
        eval.total_reward,
        eval.total_profit,
        eval.open_positions
    );
    if let Some(out) = args.out {
        let path = if out.is_dir() { out.join(TRADES_FILE) } else { out };
        std::fs::write(&path, emit_trade_profile(&eval.events, &loaded.series))?;
        println!("trade profile written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn report_command(args: ReportArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let report = load_report(&args.out)?;
    let (text, csv) = emit_summary_table(&report);
    print!("{text}");
    std::fs::write(args.out.join("summary.csv"), csv)?;
    Ok(if report.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
