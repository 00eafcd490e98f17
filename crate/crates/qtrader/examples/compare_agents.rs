//! Runs the full experiment matrix — DQN, Double DQN and Dueling Double
//! DQN on the same dataset — through the harness and prints the summary
//! table, exactly as `qtrader train` would.
//!
//!     cargo run --release --example compare_agents

use qtrader::agent::{AgentKind, Hyperparams};
use qtrader::harness::{emit_summary_table, run_experiments, DatasetSpec, ExperimentConfig};
use qtrader::market_data::PriceSeries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let csv = dir.path().join("SAW.csv");
    PriceSeries::sawtooth("SAW", 300, 20, 10.0, 100.0)?.write_csv(&csv)?;

    let config = ExperimentConfig {
        output_dir: dir.path().join("runs"),
        workers: 2,
        agents: AgentKind::ALL.to_vec(),
        seeds: vec![1, 2],
        datasets: vec![DatasetSpec::from_path(&csv)],
        hyperparams: Hyperparams {
            window_size: 16,
            batch_size: 32,
            episodes: 6,
            ..Hyperparams::default()
        },
        ..ExperimentConfig::default()
    };

    let report = run_experiments(&config)?;
    let (text, _) = emit_summary_table(&report);
    print!("{text}");
    println!(
        "\n{} runs, artifacts under {} (metrics.csv, trades.csv, checkpoint.json, manifest.json per run)",
        report.runs.len(),
        config.output_dir.display()
    );
    Ok(())
}
