//! Saves a trained network to the versioned JSON checkpoint format and
//! loads it back, demonstrating the bit-exact round trip the `evaluate`
//! subcommand relies on.
//!
//!     cargo run --release --example checkpoint_roundtrip

use qtrader::agent::{evaluate, train, AgentKind, Hyperparams};
use qtrader::market_data::PriceSeries;
use qtrader::neural::checkpoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = PriceSeries::sawtooth("SAW", 200, 20, 10.0, 100.0)?;
    let hp = Hyperparams {
        window_size: 12,
        batch_size: 16,
        episodes: 3,
        ..Hyperparams::default()
    };
    let trained = train(&series, AgentKind::DuelingDdqn, &hp, 42)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("checkpoint.json");
    checkpoint::save(&path, &trained.params)?;
    let loaded = checkpoint::load(&path)?;

    let identical = trained
        .params
        .layers()
        .zip(loaded.layers())
        .all(|(a, b)| {
            a.weights
                .iter()
                .zip(b.weights.iter())
                .chain(a.biases.iter().zip(b.biases.iter()))
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
    println!(
        "saved {} parameters ({} bytes) and reloaded: bit-exact = {identical}",
        trained.params.num_params(),
        std::fs::metadata(&path)?.len()
    );

    let before = evaluate(&series, &trained.params)?;
    let after = evaluate(&series, &loaded)?;
    println!(
        "backtest through original vs reloaded network: profit {} vs {}, identical events = {}",
        before.total_profit,
        after.total_profit,
        before.events == after.events
    );
    Ok(())
}
