//! End-to-end single run: load (or synthesize) a daily close series,
//! split it chronologically, train a DQN agent and backtest the greedy
//! policy on the held-out half.
//!
//!     cargo run --release --example train_and_backtest [prices.csv]
//!
//! With no argument a 400-day sawtooth is synthesized. Hyperparameters
//! are scaled down from the full protocol so the demo finishes in a few
//! seconds; the `qtrader train` binary runs the real thing.

use qtrader::agent::{evaluate, train, AgentKind, Hyperparams};
use qtrader::env::Action;
use qtrader::market_data::{load_csv, split_series, PriceSeries, SplitSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = match std::env::args().nth(1) {
        Some(path) => {
            let loaded = load_csv(&path, "Close", "Date", "%Y-%m-%d")?;
            println!(
                "loaded {} rows from {path} ({} skipped)",
                loaded.series.len(),
                loaded.skipped_rows
            );
            loaded.series
        }
        None => {
            println!("no CSV given, synthesizing a 400-day sawtooth");
            PriceSeries::sawtooth("SAW", 400, 20, 10.0, 100.0)?
        }
    };

    let hp = Hyperparams {
        window_size: 16,
        batch_size: 32,
        episodes: 10,
        ..Hyperparams::default()
    };
    let (train_half, test_half) = split_series(&series, &SplitSpec::default(), hp.window_size)?;
    println!(
        "train {} rows ({}..{}), test {} rows ({}..{})",
        train_half.len(),
        train_half.date(0),
        train_half.date(train_half.len() - 1),
        test_half.len(),
        test_half.date(0),
        test_half.date(test_half.len() - 1),
    );

    let out = train(&train_half, AgentKind::Dqn, &hp, 1)?;
    println!("\nepisode  reward  profit      mean_loss  epsilon");
    for e in &out.episodes {
        println!(
            "{:>7}  {:>6.0}  {:>9.2}  {:>9.5}  {:.4}",
            e.episode, e.total_reward, e.total_profit, e.mean_loss, e.epsilon_end
        );
    }

    let eval = evaluate(&test_half, &out.params)?;
    let buys = eval.events.iter().filter(|e| e.action == Action::Buy).count();
    let sells = eval.events.iter().filter(|e| e.action == Action::Sell).count();
    println!(
        "\nbacktest: reward {:.0}, realized profit {:.2}, {buys} buys / {sells} sells, {} still open",
        eval.total_reward, eval.total_profit, eval.open_positions
    );
    Ok(())
}
