//! Walks a scripted hold/buy/sell sequence through the trading
//! environment and prints the FIFO ledger accounting plus the
//! time-market profile CSV that the harness writes for every run.
//!
//!     cargo run --example trade_ledger

use qtrader::env::{env_reset, env_step, liquidation_report, Action};
use qtrader::harness::emit_trade_profile;
use qtrader::market_data::PriceSeries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = PriceSeries::from_closes(
        "DEMO",
        vec![10.0, 12.0, 15.0, 11.0, 9.0, 13.0, 14.0, 8.0, 16.0],
    )?;
    // Two overlapping positions, one sell on empty inventory (degrades
    // to hold), one position left open at the end.
    let script = [
        Action::Sell, // nothing to sell yet -> recorded as hold
        Action::Buy,  // open 12
        Action::Buy,  // open 15
        Action::Sell, // close 12 at 11 -> -1
        Action::Hold,
        Action::Sell, // close 15 at 13 -> -2
        Action::Buy,  // open 14
        Action::Hold,
    ];

    let window = 3;
    let (_, mut ledger) = env_reset(&series, window)?;
    println!("t  price  attempted  executed  reward  realized  open");
    for (t, action) in script.into_iter().enumerate() {
        let out = env_step(&series, &mut ledger, t, action, window)?;
        println!(
            "{t}  {:>5}  {:<9}  {:<8}  {:>6}  {:>8}  {:>4}",
            out.event.price,
            action.name(),
            out.event.action.name(),
            out.reward,
            out.event.realized_profit,
            ledger.open_positions(),
        );
    }

    let summary = liquidation_report(&ledger);
    println!(
        "\nrealized profit {} over {} events, reward {}, {} position(s) still open (excluded from profit)",
        summary.total_profit,
        summary.events.len(),
        summary.total_reward,
        summary.open_positions
    );

    println!("\ntime-market profile (hold=red, buy=green, sell=blue):");
    print!("{}", emit_trade_profile(&summary.events, &series));
    Ok(())
}
