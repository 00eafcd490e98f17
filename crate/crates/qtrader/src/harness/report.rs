//! Emitters for the summary table, per-episode metrics and the
//! time-market trade profile.
//!
//! CSV floats use the shortest round-trip decimal form so that reruns
//! are byte-identical and sums over a file reproduce the in-memory
//! totals exactly.

use std::fmt::Write as _;

use crate::env::TradeEvent;
use crate::market_data::PriceSeries;

use super::{RunRecord, RunReport};

/// Summary column names. The middle four match the reference report
/// tables; the trailing pair carries the cumulative convention.
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "Dataset",
    "Agent",
    "Seed",
    "Train Rewards",
    "Train Profit",
    "Test Rewards",
    "Test Profit",
    "Train Rewards (cumulative)",
    "Train Profit (cumulative)",
    "Status",
];

fn summary_cells(run: &RunRecord) -> [String; 10] {
    let num = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let m = run.metrics;
    [
        run.symbol.clone(),
        run.agent.to_string(),
        run.seed.to_string(),
        num(m.map(|m| m.train_rewards_last)),
        num(m.map(|m| m.train_profit_last)),
        num(m.map(|m| m.test_rewards)),
        num(m.map(|m| m.test_profit)),
        num(m.map(|m| m.train_rewards_cumulative)),
        num(m.map(|m| m.train_profit_cumulative)),
        run.error.clone().unwrap_or_else(|| "ok".to_string()),
    ]
}

/// Renders the report as a fixed-width text table and a CSV, one row per
/// (dataset, agent, seed). Training rewards and profit appear under both
/// conventions: last episode (the headline columns) and cumulative over
/// all episodes.
pub fn emit_summary_table(report: &RunReport) -> (String, String) {
    let rows: Vec<[String; 10]> = report.runs.iter().map(summary_cells).collect();

    let mut csv = String::new();
    csv.push_str(&SUMMARY_COLUMNS.join(","));
    csv.push('\n');
    for row in &rows {
        let escaped: Vec<String> = row
            .iter()
            .map(|cell| {
                if cell.contains([',', '"', '\n']) {
                    format!("\"{}\"", cell.replace('"', "\"\""))
                } else {
                    cell.clone()
                }
            })
            .collect();
        csv.push_str(&escaped.join(","));
        csv.push('\n');
    }

    // Fixed-width text rendering with rounded numerics for reading.
    let pretty: Vec<[String; 10]> = report
        .runs
        .iter()
        .map(|run| {
            let mut cells = summary_cells(run);
            for cell in cells.iter_mut().skip(3).take(6) {
                if let Ok(v) = cell.parse::<f64>() {
                    *cell = format!("{v:.2}");
                }
            }
            cells
        })
        .collect();
    let mut widths: Vec<usize> = SUMMARY_COLUMNS.iter().map(|c| c.len()).collect();
    for row in &pretty {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut text = String::new();
    let write_row = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        out.push_str(&line.join("  "));
        out.push('\n');
    };
    let header: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    write_row(&mut text, &header);
    let rule_len = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    text.push_str(&"-".repeat(rule_len));
    text.push('\n');
    for row in &pretty {
        write_row(&mut text, row);
    }
    (text, csv)
}

/// Per-episode training metrics as CSV.
pub fn write_metrics_csv(episodes: &[crate::agent::EpisodeMetrics]) -> String {
    let mut out = String::from("episode,total_reward,total_profit,mean_loss,epsilon_end\n");
    for e in episodes {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.episode, e.total_reward, e.total_profit, e.mean_loss, e.epsilon_end
        )
        .unwrap();
    }
    out
}

/// The time-market profile of an evaluation pass: one row per step with
/// the close price, the executed action (as index, name and plot color)
/// and the realized profit. Summing the last column reproduces the
/// run's test profit exactly.
pub fn emit_trade_profile(events: &[TradeEvent], series: &PriceSeries) -> String {
    let mut out = String::from("t,date,close,action,action_name,action_color,realized_profit\n");
    for e in events {
        debug_assert_eq!(series.close(e.t), e.price);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.t,
            e.date.format(crate::market_data::DEFAULT_DATE_FORMAT),
            e.price,
            e.action.index(),
            e.action.name(),
            e.action.color(),
            e.realized_profit
        )
        .unwrap();
    }
    out
}
