//! Episodic trading environment over a price series.
//!
//! States are sigmoid-squashed windows of consecutive close differences;
//! actions are hold / buy / sell executed against a FIFO ledger of open
//! purchases. A sell realizes `sale price − purchase price` against the
//! oldest open buy and earns the sign of that profit as reward; every
//! other step earns zero. Unrealized positions never count as profit.

use chrono::NaiveDate;
use ndarray::Array1;
use thiserror::Error;

use crate::market_data::PriceSeries;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("time index {t} out of range for series of length {len}")]
    BadIndex { t: usize, len: usize },
    #[error("series of length {len} too short for window size {window}")]
    TooShort { len: usize, window: usize },
    #[error("episode already finished at index {t}")]
    EpisodeFinished { t: usize },
}

/// The three trade actions. Index order is fixed: it is the Q-network
/// output order and the tie-break order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Hold = 0,
    Buy = 1,
    Sell = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Hold, Action::Buy, Action::Sell];
    /// Number of actions; also every Q-network's output dimension.
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Hold => "hold",
            Action::Buy => "buy",
            Action::Sell => "sell",
        }
    }

    /// Plot color convention: hold=red, buy=green, sell=blue.
    pub fn color(self) -> &'static str {
        match self {
            Action::Hold => "red",
            Action::Buy => "green",
            Action::Sell => "blue",
        }
    }
}

/// Feature vector fed to the Q-networks: `window_size` sigmoid-squashed
/// consecutive price differences ending at time index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub features: Array1<f64>,
    pub t: usize,
}

/// One executed step: what happened at `t`, as recorded in the ledger.
/// `action` is the action that actually executed — a sell against an
/// empty inventory degrades to a hold and is recorded as one.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeEvent {
    pub t: usize,
    pub date: NaiveDate,
    pub price: f64,
    pub action: Action,
    pub realized_profit: f64,
}

/// FIFO inventory of open purchase prices plus the full event log and
/// running totals for realized profit and reward.
#[derive(Debug, Clone, Default)]
pub struct TradeLedger {
    open_positions: std::collections::VecDeque<f64>,
    events: Vec<TradeEvent>,
    total_profit: f64,
    total_reward: f64,
}

impl TradeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open_positions(&self) -> usize {
        self.open_positions.len()
    }

    pub fn events(&self) -> &[TradeEvent] {
        &self.events
    }

    pub fn total_profit(&self) -> f64 {
        self.total_profit
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }
}

/// Outcome of a single environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: MarketState,
    pub reward: f64,
    pub done: bool,
    pub event: TradeEvent,
}

/// End-of-episode summary. Only realized profits count; open positions
/// are reported but contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub total_profit: f64,
    pub total_reward: f64,
    pub open_positions: usize,
    pub events: Vec<TradeEvent>,
}

/// Logistic squashing, 1/(1+e^(−x)). Saturates at the extremes instead of
/// overflowing.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// Largest f64 strictly below 1.0; keeps saturated features inside (0, 1).
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Builds the state at index `t`: sigmoids of the `window_size`
/// consecutive differences of the price window ending at `t`. Before the
/// series has a full window the window is left-padded by repeating the
/// first price, so early differences are zero and their features 0.5.
pub fn make_state(
    series: &PriceSeries,
    t: usize,
    window_size: usize,
) -> Result<MarketState, EnvError> {
    if t >= series.len() {
        return Err(EnvError::BadIndex {
            t,
            len: series.len(),
        });
    }
    let price = |i: isize| {
        if i < 0 {
            series.close(0)
        } else {
            series.close(i as usize)
        }
    };
    let start = t as isize - window_size as isize;
    let features = Array1::from_iter((0..window_size).map(|j| {
        let i = start + j as isize;
        let diff = price(i + 1) - price(i);
        sigmoid(diff).clamp(f64::MIN_POSITIVE, ONE_BELOW)
    }));
    Ok(MarketState { features, t })
}

/// Starts an episode: the state at `t = 0` and an empty ledger.
pub fn env_reset(
    series: &PriceSeries,
    window_size: usize,
) -> Result<(MarketState, TradeLedger), EnvError> {
    if series.len() <= window_size {
        return Err(EnvError::TooShort {
            len: series.len(),
            window: window_size,
        });
    }
    Ok((make_state(series, 0, window_size)?, TradeLedger::new()))
}

fn profit_sign(p: f64) -> f64 {
    if p > 0.0 {
        1.0
    } else if p < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Executes `action` at index `t` against the ledger and advances to
/// `t + 1`.
///
/// Buy pushes `close[t]` onto the open-position queue (reward 0). Sell
/// pops the oldest purchase `b`, realizes `close[t] − b` and rewards its
/// sign; selling with nothing open degrades to a hold. The episode is
/// done when `t + 1` is the final index.
pub fn env_step(
    series: &PriceSeries,
    ledger: &mut TradeLedger,
    t: usize,
    action: Action,
    window_size: usize,
) -> Result<StepOutcome, EnvError> {
    let last = series.len() - 1;
    if t >= last {
        return Err(EnvError::EpisodeFinished { t });
    }
    let price = series.close(t);
    let (executed, realized, reward) = match action {
        Action::Hold => (Action::Hold, 0.0, 0.0),
        Action::Buy => {
            ledger.open_positions.push_back(price);
            (Action::Buy, 0.0, 0.0)
        }
        Action::Sell => match ledger.open_positions.pop_front() {
            Some(bought) => {
                let profit = price - bought;
                (Action::Sell, profit, profit_sign(profit))
            }
            None => (Action::Hold, 0.0, 0.0),
        },
    };
    let event = TradeEvent {
        t,
        date: series.date(t),
        price,
        action: executed,
        realized_profit: realized,
    };
    ledger.total_profit += realized;
    ledger.total_reward += reward;
    ledger.events.push(event.clone());
    Ok(StepOutcome {
        next_state: make_state(series, t + 1, window_size)?,
        reward,
        done: t + 1 == last,
        event,
    })
}

/// Summarizes a finished episode: realized totals and the event log.
pub fn liquidation_report(ledger: &TradeLedger) -> EpisodeSummary {
    EpisodeSummary {
        total_profit: ledger.total_profit,
        total_reward: ledger.total_reward,
        open_positions: ledger.open_positions.len(),
        events: ledger.events.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(closes: &[f64]) -> PriceSeries {
        PriceSeries::from_closes("T", closes.to_vec()).unwrap()
    }

    #[test]
    fn sigmoid_midpoint_saturation_and_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1000.0) - 1.0).abs() < 1e-12);
        assert!(sigmoid(-1000.0).abs() < 1e-12);
        for x in [0.1, 0.5, 2.0, 17.3, 300.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-12);
        }
        assert!(sigmoid(1.0) > sigmoid(0.5));
    }

    #[test]
    fn constant_series_gives_all_half_features() {
        let s = series(&[100.0; 12]);
        for t in 0..12 {
            let state = make_state(&s, t, 5).unwrap();
            assert!(state.features.iter().all(|&f| f == 0.5));
        }
    }

    #[test]
    fn state_is_sigmoid_of_consecutive_differences() {
        let s = series(&[1.0, 2.0, 4.0]);
        let state = make_state(&s, 2, 2).unwrap();
        assert_eq!(state.features[0], sigmoid(1.0));
        assert_eq!(state.features[1], sigmoid(2.0));
    }

    #[test]
    fn early_states_are_left_padded_with_first_price() {
        // Window [5, 5, 5, 7] → differences [0, 0, 2].
        let s = series(&[5.0, 7.0]);
        let state = make_state(&s, 1, 3).unwrap();
        let expected = [0.5, 0.5, 1.0 / (1.0 + (-2.0f64).exp())];
        for (f, e) in state.features.iter().zip(expected) {
            assert_eq!(*f, e);
        }
    }

    #[test]
    fn make_state_rejects_out_of_range_index() {
        let s = series(&[1.0, 2.0]);
        assert!(matches!(
            make_state(&s, 2, 2),
            Err(EnvError::BadIndex { .. })
        ));
    }

    #[test]
    fn reset_gives_empty_ledger_and_needs_headroom() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        let (state, ledger) = env_reset(&s, 3).unwrap();
        assert_eq!(state.t, 0);
        assert_eq!(ledger.total_profit(), 0.0);
        assert_eq!(ledger.total_reward(), 0.0);
        assert_eq!(ledger.open_positions(), 0);
        assert!(matches!(
            env_reset(&series(&[1.0, 2.0, 3.0]), 3),
            Err(EnvError::TooShort { .. })
        ));
    }

    #[test]
    fn buy_then_sell_realizes_sale_minus_purchase() {
        let s = series(&[10.0, 15.0, 16.0]);
        let mut ledger = TradeLedger::new();
        env_step(&s, &mut ledger, 0, Action::Buy, 1).unwrap();
        let out = env_step(&s, &mut ledger, 1, Action::Sell, 1).unwrap();
        assert_eq!(out.event.realized_profit, 5.0);
        assert_eq!(out.reward, 1.0);
        assert_eq!(ledger.total_profit(), 5.0);
        assert!(out.done);
    }

    #[test]
    fn sells_match_buys_fifo() {
        let s = series(&[10.0, 12.0, 15.0, 11.0, 11.0]);
        let mut ledger = TradeLedger::new();
        env_step(&s, &mut ledger, 0, Action::Buy, 1).unwrap();
        env_step(&s, &mut ledger, 1, Action::Buy, 1).unwrap();
        let first = env_step(&s, &mut ledger, 2, Action::Sell, 1).unwrap();
        let second = env_step(&s, &mut ledger, 3, Action::Sell, 1).unwrap();
        assert_eq!(first.event.realized_profit, 5.0);
        assert_eq!(second.event.realized_profit, -1.0);
        assert_eq!(ledger.total_profit(), 4.0);
        assert_eq!(ledger.total_reward(), 0.0);
        assert_eq!(ledger.open_positions(), 0);
    }

    #[test]
    fn sell_on_empty_inventory_degrades_to_hold() {
        let s = series(&[10.0, 11.0]);
        let mut ledger = TradeLedger::new();
        let out = env_step(&s, &mut ledger, 0, Action::Sell, 1).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.event.action, Action::Hold);
        assert_eq!(out.event.realized_profit, 0.0);
        assert_eq!(ledger.total_profit(), 0.0);
    }

    #[test]
    fn stepping_past_the_end_is_an_error() {
        let s = series(&[10.0, 11.0]);
        let mut ledger = TradeLedger::new();
        env_step(&s, &mut ledger, 0, Action::Hold, 1).unwrap();
        assert!(matches!(
            env_step(&s, &mut ledger, 1, Action::Hold, 1),
            Err(EnvError::EpisodeFinished { .. })
        ));
    }

    #[test]
    fn no_trades_means_zero_totals_and_all_hold_events() {
        let s = series(&[10.0, 11.0, 12.0, 13.0]);
        let mut ledger = TradeLedger::new();
        for t in 0..3 {
            env_step(&s, &mut ledger, t, Action::Hold, 1).unwrap();
        }
        let summary = liquidation_report(&ledger);
        assert_eq!(summary.total_profit, 0.0);
        assert_eq!(summary.total_reward, 0.0);
        assert_eq!(summary.open_positions, 0);
        assert_eq!(summary.events.len(), 3);
        assert!(summary.events.iter().all(|e| e.action == Action::Hold));
    }

    #[test]
    fn unsold_buys_are_excluded_from_profit() {
        let s = series(&[10.0, 11.0, 12.0]);
        let mut ledger = TradeLedger::new();
        env_step(&s, &mut ledger, 0, Action::Buy, 1).unwrap();
        env_step(&s, &mut ledger, 1, Action::Hold, 1).unwrap();
        let summary = liquidation_report(&ledger);
        assert_eq!(summary.total_profit, 0.0);
        assert_eq!(summary.open_positions, 1);
    }

    /// Independent FIFO oracle: recompute realized profit from scratch
    /// given only prices and the attempted action sequence.
    fn fifo_oracle(closes: &[f64], actions: &[Action]) -> (f64, f64, usize) {
        let mut queue = std::collections::VecDeque::new();
        let (mut profit, mut reward) = (0.0f64, 0.0f64);
        for (t, action) in actions.iter().enumerate() {
            match action {
                Action::Hold => {}
                Action::Buy => queue.push_back(closes[t]),
                Action::Sell => {
                    if let Some(b) = queue.pop_front() {
                        let p = closes[t] - b;
                        profit += p;
                        reward += if p > 0.0 {
                            1.0
                        } else if p < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        (profit, reward, queue.len())
    }

    fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut p: f64 = rng.gen_range(50.0..150.0);
        (0..n)
            .map(|_| {
                p = (p + rng.gen_range(-5.0..5.0)).max(1.0);
                p
            })
            .collect()
    }

    #[test]
    fn ledger_matches_brute_force_fifo_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(3..60);
            let closes = random_walk(&mut rng, n);
            let s = series(&closes);
            let actions: Vec<Action> = (0..n - 1)
                .map(|_| Action::from_index(rng.gen_range(0..3)).unwrap())
                .collect();
            let mut ledger = TradeLedger::new();
            for (t, a) in actions.iter().enumerate() {
                env_step(&s, &mut ledger, t, *a, 2).unwrap();
            }
            let (profit, reward, open) = fifo_oracle(&closes, &actions);
            assert_eq!(ledger.total_profit(), profit);
            assert_eq!(ledger.total_reward(), reward);
            assert_eq!(ledger.open_positions(), open);
            let from_events: f64 = ledger.events().iter().map(|e| e.realized_profit).sum();
            assert_eq!(ledger.total_profit(), from_events);
        }
    }

    #[test]
    fn replaying_recorded_actions_reproduces_the_summary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let closes = random_walk(&mut rng, 40);
        let s = series(&closes);
        let actions: Vec<Action> = (0..39)
            .map(|_| Action::from_index(rng.gen_range(0..3)).unwrap())
            .collect();
        let run = |actions: &[Action]| {
            let mut ledger = TradeLedger::new();
            for (t, a) in actions.iter().enumerate() {
                env_step(&s, &mut ledger, t, *a, 4).unwrap();
            }
            liquidation_report(&ledger)
        };
        assert_eq!(run(&actions), run(&actions));
    }

    #[test]
    fn features_stay_strictly_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.gen_range(2..50);
            // Include violent jumps so the sigmoid saturates.
            let closes: Vec<f64> = (0..n)
                .map(|_| 10f64.powf(rng.gen_range(-3.0..8.0)))
                .collect();
            let s = series(&closes);
            for t in 0..n {
                let state = make_state(&s, t, 6).unwrap();
                assert!(state.features.iter().all(|&f| f > 0.0 && f < 1.0));
            }
        }
    }

    #[test]
    fn single_trade_reward_sign_tracks_price_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let buy = rng.gen_range(1.0..100.0);
            let sell = rng.gen_range(1.0..100.0);
            let s = series(&[buy, sell, sell]);
            let mut ledger = TradeLedger::new();
            env_step(&s, &mut ledger, 0, Action::Buy, 1).unwrap();
            let out = env_step(&s, &mut ledger, 1, Action::Sell, 1).unwrap();
            let diff = sell - buy;
            let expected = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            assert_eq!(out.reward, expected);
        }
    }
}
