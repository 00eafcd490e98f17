//! Value-based deep reinforcement learning for daily stock trading.
//!
//! The crate trains and backtests three agents — DQN, Double DQN and
//! Dueling Double DQN — on daily close-price series. A price series is
//! turned into an episodic environment ([`mod@env`]) whose states are
//! sigmoid-squashed windows of consecutive price differences; the agent
//! holds, buys or sells against a FIFO trade ledger and is rewarded with
//! the sign of each realized profit. Q-networks are small dense nets with
//! exact hand-rolled backpropagation and Adam updates ([`neural`]), so
//! every gradient can be checked against finite differences.
//!
//! Layout:
//!
//! * [`market_data`] — CSV ingestion, validation, chronological splits.
//! * [`mod@env`] — state featurization, trade execution, reward and ledger.
//! * [`neural`] — dense Q-networks (plain and dueling heads), MSE loss,
//!   backprop, Adam, parameter checkpoints.
//! * [`agent`] — replay buffer, epsilon-greedy policy, the three target
//!   rules, and the train / evaluate loops.
//! * [`harness`] — experiment matrix runner, config files, summary tables
//!   and trade-profile exports.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `qtrader` binary exposes the same machinery as `train`, `evaluate` and
//! `report` subcommands.

pub mod agent;
pub mod env;
pub mod harness;
pub mod market_data;
pub mod neural;
