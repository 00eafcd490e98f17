//! The reinforcement-learning core: hyperparameters, the epsilon-greedy
//! policy, the Q-learning target rules and (in submodules) the replay
//! buffer and the episode train/evaluate loops.

mod replay;
mod training;

pub use replay::ReplayBuffer;
pub use training::{evaluate, train, Agent, EpisodeMetrics, EvalOutput, TrainOutput};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, EnvError, MarketState};
use crate::neural::{argmax, Aggregation, NetworkParams, NetworkSpec, NeuralError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("replay buffer has {have} transitions, need {need} to sample")]
    Underfilled { have: usize, need: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Default hidden-layer widths of every agent's Q-network. For the
/// dueling agent the trunk is 64→32 and each stream gets the final
/// 8-unit layer.
pub const DEFAULT_HIDDEN_DIMS: [usize; 3] = [64, 32, 8];

/// Training hyperparameters. The defaults reproduce the reference
/// protocol: window 90, batch 64, 50 episodes, γ 0.95, ε annealed from
/// 1.0 to 0.1 by a factor 0.995 per replay update, Adam at 0.00025.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub window_size: usize,
    pub batch_size: usize,
    pub episodes: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub target_sync_interval: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            window_size: 90,
            batch_size: 64,
            episodes: 50,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_min: 0.1,
            epsilon_decay: 0.995,
            learning_rate: 0.00025,
            replay_capacity: 10_000,
            target_sync_interval: 100,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |msg: String| Err(AgentError::InvalidHyperparams(msg));
        if self.window_size == 0 {
            return fail("window_size must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} must lie in (0, 1)", self.gamma));
        }
        if !(self.epsilon_min > 0.0
            && self.epsilon_min <= self.epsilon_start
            && self.epsilon_start <= 1.0)
        {
            return fail(format!(
                "need 0 < epsilon_min ({}) <= epsilon_start ({}) <= 1",
                self.epsilon_min, self.epsilon_start
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return fail(format!("epsilon_decay {} must lie in (0, 1)", self.epsilon_decay));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if self.replay_capacity < self.batch_size {
            return fail(format!(
                "replay_capacity {} smaller than batch_size {}",
                self.replay_capacity, self.batch_size
            ));
        }
        if self.target_sync_interval == 0 {
            return fail("target_sync_interval must be positive".into());
        }
        Ok(())
    }
}

/// Which agent to train. The dueling agent uses a dueling network and
/// the double-DQN target rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "dqn")]
    Dqn,
    #[serde(rename = "ddqn")]
    DoubleDqn,
    #[serde(rename = "dueling")]
    DuelingDdqn,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Dqn, AgentKind::DoubleDqn, AgentKind::DuelingDdqn];

    /// Decouples action selection (main net) from valuation (target net).
    pub fn uses_double_target(self) -> bool {
        !matches!(self, AgentKind::Dqn)
    }

    pub fn network_spec(self, window_size: usize) -> NetworkSpec {
        let hidden = DEFAULT_HIDDEN_DIMS.to_vec();
        match self {
            AgentKind::Dqn | AgentKind::DoubleDqn => {
                NetworkSpec::plain(window_size, hidden, Action::COUNT)
            }
            AgentKind::DuelingDdqn => NetworkSpec::dueling(
                window_size,
                hidden,
                Action::COUNT,
                Aggregation::MeanSubtract,
            ),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AgentKind::Dqn => "dqn",
            AgentKind::DoubleDqn => "ddqn",
            AgentKind::DuelingDdqn => "dueling",
        };
        f.write_str(name)
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dqn" => Ok(AgentKind::Dqn),
            "ddqn" | "double-dqn" | "double_dqn" => Ok(AgentKind::DoubleDqn),
            "dueling" | "dueling-ddqn" | "dueling_ddqn" => Ok(AgentKind::DuelingDdqn),
            other => Err(format!(
                "unknown agent `{other}`, expected dqn, ddqn or dueling"
            )),
        }
    }
}

/// One replay record: what the agent chose in a state and what came of
/// it. `action` is the policy's choice; the ledger separately records
/// what actually executed.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: MarketState,
    pub action: Action,
    pub reward: f64,
    pub next_state: MarketState,
    pub done: bool,
}

/// Epsilon-greedy: with probability `epsilon` a uniformly random action,
/// otherwise the argmax of the Q-values with ties broken toward the
/// lowest action index.
pub fn select_action<R: Rng>(q_values: &[f64], epsilon: f64, rng: &mut R) -> Action {
    debug_assert_eq!(q_values.len(), Action::COUNT);
    if rng.gen::<f64>() < epsilon {
        Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap()
    } else {
        Action::from_index(argmax(q_values)).unwrap()
    }
}

fn next_state_matrix(batch: &[Transition]) -> Array2<f64> {
    let dim = batch[0].next_state.features.len();
    let mut m = Array2::zeros((batch.len(), dim));
    for (i, tr) in batch.iter().enumerate() {
        m.row_mut(i).assign(&tr.next_state.features);
    }
    m
}

pub(crate) fn state_matrix(batch: &[Transition]) -> Array2<f64> {
    let dim = batch[0].state.features.len();
    let mut m = Array2::zeros((batch.len(), dim));
    for (i, tr) in batch.iter().enumerate() {
        m.row_mut(i).assign(&tr.state.features);
    }
    m
}

/// Single-network rule: r when done, else r + γ·max over the target
/// net's Q-values at the next state.
pub fn dqn_target(
    batch: &[Transition],
    target: &NetworkParams,
    gamma: f64,
) -> Result<Vec<f64>, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let q_next = target.forward_batch(&next_state_matrix(batch))?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, tr)| {
            if tr.done {
                tr.reward
            } else {
                let row = q_next.row(i);
                tr.reward + gamma * row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            }
        })
        .collect())
}

/// Decoupled rule: the main net picks the next action (ties toward the
/// lowest index), the target net values it.
pub fn double_dqn_target(
    batch: &[Transition],
    main: &NetworkParams,
    target: &NetworkParams,
    gamma: f64,
) -> Result<Vec<f64>, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let next = next_state_matrix(batch);
    let q_main = main.forward_batch(&next)?;
    let q_target = target.forward_batch(&next)?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, tr)| {
            if tr.done {
                tr.reward
            } else {
                let best = argmax(q_main.row(i).as_slice().unwrap());
                tr.reward + gamma * q_target[[i, best]]
            }
        })
        .collect())
}
