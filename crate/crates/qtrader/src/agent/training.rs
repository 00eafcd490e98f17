//! The episode loops: seeded training with replay updates, and the
//! greedy evaluation pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    double_dqn_target, dqn_target, select_action, state_matrix, AgentError, AgentKind,
    Hyperparams, ReplayBuffer, Transition,
};
use crate::env::{env_reset, env_step, liquidation_report, Action, MarketState, TradeEvent};
use crate::market_data::PriceSeries;
use crate::neural::{adam_step, argmax, backward, AdamState, NetworkParams};

/// Per-episode training metrics, one row of the metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub total_reward: f64,
    pub total_profit: f64,
    /// Mean replay-update loss over the episode; 0 when the buffer never
    /// filled up.
    pub mean_loss: f64,
    pub epsilon_end: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: NetworkParams,
    pub episodes: Vec<EpisodeMetrics>,
}

impl TrainOutput {
    pub fn last_episode(&self) -> Option<&EpisodeMetrics> {
        self.episodes.last()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_reward).sum()
    }

    pub fn cumulative_profit(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_profit).sum()
    }
}

/// Result of a greedy evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub total_reward: f64,
    pub total_profit: f64,
    pub open_positions: usize,
    pub events: Vec<TradeEvent>,
}

/// A learning agent: main and target networks, optimizer, replay buffer
/// and the annealed exploration rate, all driven by one seeded RNG.
pub struct Agent {
    kind: AgentKind,
    hp: Hyperparams,
    main: NetworkParams,
    target: NetworkParams,
    adam: AdamState,
    buffer: ReplayBuffer,
    epsilon: f64,
    updates: u64,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(kind: AgentKind, hp: Hyperparams, seed: u64) -> Result<Self, AgentError> {
        hp.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let main = NetworkParams::init(kind.network_spec(hp.window_size), &mut rng)?;
        let target = main.clone();
        let adam = AdamState::new(&main, hp.learning_rate);
        let buffer = ReplayBuffer::new(hp.replay_capacity);
        let epsilon = hp.epsilon_start;
        Ok(Self {
            kind,
            hp,
            main,
            target,
            adam,
            buffer,
            epsilon,
            updates: 0,
            rng,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Replay updates performed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn main(&self) -> &NetworkParams {
        &self.main
    }

    pub fn target(&self) -> &NetworkParams {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Epsilon-greedy action under the current exploration rate.
    pub fn act(&mut self, state: &MarketState) -> Result<Action, AgentError> {
        let q = self.main.forward(&state.features)?;
        Ok(select_action(
            q.as_slice().expect("contiguous q-values"),
            self.epsilon,
            &mut self.rng,
        ))
    }

    pub fn observe(&mut self, transition: Transition) {
        self.buffer.push(transition);
    }

    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.hp.batch_size
    }

    /// One learning step: sample a batch, build targets per the agent
    /// kind, backpropagate, Adam-update the main net, decay epsilon once
    /// and hard-copy the target net every `target_sync_interval` updates.
    /// Returns the batch loss.
    pub fn replay_update(&mut self) -> Result<f64, AgentError> {
        let batch = self.buffer.sample(self.hp.batch_size, &mut self.rng)?;
        let targets = if self.kind.uses_double_target() {
            double_dqn_target(&batch, &self.main, &self.target, self.hp.gamma)?
        } else {
            dqn_target(&batch, &self.target, self.hp.gamma)?
        };
        let states = state_matrix(&batch);
        let actions: Vec<usize> = batch.iter().map(|t| t.action.index()).collect();
        let (grads, loss) = backward(&self.main, &states, &actions, &targets)?;
        adam_step(&mut self.main, &grads, &mut self.adam);
        self.epsilon = (self.epsilon * self.hp.epsilon_decay).max(self.hp.epsilon_min);
        self.updates += 1;
        if self.updates % self.hp.target_sync_interval == 0 {
            self.target = self.main.clone();
        }
        Ok(loss)
    }

    fn into_main(self) -> NetworkParams {
        self.main
    }
}

/// Trains an agent for `hp.episodes` full passes over the series.
///
/// Each step builds the state, selects an action under the current
/// epsilon, executes it, stores the transition and runs one replay
/// update once the buffer holds a batch. Fully deterministic given the
/// seed.
pub fn train(
    series: &PriceSeries,
    kind: AgentKind,
    hp: &Hyperparams,
    seed: u64,
) -> Result<TrainOutput, AgentError> {
    let mut agent = Agent::new(kind, hp.clone(), seed)?;
    let mut episodes = Vec::with_capacity(hp.episodes);
    for episode in 0..hp.episodes {
        let (mut state, mut ledger) = env_reset(series, hp.window_size)?;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for t in 0..series.len() - 1 {
            let action = agent.act(&state)?;
            let outcome = env_step(series, &mut ledger, t, action, hp.window_size)?;
            agent.observe(Transition {
                state,
                action,
                reward: outcome.reward,
                next_state: outcome.next_state.clone(),
                done: outcome.done,
            });
            state = outcome.next_state;
            if agent.ready() {
                loss_sum += agent.replay_update()?;
                loss_count += 1;
            }
        }
        let mean_loss = if loss_count == 0 {
            0.0
        } else {
            loss_sum / loss_count as f64
        };
        episodes.push(EpisodeMetrics {
            episode,
            total_reward: ledger.total_reward(),
            total_profit: ledger.total_profit(),
            mean_loss,
            epsilon_end: agent.epsilon(),
        });
    }
    Ok(TrainOutput {
        params: agent.into_main(),
        episodes,
    })
}

/// Greedy evaluation: a single pass with epsilon = 0, no learning, no
/// buffer writes. The window size comes from the network's input width.
pub fn evaluate(series: &PriceSeries, params: &NetworkParams) -> Result<EvalOutput, AgentError> {
    let window = params.spec().input_dim;
    let (mut state, mut ledger) = env_reset(series, window)?;
    for t in 0..series.len() - 1 {
        let q = params.forward(&state.features)?;
        let action = Action::from_index(argmax(q.as_slice().expect("contiguous q-values")))
            .expect("argmax in range");
        let outcome = env_step(series, &mut ledger, t, action, window)?;
        state = outcome.next_state;
    }
    let summary = liquidation_report(&ledger);
    Ok(EvalOutput {
        total_reward: summary.total_reward,
        total_profit: summary.total_profit,
        open_positions: summary.open_positions,
        events: summary.events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Dense, NetworkSpec};
    use ndarray::{Array1, Array2};

    fn tiny_hp() -> Hyperparams {
        Hyperparams {
            window_size: 4,
            batch_size: 8,
            episodes: 3,
            replay_capacity: 512,
            target_sync_interval: 10,
            ..Hyperparams::default()
        }
    }

    fn tiny_series(n: usize) -> PriceSeries {
        PriceSeries::sawtooth("tiny", n, 10, 5.0, 50.0).unwrap()
    }

    #[test]
    fn same_seed_reproduces_the_metrics_exactly() {
        let series = tiny_series(80);
        let a = train(&series, AgentKind::Dqn, &tiny_hp(), 7).unwrap();
        let b = train(&series, AgentKind::Dqn, &tiny_hp(), 7).unwrap();
        assert_eq!(a.episodes, b.episodes);
        assert_eq!(a.params, b.params);
        let c = train(&series, AgentKind::Dqn, &tiny_hp(), 8).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn zero_episodes_returns_initialized_params_and_no_metrics() {
        let series = tiny_series(80);
        let hp = Hyperparams {
            episodes: 0,
            ..tiny_hp()
        };
        let out = train(&series, AgentKind::DuelingDdqn, &hp, 5).unwrap();
        assert!(out.episodes.is_empty());
        let fresh = Agent::new(AgentKind::DuelingDdqn, hp, 5).unwrap();
        assert_eq!(&out.params, fresh.main());
    }

    #[test]
    fn all_agent_kinds_train_end_to_end() {
        let series = tiny_series(60);
        let hp = Hyperparams {
            episodes: 2,
            ..tiny_hp()
        };
        for kind in AgentKind::ALL {
            let out = train(&series, kind, &hp, 3).unwrap();
            assert_eq!(out.episodes.len(), 2);
            let eval = evaluate(&series, &out.params).unwrap();
            assert_eq!(eval.events.len(), series.len() - 1);
        }
    }

    #[test]
    fn epsilon_follows_the_decay_schedule_with_floor() {
        let mut agent = Agent::new(AgentKind::Dqn, tiny_hp(), 1).unwrap();
        let series = tiny_series(80);
        let (mut state, mut ledger) = env_reset(&series, 4).unwrap();
        // Fill the buffer without learning.
        for t in 0..series.len() - 1 {
            let action = agent.act(&state).unwrap();
            let outcome = env_step(&series, &mut ledger, t, action, 4).unwrap();
            agent.observe(Transition {
                state,
                action,
                reward: outcome.reward,
                next_state: outcome.next_state.clone(),
                done: outcome.done,
            });
            state = outcome.next_state;
        }
        assert_eq!(agent.epsilon(), 1.0);
        let mut last = 1.0;
        for k in 1..=600u32 {
            agent.replay_update().unwrap();
            let expected = 0.995f64.powi(k as i32).max(0.1);
            assert!(
                (agent.epsilon() - expected).abs() < 1e-12,
                "k={k}: {} vs {expected}",
                agent.epsilon()
            );
            assert!(agent.epsilon() <= last);
            last = agent.epsilon();
        }
        assert_eq!(agent.epsilon(), 0.1);
    }

    #[test]
    fn target_net_equals_main_net_right_after_a_sync() {
        let mut agent = Agent::new(AgentKind::DoubleDqn, tiny_hp(), 2).unwrap();
        let series = tiny_series(60);
        let (mut state, mut ledger) = env_reset(&series, 4).unwrap();
        for t in 0..series.len() - 1 {
            let action = agent.act(&state).unwrap();
            let outcome = env_step(&series, &mut ledger, t, action, 4).unwrap();
            agent.observe(Transition {
                state,
                action,
                reward: outcome.reward,
                next_state: outcome.next_state.clone(),
                done: outcome.done,
            });
            state = outcome.next_state;
        }
        for _ in 0..9 {
            agent.replay_update().unwrap();
            assert_ne!(agent.main(), agent.target());
        }
        agent.replay_update().unwrap(); // update 10 = sync interval
        assert_eq!(agent.main(), agent.target());
    }

    #[test]
    fn replay_update_with_perfect_predictions_is_a_no_op() {
        let mut agent = Agent::new(AgentKind::Dqn, tiny_hp(), 3).unwrap();
        // Terminal transitions whose reward equals the current
        // prediction: targets match, so the gradient is exactly zero.
        let features = Array1::from_elem(4, 0.5);
        let state = MarketState {
            features: features.clone(),
            t: 0,
        };
        let q = agent.main().forward(&features).unwrap();
        for _ in 0..8 {
            agent.observe(Transition {
                state: state.clone(),
                action: Action::Hold,
                reward: q[0],
                next_state: state.clone(),
                done: true,
            });
        }
        let before = agent.main().clone();
        let loss = agent.replay_update().unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(agent.main(), &before);
    }

    #[test]
    fn underfilled_buffer_refuses_to_update() {
        let mut agent = Agent::new(AgentKind::Dqn, tiny_hp(), 4).unwrap();
        assert!(!agent.ready());
        assert!(matches!(
            agent.replay_update(),
            Err(AgentError::Underfilled { .. })
        ));
    }

    #[test]
    fn evaluation_is_pure_and_repeatable() {
        let series = tiny_series(70);
        let out = train(&series, AgentKind::Dqn, &tiny_hp(), 11).unwrap();
        let a = evaluate(&series, &out.params).unwrap();
        let b = evaluate(&series, &out.params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_network_holds_everywhere_and_earns_nothing() {
        let window = 4;
        let params = NetworkParams::from_parts(
            NetworkSpec::plain(window, vec![], 3),
            vec![Dense::new(Array2::zeros((window, 3)), Array1::zeros(3))],
            vec![],
            vec![],
        )
        .unwrap();
        let series = tiny_series(40);
        let eval = evaluate(&series, &params).unwrap();
        assert_eq!(eval.total_profit, 0.0);
        assert_eq!(eval.total_reward, 0.0);
        assert!(eval.events.iter().all(|e| e.action == Action::Hold));
    }

    #[test]
    fn scripted_buy_first_sell_last_earns_the_price_difference() {
        let closes: Vec<f64> = (0..30).map(|i| 100.0 + i as f64).collect();
        let series = PriceSeries::from_closes("up", closes).unwrap();
        let window = 3;
        let (_, mut ledger) = env_reset(&series, window).unwrap();
        let last_step = series.len() - 2;
        for t in 0..=last_step {
            let action = if t == 0 {
                Action::Buy
            } else if t == last_step {
                Action::Sell
            } else {
                Action::Hold
            };
            env_step(&series, &mut ledger, t, action, window).unwrap();
        }
        assert_eq!(
            ledger.total_profit(),
            series.close(last_step) - series.close(0)
        );
        assert_eq!(ledger.total_reward(), 1.0);
    }
}
