//! Exact backpropagation of the MSE loss through plain and dueling nets.
//!
//! Only the taken action's output carries error; the dueling head routes
//! that error into both streams according to the aggregation rule
//! (max-subtraction flows through the argmax advantage, mean-subtraction
//! spreads −1/K over every advantage output).

use ndarray::{Array2, Axis};

use super::{argmax, mse_loss, Aggregation, Dense, Head, NetworkParams, NeuralError};

/// Gradients with exactly the same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub trunk: Vec<Dense>,
    pub value: Vec<Dense>,
    pub advantage: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        let zero = |layers: &[Dense]| {
            layers
                .iter()
                .map(|d| Dense::zeros(d.weights.nrows(), d.weights.ncols()))
                .collect::<Vec<_>>()
        };
        Self {
            trunk: zero(&params.trunk),
            value: zero(&params.value),
            advantage: zero(&params.advantage),
        }
    }

    /// Layers in the same fixed order as [`NetworkParams::layers`].
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk
            .iter()
            .chain(self.value.iter())
            .chain(self.advantage.iter())
    }
}

/// Backpropagates `delta` (d loss / d stack output) through a dense
/// stack, returning per-layer gradients and d loss / d stack input.
fn backprop_stack(
    layers: &[Dense],
    input: &Array2<f64>,
    acts: &[Array2<f64>],
    mut delta: Array2<f64>,
    last_is_linear: bool,
) -> (Vec<Dense>, Array2<f64>) {
    let n = layers.len();
    let mut grads: Vec<Dense> = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let is_linear = last_is_linear && i + 1 == n;
        if !is_linear {
            // ReLU derivative: the post-activation is positive iff the
            // pre-activation was.
            delta.zip_mut_with(&acts[i], |d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
        }
        let prev = if i == 0 { input } else { &acts[i - 1] };
        let gw = prev.t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        delta = delta.dot(&layers[i].weights.t());
        grads.push(Dense::new(gw, gb));
    }
    grads.reverse();
    (grads, delta)
}

/// Exact gradients of the batch MSE loss with respect to every
/// parameter, plus the loss itself.
///
/// `actions[i]` is the output index whose Q-value is regressed toward
/// `targets[i]`; all other outputs receive zero error.
pub fn backward(
    params: &NetworkParams,
    states: &Array2<f64>,
    actions: &[usize],
    targets: &[f64],
) -> Result<(Gradients, f64), NeuralError> {
    let batch = states.nrows();
    if batch == 0 {
        return Err(NeuralError::EmptyBatch);
    }
    if actions.len() != batch || targets.len() != batch {
        return Err(NeuralError::ShapeMismatch(format!(
            "batch of {batch} states with {} actions and {} targets",
            actions.len(),
            targets.len()
        )));
    }
    let k = params.spec.output_dim;
    if let Some(&a) = actions.iter().find(|&&a| a >= k) {
        return Err(NeuralError::ShapeMismatch(format!(
            "action index {a} out of range for {k} outputs"
        )));
    }

    let trace = params.forward_trace(states)?;
    let predicted: Vec<f64> = (0..batch).map(|i| trace.q[[i, actions[i]]]).collect();
    let loss = mse_loss(&predicted, targets)?;

    // d loss / d q: only the taken action's output carries error.
    let mut delta_q = Array2::zeros((batch, k));
    for i in 0..batch {
        delta_q[[i, actions[i]]] = 2.0 * (predicted[i] - targets[i]) / batch as f64;
    }

    let grads = match params.spec.head {
        Head::Plain => {
            let (trunk, _) = backprop_stack(&params.trunk, states, &trace.trunk, delta_q, true);
            Gradients {
                trunk,
                value: Vec::new(),
                advantage: Vec::new(),
            }
        }
        Head::Dueling(aggregation) => {
            let a_out = trace.advantage.last().expect("advantage stream output");
            let mut delta_a = delta_q.clone();
            let mut delta_v = Array2::zeros((batch, 1));
            for i in 0..batch {
                let row_sum: f64 = delta_q.row(i).sum();
                delta_v[[i, 0]] = row_sum;
                match aggregation {
                    Aggregation::Naive => {}
                    Aggregation::MeanSubtract => {
                        let spread = row_sum / k as f64;
                        for j in 0..k {
                            delta_a[[i, j]] -= spread;
                        }
                    }
                    Aggregation::MaxSubtract => {
                        let m = argmax(a_out.row(i).as_slice().unwrap());
                        delta_a[[i, m]] -= row_sum;
                    }
                }
            }
            let trunk_out = trace.trunk.last().unwrap_or(states);
            let (value, d_from_v) =
                backprop_stack(&params.value, trunk_out, &trace.value, delta_v, true);
            let (advantage, d_from_a) =
                backprop_stack(&params.advantage, trunk_out, &trace.advantage, delta_a, true);
            let (trunk, _) = backprop_stack(
                &params.trunk,
                states,
                &trace.trunk,
                d_from_v + d_from_a,
                false,
            );
            Gradients {
                trunk,
                value,
                advantage,
            }
        }
    };
    Ok((grads, loss))
}
