//! Minimal dense Q-network stack with exact, hand-rolled gradients.
//!
//! Hidden layers are affine maps with rectified-linear activation, the
//! output layer is affine. A network carries either a plain head (the
//! trunk ends in the action-value outputs directly) or a dueling head:
//! the trunk feeds a scalar state-value stream and a per-action advantage
//! stream, recombined by one of three aggregations. Everything is 64-bit
//! so analytic gradients can be checked tightly against central finite
//! differences.

mod adam;
mod backprop;
pub mod checkpoint;

pub use adam::{adam_step, AdamState};
pub use backprop::{backward, Gradients};

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite parameter value")]
    NonFinite,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("unsupported checkpoint version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How the dueling head folds state-value `v` and advantages `a` into
/// Q-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Q = v + (a − max(a)). Pins max(Q) to v.
    MaxSubtract,
    /// Q = v + a. Not identifiable; kept for comparison.
    Naive,
    /// Q = v + (a − mean(a)). The stable default.
    MeanSubtract,
}

impl Aggregation {
    pub const ALL: [Aggregation; 3] = [
        Aggregation::MaxSubtract,
        Aggregation::Naive,
        Aggregation::MeanSubtract,
    ];
}

/// Network head: plain action-value outputs, or the two-stream dueling
/// architecture with its aggregation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Plain,
    Dueling(Aggregation),
}

/// Architecture description: layer widths plus the head kind.
///
/// For a dueling head the last hidden width is the per-stream hidden
/// layer; everything before it is the shared trunk. `(90, [64, 32, 8])`
/// therefore means trunk 90→64→32, value stream 32→8→1 and advantage
/// stream 32→8→K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub head: Head,
}

impl NetworkSpec {
    pub fn plain(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims,
            output_dim,
            head: Head::Plain,
        }
    }

    pub fn dueling(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        aggregation: Aggregation,
    ) -> Self {
        Self {
            input_dim,
            hidden_dims,
            output_dim,
            head: Head::Dueling(aggregation),
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NeuralError::InvalidSpec(
                "input and output dimensions must be positive".into(),
            ));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(NeuralError::InvalidSpec(
                "hidden dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    /// (in, out) pairs of the shared stack. Plain: hidden layers plus the
    /// output layer. Dueling: everything before the stream split.
    fn trunk_dims(&self) -> Vec<(usize, usize)> {
        match self.head {
            Head::Plain => {
                let widths: Vec<usize> = std::iter::once(self.input_dim)
                    .chain(self.hidden_dims.iter().copied())
                    .chain(std::iter::once(self.output_dim))
                    .collect();
                widths.windows(2).map(|w| (w[0], w[1])).collect()
            }
            Head::Dueling(_) => {
                let shared = self.hidden_dims.len().saturating_sub(1);
                let widths: Vec<usize> = std::iter::once(self.input_dim)
                    .chain(self.hidden_dims[..shared].iter().copied())
                    .collect();
                widths.windows(2).map(|w| (w[0], w[1])).collect()
            }
        }
    }

    /// Width of the tensor feeding the dueling streams.
    fn trunk_out_dim(&self) -> usize {
        match self.head {
            Head::Plain => self.output_dim,
            Head::Dueling(_) => {
                let shared = self.hidden_dims.len().saturating_sub(1);
                if shared == 0 {
                    self.input_dim
                } else {
                    self.hidden_dims[shared - 1]
                }
            }
        }
    }

    fn stream_dims(&self, out: usize) -> Vec<(usize, usize)> {
        match self.head {
            Head::Plain => Vec::new(),
            Head::Dueling(_) => match self.hidden_dims.last() {
                Some(&h) => vec![(self.trunk_out_dim(), h), (h, out)],
                None => vec![(self.trunk_out_dim(), out)],
            },
        }
    }

    fn value_dims(&self) -> Vec<(usize, usize)> {
        self.stream_dims(1)
    }

    fn advantage_dims(&self) -> Vec<(usize, usize)> {
        self.stream_dims(self.output_dim)
    }
}

/// One affine layer: `weights` is `in × out`, `biases` has length `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>) -> Self {
        Self { weights, biases }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Array2::zeros((input, output)),
            biases: Array1::zeros(output),
        }
    }

    fn init<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        // Fan-scaled uniform init, zero biases.
        let bound = (6.0 / (input + output) as f64).sqrt();
        let mut weights = Array2::zeros((input, output));
        for r in 0..input {
            for c in 0..output {
                weights[[r, c]] = rng.gen_range(-bound..bound);
            }
        }
        Self {
            weights,
            biases: Array1::zeros(output),
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.weights.nrows(), self.weights.ncols())
    }
}

/// All weights and biases of one Q-network, plain or dueling.
///
/// Target networks are plain `clone()`s: the copy is deep, so later
/// updates to the source leave it untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    spec: NetworkSpec,
    trunk: Vec<Dense>,
    value: Vec<Dense>,
    advantage: Vec<Dense>,
}

impl NetworkParams {
    /// Fan-in-scaled uniform initialization, deterministic given the RNG
    /// state. Biases start at exactly zero.
    pub fn init<R: Rng>(spec: NetworkSpec, rng: &mut R) -> Result<Self, NeuralError> {
        spec.validate()?;
        let make = |dims: &[(usize, usize)], rng: &mut R| {
            dims.iter()
                .map(|&(i, o)| Dense::init(i, o, rng))
                .collect::<Vec<_>>()
        };
        let trunk = make(&spec.trunk_dims(), rng);
        let value = make(&spec.value_dims(), rng);
        let advantage = make(&spec.advantage_dims(), rng);
        Ok(Self {
            spec,
            trunk,
            value,
            advantage,
        })
    }

    /// Assembles a network from explicit layers, validating shapes. Used
    /// for custom initialization schemes and hand-crafted test networks.
    pub fn from_parts(
        spec: NetworkSpec,
        trunk: Vec<Dense>,
        value: Vec<Dense>,
        advantage: Vec<Dense>,
    ) -> Result<Self, NeuralError> {
        spec.validate()?;
        let params = Self {
            spec,
            trunk,
            value,
            advantage,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// All layers in a fixed order: trunk, then value stream, then
    /// advantage stream.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk
            .iter()
            .chain(self.value.iter())
            .chain(self.advantage.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.trunk
            .iter_mut()
            .chain(self.value.iter_mut())
            .chain(self.advantage.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.layers()
            .map(|d| d.weights.len() + d.biases.len())
            .sum()
    }

    /// Checks layer shapes against the spec and that every entry is
    /// finite.
    pub fn validate(&self) -> Result<(), NeuralError> {
        let check = |layers: &[Dense], dims: &[(usize, usize)], what: &str| {
            if layers.len() != dims.len() {
                return Err(NeuralError::ShapeMismatch(format!(
                    "{what}: {} layers, spec wants {}",
                    layers.len(),
                    dims.len()
                )));
            }
            for (layer, &(i, o)) in layers.iter().zip(dims) {
                if layer.dims() != (i, o) || layer.biases.len() != o {
                    return Err(NeuralError::ShapeMismatch(format!(
                        "{what}: layer is {:?}, spec wants ({i}, {o})",
                        layer.dims()
                    )));
                }
            }
            Ok(())
        };
        check(&self.trunk, &self.spec.trunk_dims(), "trunk")?;
        check(&self.value, &self.spec.value_dims(), "value stream")?;
        check(&self.advantage, &self.spec.advantage_dims(), "advantage stream")?;
        if self
            .layers()
            .any(|d| d.weights.iter().chain(d.biases.iter()).any(|v| !v.is_finite()))
        {
            return Err(NeuralError::NonFinite);
        }
        Ok(())
    }

    /// Q-values for a single state.
    pub fn forward(&self, features: &Array1<f64>) -> Result<Array1<f64>, NeuralError> {
        let input = features.view().insert_axis(Axis(0));
        let trace = self.forward_trace(&input.to_owned())?;
        Ok(trace.q.row(0).to_owned())
    }

    /// Q-values for a batch of states, one row per state.
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Result<Array2<f64>, NeuralError> {
        Ok(self.forward_trace(inputs)?.q)
    }

    pub(crate) fn forward_trace(&self, inputs: &Array2<f64>) -> Result<ForwardTrace, NeuralError> {
        if inputs.ncols() != self.spec.input_dim {
            return Err(NeuralError::ShapeMismatch(format!(
                "input has {} features, network expects {}",
                inputs.ncols(),
                self.spec.input_dim
            )));
        }
        match self.spec.head {
            Head::Plain => {
                let trunk = forward_stack(&self.trunk, inputs, true);
                let q = trunk.last().expect("plain net has layers").clone();
                Ok(ForwardTrace {
                    trunk,
                    value: Vec::new(),
                    advantage: Vec::new(),
                    q,
                })
            }
            Head::Dueling(aggregation) => {
                let trunk = forward_stack(&self.trunk, inputs, false);
                let trunk_out = trunk.last().unwrap_or(inputs);
                let value = forward_stack(&self.value, trunk_out, true);
                let advantage = forward_stack(&self.advantage, trunk_out, true);
                let v = value.last().expect("value stream has layers");
                let a = advantage.last().expect("advantage stream has layers");
                let mut q = Array2::zeros(a.raw_dim());
                for (i, row) in a.rows().into_iter().enumerate() {
                    let combined =
                        combine_dueling(v[[i, 0]], row.as_slice().unwrap(), aggregation);
                    for (j, qv) in combined.into_iter().enumerate() {
                        q[[i, j]] = qv;
                    }
                }
                Ok(ForwardTrace {
                    trunk,
                    value,
                    advantage,
                    q,
                })
            }
        }
    }
}

/// Post-activation outputs of every layer for one batch; what backprop
/// needs to run without recomputing the forward pass.
pub(crate) struct ForwardTrace {
    pub(crate) trunk: Vec<Array2<f64>>,
    pub(crate) value: Vec<Array2<f64>>,
    pub(crate) advantage: Vec<Array2<f64>>,
    pub(crate) q: Array2<f64>,
}

/// Runs a dense stack, returning every layer's post-activation output.
/// All layers apply ReLU except, when `last_is_linear`, the final one.
fn forward_stack(layers: &[Dense], input: &Array2<f64>, last_is_linear: bool) -> Vec<Array2<f64>> {
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let prev = if i == 0 { input } else { &acts[i - 1] };
        let mut z = prev.dot(&layer.weights);
        z += &layer.biases;
        if !(last_is_linear && i + 1 == layers.len()) {
            z.mapv_inplace(|x| x.max(0.0));
        }
        acts.push(z);
    }
    acts
}

/// Index of the largest value, ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Folds a scalar state-value and an advantage vector into Q-values.
pub fn combine_dueling(v: f64, advantages: &[f64], mode: Aggregation) -> Vec<f64> {
    debug_assert!(!advantages.is_empty());
    let shift = match mode {
        Aggregation::MaxSubtract => advantages[argmax(advantages)],
        Aggregation::Naive => 0.0,
        Aggregation::MeanSubtract => {
            advantages.iter().sum::<f64>() / advantages.len() as f64
        }
    };
    // v + (a − shift), not (v + a) − shift: the grouping makes the best
    // action's advantage term cancel to exactly zero under max-subtract.
    advantages.iter().map(|a| v + (a - shift)).collect()
}

/// Mean squared error between per-sample predictions (the taken action's
/// Q-value) and per-sample targets.
pub fn mse_loss(predicted: &[f64], targets: &[f64]) -> Result<f64, NeuralError> {
    if predicted.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    if predicted.len() != targets.len() {
        return Err(NeuralError::ShapeMismatch(format!(
            "{} predictions vs {} targets",
            predicted.len(),
            targets.len()
        )));
    }
    let sum: f64 = predicted
        .iter()
        .zip(targets)
        .map(|(p, t)| (t - p) * (t - p))
        .sum();
    Ok(sum / predicted.len() as f64)
}
