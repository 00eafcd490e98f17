//! Adam updates with the standard bias correction.

use ndarray::{Array, Dimension, Zip};

use super::{Gradients, NetworkParams};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON_HAT: f64 = 1e-8;

/// First- and second-moment accumulators mirroring the parameter shapes,
/// plus the step counter the bias corrections depend on.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
}

impl AdamState {
    pub fn new(params: &NetworkParams, learning_rate: f64) -> Self {
        Self {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            step: 0,
            learning_rate,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon_hat: DEFAULT_EPSILON_HAT,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn update_tensor<D: Dimension>(
    param: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    m: &mut Array<f64, D>,
    v: &mut Array<f64, D>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    Zip::from(param)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}

/// One Adam update over every parameter tensor:
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², with bias-corrected
/// m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ) and θ ← θ − lr·m̂/(√v̂ + ε̂).
///
/// Gradient shapes must mirror the parameters; they do by construction
/// when the gradients come from [`super::backward`].
pub fn adam_step(params: &mut NetworkParams, grads: &Gradients, opt: &mut AdamState) {
    opt.step += 1;
    let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
    let (lr, b1, b2, eps) = (opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon_hat);

    let stacks = [
        (&mut params.trunk, &grads.trunk, &mut opt.m.trunk, &mut opt.v.trunk),
        (&mut params.value, &grads.value, &mut opt.m.value, &mut opt.v.value),
        (
            &mut params.advantage,
            &grads.advantage,
            &mut opt.m.advantage,
            &mut opt.v.advantage,
        ),
    ];
    for (layers, g_layers, m_layers, v_layers) in stacks {
        for (((p, g), m), v) in layers
            .iter_mut()
            .zip(g_layers)
            .zip(m_layers.iter_mut())
            .zip(v_layers.iter_mut())
        {
            update_tensor(
                &mut p.weights,
                &g.weights,
                &mut m.weights,
                &mut v.weights,
                lr,
                b1,
                b2,
                eps,
                bc1,
                bc2,
            );
            update_tensor(
                &mut p.biases, &g.biases, &mut m.biases, &mut v.biases, lr, b1, b2, eps, bc1, bc2,
            );
        }
    }
}
