//! Verifies the hand-rolled backpropagation against central finite
//! differences, for the plain head and all three dueling aggregations.
//!
//!     cargo run --release --example gradient_check

use ndarray::Array2;
use qtrader::neural::{
    backward, mse_loss, Aggregation, NetworkParams, NetworkSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch_loss(params: &NetworkParams, states: &Array2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
    let q = params.forward_batch(states).unwrap();
    let predicted: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| q[[i, a]]).collect();
    mse_loss(&predicted, targets).unwrap()
}

fn worst_error(spec: NetworkSpec, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let mut params = NetworkParams::init(spec, rng).unwrap();
    for layer in params.layers_mut() {
        layer.biases.mapv_inplace(|_| rng.gen_range(-0.3..0.3));
    }
    let batch = 8;
    let states = Array2::from_shape_fn((batch, params.spec().input_dim), |_| rng.gen_range(-1.0..1.0));
    let actions: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..3)).collect();
    let targets: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (grads, _) = backward(&params, &states, &actions, &targets).unwrap();

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for (li, g) in grads.layers().enumerate() {
        let mut probe = |weight: Option<(usize, usize)>, bias: usize, analytic: f64| {
            let numeric = {
                let f = |delta: f64| {
                    let mut p = params.clone();
                    let d = p.layers_mut().nth(li).unwrap();
                    match weight {
                        Some((r, c)) => d.weights[[r, c]] += delta,
                        None => d.biases[bias] += delta,
                    }
                    batch_loss(&p, &states, &actions, &targets)
                };
                (f(h) - f(-h)) / (2.0 * h)
            };
            let scale = (analytic.abs() + numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / scale);
            count += 1;
        };
        for r in 0..g.weights.nrows() {
            for c in 0..g.weights.ncols() {
                probe(Some((r, c)), 0, g.weights[[r, c]]);
            }
        }
        for b in 0..g.biases.len() {
            probe(None, b, g.biases[b]);
        }
    }
    (worst, count)
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let configs: Vec<(&str, NetworkSpec)> = vec![
        ("plain 6-[8,5]-3", NetworkSpec::plain(6, vec![8, 5], 3)),
        (
            "dueling max-subtract 6-[8,5]-3",
            NetworkSpec::dueling(6, vec![8, 5], 3, Aggregation::MaxSubtract),
        ),
        (
            "dueling naive 6-[8,5]-3",
            NetworkSpec::dueling(6, vec![8, 5], 3, Aggregation::Naive),
        ),
        (
            "dueling mean-subtract 6-[8,5]-3",
            NetworkSpec::dueling(6, vec![8, 5], 3, Aggregation::MeanSubtract),
        ),
    ];
    println!("central finite differences, h = 1e-5, batch of 8:\n");
    for (name, spec) in configs {
        let (worst, count) = worst_error(spec, &mut rng);
        println!("{name:<34} {count:>4} parameters, worst relative error {worst:.3e}");
    }
}
