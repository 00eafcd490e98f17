//! The three ways a dueling head folds state-value and advantages into
//! Q-values, and why the subtractive forms are preferred: constant
//! shifts of the advantage vector change nothing, and under
//! max-subtract the best action's Q pins to the state value.
//!
//!     cargo run --example dueling_aggregations

use qtrader::neural::{argmax, combine_dueling, Aggregation};

fn show(v: f64, a: &[f64]) {
    println!("v = {v}, a = {a:?}");
    for mode in Aggregation::ALL {
        let q = combine_dueling(v, a, mode);
        println!("  {mode:<12?} q = {q:?}");
    }
}

fn main() {
    show(3.0, &[1.0, 1.0, 1.0]);
    println!();
    show(2.0, &[1.0, 2.0, 3.0]);
    println!();

    // The naive form is not identifiable: the same Q-values arise from
    // (v, a) and (v - c, a + c). The subtractive forms cancel the shift.
    let (v, a) = (0.7, [0.4, -1.1, 0.9]);
    let shifted: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
    for mode in Aggregation::ALL {
        let q = combine_dueling(v, &a, mode);
        let q_shifted = combine_dueling(v, &shifted, mode);
        let invariant = q
            .iter()
            .zip(&q_shifted)
            .all(|(x, y)| (x - y).abs() < 1e-12);
        println!(
            "{mode:<12?} shift-invariant: {invariant:<5} argmax preserved: {}",
            argmax(&q) == argmax(&a)
        );
    }

    let q = combine_dueling(v, &a, Aggregation::MaxSubtract);
    println!(
        "\nmax-subtract ceiling: max(q) = {} == v = {v}",
        q[argmax(&q)]
    );
}
