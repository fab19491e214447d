//! Small numeric helpers shared across the crate.

use rand::Rng;

/// log(Σ exp(x_i)), stable against overflow. Returns `-inf` for an empty
/// slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Draw an index proportionally to `exp(log_weights[i])`.
pub fn sample_from_log_weights(log_weights: &[f64], rng: &mut impl Rng) -> usize {
    debug_assert!(!log_weights.is_empty());
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_weights.iter().map(|&x| (x - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &lw) in log_weights.iter().enumerate() {
        u -= (lw - max).exp();
        if u <= 0.0 {
            return i;
        }
        last = i;
    }
    last
}

/// Draw an index proportionally to non-negative `weights`.
pub fn sample_from_weights(weights: &[f64], rng: &mut impl Rng) -> usize {
    debug_assert!(weights.iter().all(|&w| w >= 0.0));
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
        last = i;
    }
    last
}
