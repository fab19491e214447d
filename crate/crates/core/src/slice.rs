//! Univariate slice sampling with stepping out and shrinkage.
//!
//! Used to draw the Mallows dispersion parameters from their (unnormalized,
//! univariate, unimodal) posterior, and to draw dispersions from the prior
//! when generating synthetic corpora.

use rand::Rng;

/// Interval and thinning settings for [`slice_sample`].
#[derive(Debug, Clone, Copy)]
pub struct SliceParams {
    /// Initial bracket width.
    pub width: f64,
    /// Cap on interval expansions per side; each expansion doubles the step.
    pub max_expansions: u32,
    /// Hard lower bound of the support.
    pub lower: f64,
    /// Hard upper bound of the support.
    pub upper: f64,
    /// Number of slice updates per returned draw.
    pub thin: usize,
}

impl SliceParams {
    pub fn bounded(lower: f64, upper: f64) -> Self {
        SliceParams {
            width: 0.5,
            max_expansions: 20,
            lower,
            upper,
            thin: 5,
        }
    }
}

/// One slice-sampling update from `x0` under log density `log_f`.
pub fn slice_step(
    log_f: &mut impl FnMut(f64) -> f64,
    x0: f64,
    p: &SliceParams,
    rng: &mut impl Rng,
) -> f64 {
    debug_assert!(x0 >= p.lower && x0 <= p.upper);
    // Slice level: log u + log f(x0) with u ~ U(0, 1).
    let y = log_f(x0) + rng.random::<f64>().ln();

    // Step out, doubling the step each expansion.
    let mut left = x0 - p.width * rng.random::<f64>();
    let mut right = left + p.width;
    let mut step = p.width;
    for _ in 0..p.max_expansions {
        if left <= p.lower || log_f(left.max(p.lower)) < y {
            break;
        }
        left -= step;
        step *= 2.0;
    }
    step = p.width;
    for _ in 0..p.max_expansions {
        if right >= p.upper || log_f(right.min(p.upper)) < y {
            break;
        }
        right += step;
        step *= 2.0;
    }
    left = left.max(p.lower);
    right = right.min(p.upper);

    // Shrink until a point inside the slice is found.
    loop {
        let x1 = left + rng.random::<f64>() * (right - left);
        if log_f(x1) >= y {
            return x1;
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
        if right - left < 1e-15 {
            // Numerically exhausted bracket; x0 itself is always in the slice.
            return x0;
        }
    }
}

/// Run `p.thin` slice updates starting from `x0` and return the last point.
pub fn slice_sample(
    mut log_f: impl FnMut(f64) -> f64,
    x0: f64,
    p: &SliceParams,
    rng: &mut impl Rng,
) -> f64 {
    let mut x = x0.clamp(p.lower, p.upper);
    for _ in 0..p.thin.max(1) {
        x = slice_step(&mut log_f, x, p, rng);
    }
    x
}
