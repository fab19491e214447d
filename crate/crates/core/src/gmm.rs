//! Permutations, inversion counts, and the Generalized Mallows Model.
//!
//! A topic ordering over `k` items is represented two equivalent ways: as a
//! [`Permutation`] of `0..k`, or as an [`InversionVector`] of `k - 1` counts
//! where entry `j` records how many values greater than `j` precede `j` in the
//! permutation. The canonical ordering is fixed to the identity, so entry `j`
//! ranges over `0..=k-1-j` and the entries sum to the Kendall distance from
//! the identity.
//!
//! The Generalized Mallows Model factorizes over inversion coordinates: each
//! `v_j` is an independent truncated geometric with its own dispersion
//! `rho_j > 0`, so the identity ordering is always the mode. Each dispersion
//! carries an independent conjugate prior ([`GmmPrior`]) whose posterior is
//! sampled by univariate slice sampling.

use rand::Rng;
use thiserror::Error;

use crate::slice::{slice_sample, SliceParams};

/// Domain of a dispersion parameter: values are clamped into
/// `[RHO_MIN, RHO_MAX]` when resampled. The upper cap keeps `e^{m rho}`
/// finite for any realistic number of topics.
pub const RHO_MIN: f64 = 1e-8;
pub const RHO_MAX: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum GmmError {
    #[error("sequence of length {len} is not a permutation of 0..{len}")]
    InvalidPermutation { len: usize },
    #[error("inversion count {value} at coordinate {coord} exceeds maximum {max}")]
    InversionOutOfRange {
        coord: usize,
        value: usize,
        max: usize,
    },
    #[error("dispersion parameters must be positive and finite")]
    InvalidDispersion,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Largest admissible inversion count at coordinate `j` of a `k`-item model:
/// only the `k - 1 - j` larger values can precede `j`.
pub fn max_inversions(k: usize, j: usize) -> usize {
    debug_assert!(j + 1 < k);
    k - 1 - j
}

/// An ordering of topics `0..k`, each appearing exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, GmmError> {
        let len = order.len();
        let mut seen = vec![false; len];
        for &x in &order {
            if x >= len || seen[x] {
                return Err(GmmError::InvalidPermutation { len });
            }
            seen[x] = true;
        }
        Ok(Permutation { order })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            order: (0..k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.order.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// Inversion counts of this permutation: entry `j` is the number of
    /// values greater than `j` that appear before `j`.
    pub fn inversions(&self) -> InversionVector {
        let k = self.k();
        let mut pos = vec![0usize; k];
        for (i, &x) in self.order.iter().enumerate() {
            pos[x] = i;
        }
        let mut v = Vec::with_capacity(k.saturating_sub(1));
        for j in 0..k.saturating_sub(1) {
            let count = (j + 1..k).filter(|&bigger| pos[bigger] < pos[j]).count();
            v.push(count);
        }
        InversionVector { v }
    }
}

/// Inversion-count encoding of a permutation of `0..k`, relative to the
/// identity. Holds `k - 1` entries; the count for the largest value is
/// identically zero and not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionVector {
    v: Vec<usize>,
}

impl InversionVector {
    pub fn new(v: Vec<usize>) -> Result<Self, GmmError> {
        let k = v.len() + 1;
        for (j, &value) in v.iter().enumerate() {
            let max = max_inversions(k, j);
            if value > max {
                return Err(GmmError::InversionOutOfRange {
                    coord: j,
                    value,
                    max,
                });
            }
        }
        Ok(InversionVector { v })
    }

    /// The all-zero vector: the identity permutation of `0..k`.
    pub fn zeros(k: usize) -> Self {
        assert!(k >= 1);
        InversionVector { v: vec![0; k - 1] }
    }

    pub fn k(&self) -> usize {
        self.v.len() + 1
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.v
    }

    pub fn get(&self, j: usize) -> usize {
        self.v[j]
    }

    /// Set coordinate `j`, keeping the range invariant.
    pub fn set(&mut self, j: usize, value: usize) {
        assert!(value <= max_inversions(self.k(), j));
        self.v[j] = value;
    }

    /// Sum of all entries: the Kendall distance from the identity.
    pub fn total(&self) -> usize {
        self.v.iter().sum()
    }

    /// The unique permutation with these inversion counts. Values are placed
    /// from largest to smallest; value `j` is inserted after exactly `v[j]`
    /// of the already-placed (larger) values.
    pub fn to_permutation(&self) -> Permutation {
        let k = self.k();
        let mut order = Vec::with_capacity(k);
        order.push(k - 1);
        for j in (0..k - 1).rev() {
            order.insert(self.v[j], j);
        }
        Permutation { order }
    }
}

/// Per-coordinate dispersion parameters of the Mallows model; all entries
/// strictly positive so the identity ordering is the mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionVector {
    rho: Vec<f64>,
}

impl DispersionVector {
    pub fn new(rho: Vec<f64>) -> Result<Self, GmmError> {
        if rho.iter().any(|&r| !r.is_finite() || r <= 0.0) {
            return Err(GmmError::InvalidDispersion);
        }
        Ok(DispersionVector { rho })
    }

    /// All coordinates set to the same dispersion, for a `k`-item model.
    pub fn constant(k: usize, rho: f64) -> Result<Self, GmmError> {
        assert!(k >= 1);
        Self::new(vec![rho; k - 1])
    }

    pub fn k(&self) -> usize {
        self.rho.len() + 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    pub fn get(&self, j: usize) -> f64 {
        self.rho[j]
    }
}

/// log ψ_j(ρ): the normalizer of the coordinate-`j` marginal, i.e. the log of
/// the finite geometric sum Σ_{v=0}^{k-1-j} e^{-ρ v}. Computed through
/// `expm1` so it stays exact as ρ → 0, where the marginal becomes uniform
/// over its `k - j` values.
pub fn log_psi_j(rho: f64, k: usize, j: usize) -> f64 {
    assert!(rho > 0.0, "dispersion must be positive");
    assert!(j + 1 < k, "coordinate out of range");
    let n_values = (k - j) as f64;
    ((-n_values * rho).exp_m1() / (-rho).exp_m1()).ln()
}

/// Log marginal probability of inversion count `v` at coordinate `j`:
/// `-rho * v - log ψ_j(rho)`.
pub fn gmm_marginal_log_pmf(v: usize, rho: f64, k: usize, j: usize) -> f64 {
    assert!(
        v <= max_inversions(k, j),
        "inversion count {v} out of range at coordinate {j}"
    );
    -rho * v as f64 - log_psi_j(rho, k, j)
}

/// Log probability of a full inversion vector: the sum of its independent
/// coordinate marginals.
pub fn gmm_log_pmf(v: &InversionVector, rho: &DispersionVector) -> Result<f64, GmmError> {
    if v.k() != rho.k() {
        return Err(GmmError::DimensionMismatch {
            left: v.k(),
            right: rho.k(),
        });
    }
    let k = v.k();
    Ok((0..k.saturating_sub(1))
        .map(|j| gmm_marginal_log_pmf(v.get(j), rho.get(j), k, j))
        .sum())
}

/// Draw an inversion vector coordinate-wise by inverse CDF over each
/// coordinate's at most `k - j` admissible values.
pub fn sample_inversions(rho: &DispersionVector, rng: &mut impl Rng) -> InversionVector {
    let k = rho.k();
    let mut v = Vec::with_capacity(k.saturating_sub(1));
    for j in 0..k.saturating_sub(1) {
        let r = rho.get(j);
        let max = max_inversions(k, j);
        let decay = (-r).exp();
        let total = (-((max + 1) as f64) * r).exp_m1() / (-r).exp_m1();
        let mut u = rng.random::<f64>() * total;
        let mut term = 1.0;
        let mut drawn = max;
        for value in 0..=max {
            u -= term;
            if u <= 0.0 {
                drawn = value;
                break;
            }
            term *= decay;
        }
        v.push(drawn);
    }
    InversionVector { v }
}

/// Expected inversion count at coordinate `j` under dispersion `rho`. This is
/// also the prior pseudo-count that makes `rho0` the maximum-likelihood
/// dispersion: `1/(e^rho - 1) - m/(e^{m rho} - 1)` with `m = k - j`.
pub fn mean_inversions(rho: f64, k: usize, j: usize) -> f64 {
    assert!(rho > 0.0, "dispersion must be positive");
    assert!(j + 1 < k, "coordinate out of range");
    let m = (k - j) as f64;
    if m * rho < 1e-3 {
        // Small-argument expansion of 1/(e^x - 1) = 1/x - 1/2 + x/12 - x^3/720;
        // the 1/rho poles cancel exactly.
        (m - 1.0) / 2.0 - (m * m - 1.0) * rho / 12.0
            + (m * m * m * m - 1.0) * rho * rho * rho / 720.0
    } else {
        1.0 / rho.exp_m1() - m / (m * rho).exp_m1()
    }
}

/// Unnormalized log density of the conjugate dispersion prior (and, with
/// updated parameters, of the dispersion posterior):
/// `(-rho * mean_pseudo_count - log ψ_j(rho)) * strength`.
pub fn prior_log_density(
    rho: f64,
    mean_pseudo_count: f64,
    strength: f64,
    k: usize,
    j: usize,
) -> f64 {
    (-rho * mean_pseudo_count - log_psi_j(rho, k, j)) * strength
}

/// Conjugate prior over the dispersion parameters of a `k`-item model.
///
/// `rho0` is a common prior dispersion; the per-coordinate pseudo-counts are
/// derived from it so that each coordinate's maximum-likelihood dispersion
/// equals `rho0`. `nu0` is the effective prior sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPrior {
    rho0: f64,
    nu0: f64,
    vj0: Vec<f64>,
}

impl GmmPrior {
    pub fn new(rho0: f64, nu0: f64, k: usize) -> Result<Self, GmmError> {
        if !rho0.is_finite() || rho0 <= 0.0 || !nu0.is_finite() || nu0 < 0.0 {
            return Err(GmmError::InvalidDispersion);
        }
        let vj0 = (0..k.saturating_sub(1))
            .map(|j| mean_inversions(rho0, k, j))
            .collect();
        Ok(GmmPrior { rho0, nu0, vj0 })
    }

    pub fn k(&self) -> usize {
        self.vj0.len() + 1
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    /// Prior pseudo inversion count for coordinate `j`.
    pub fn vj0(&self, j: usize) -> f64 {
        self.vj0[j]
    }
}

/// The dispersion whose expected inversion count at coordinate `j` equals
/// `target`, found by bisection; the mean is strictly decreasing in `rho`.
/// Clamped to `[RHO_MIN, RHO_MAX]`.
fn dispersion_for_mean(target: f64, k: usize, j: usize) -> f64 {
    if mean_inversions(RHO_MIN, k, j) <= target {
        return RHO_MIN;
    }
    if mean_inversions(RHO_MAX, k, j) >= target {
        return RHO_MAX;
    }
    let (mut lo, mut hi) = (RHO_MIN, RHO_MAX);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean_inversions(mid, k, j) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draw coordinate `j`'s dispersion from its posterior given the summed
/// inversion counts of `n_obs` observed orderings.
///
/// The posterior is the conjugate family evaluated at mean pseudo-count
/// `(sum_v + vj0 * nu0) / (n_obs + nu0)` and strength `n_obs + nu0`; it is
/// univariate and unimodal, so it is drawn by slice sampling started at its
/// mode (where the model mean equals the posterior pseudo-count).
pub fn resample_rho_j(
    sum_v: u64,
    n_obs: usize,
    prior: &GmmPrior,
    j: usize,
    rng: &mut impl Rng,
) -> f64 {
    let k = prior.k();
    assert!(j + 1 < k, "coordinate out of range");
    let strength = n_obs as f64 + prior.nu0;
    let mean_count = (sum_v as f64 + prior.vj0[j] * prior.nu0) / strength;
    let mode = dispersion_for_mean(mean_count, k, j);
    let params = SliceParams::bounded(RHO_MIN, RHO_MAX);
    slice_sample(
        |rho| prior_log_density(rho, mean_count, strength, k, j),
        mode,
        &params,
        rng,
    )
}

/// Number of discordant pairs between two orderings of the same `k` items:
/// the minimum number of adjacent swaps transforming one into the other.
pub fn kendall_distance(a: &Permutation, b: &Permutation) -> usize {
    assert_eq!(a.k(), b.k(), "permutations must have the same size");
    let k = b.k();
    let mut pos_b = vec![0usize; k];
    for (i, &x) in b.as_slice().iter().enumerate() {
        pos_b[x] = i;
    }
    let mapped: Vec<usize> = a.as_slice().iter().map(|&x| pos_b[x]).collect();
    let mut count = 0;
    for i in 0..k {
        for j in i + 1..k {
            if mapped[i] > mapped[j] {
                count += 1;
            }
        }
    }
    count
}
