//! Subdominance: hinge-shaped margin violations against reference decisions.
//!
//! For feature k with hinge slope `alpha`, the subdominance of a model value
//! `f_hat` against a reference value `f_demo` is `[alpha*(f_hat - f_demo) + 1]_+`:
//! zero exactly when the model beats the reference by at least the margin
//! `1/alpha`, and growing linearly with the shortfall otherwise. The slope is
//! not a hyperparameter; [`optimize_alpha`] picks it in closed form per
//! feature by minimizing the averaged hinge plus an L1 penalty
//! `lambda * alpha`, which is convex and piecewise linear in `alpha` so the
//! minimum sits at `alpha = 0` or at a corner where one reference's hinge
//! becomes active.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricProfile;

#[derive(Debug, Error)]
pub enum SubdominanceError {
    #[error("alpha must be nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("reference value list must be nonempty")]
    EmptyDemos,
    #[error("profiles have mismatched metric ids")]
    MetricIdMismatch,
    #[error("alpha vector length {got} does not match profile length {expected}")]
    AlphaLengthMismatch { got: usize, expected: usize },
    #[error("support union size {union} exceeds demonstration count {n}")]
    UnionExceedsCount { union: usize, n: usize },
    #[error("demonstration count must be at least 1")]
    NoDemos,
}

/// One nonnegative hinge slope per feature (inverse-margin units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    alphas: Vec<f64>,
}

impl AlphaVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self, SubdominanceError> {
        if let Some(&bad) = alphas.iter().find(|a| !(**a >= 0.0)) {
            return Err(SubdominanceError::NegativeAlpha(bad));
        }
        Ok(AlphaVector { alphas })
    }

    pub fn zeros(k: usize) -> Self {
        AlphaVector {
            alphas: vec![0.0; k],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Result of the per-feature slope optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    /// The minimizing slope.
    pub alpha: f64,
    /// The minimized objective: averaged hinge at `alpha` plus `lambda*alpha`.
    pub gamma_k: f64,
    /// Number of order-statistic references at or below the chosen corner
    /// (0 when the minimum is at `alpha = 0`).
    pub support_count: usize,
}

/// `[alpha * (f_hat - f_demo) + 1]_+`.
pub fn subdom_feature(f_hat: f64, f_demo: f64, alpha: f64) -> Result<f64, SubdominanceError> {
    if !(alpha >= 0.0) {
        return Err(SubdominanceError::NegativeAlpha(alpha));
    }
    Ok((alpha * (f_hat - f_demo) + 1.0).max(0.0))
}

/// Sum over features, averaged over references, of the per-feature hinges.
pub fn subdom_total(
    hat_profile: &MetricProfile,
    demo_profiles: &[MetricProfile],
    alphas: &AlphaVector,
) -> Result<f64, SubdominanceError> {
    if demo_profiles.is_empty() {
        return Err(SubdominanceError::EmptyDemos);
    }
    if alphas.len() != hat_profile.len() {
        return Err(SubdominanceError::AlphaLengthMismatch {
            got: alphas.len(),
            expected: hat_profile.len(),
        });
    }
    let mut total = 0.0;
    for demo in demo_profiles {
        if !hat_profile.same_metrics(demo) {
            return Err(SubdominanceError::MetricIdMismatch);
        }
        for (k, (&f_hat, &f_demo)) in hat_profile
            .values()
            .iter()
            .zip(demo.values())
            .enumerate()
        {
            total += subdom_feature(f_hat, f_demo, alphas.values()[k])?;
        }
    }
    Ok(total / demo_profiles.len() as f64)
}

/// Minimizes `(1/N) * sum_j [alpha*(f_hat - v_j) + 1]_+ + lambda*alpha` over
/// `alpha >= 0` in closed form.
///
/// The objective is convex and piecewise linear, so the minimum is at
/// `alpha = 0` (value 1) or at a corner `alpha = 1/(v_(j) - f_hat)` for some
/// reference value `v_(j) > f_hat`; corners are enumerated over the ascending
/// order statistics with prefix sums and the best is kept. Ties in sorting
/// break by original index; ties in the objective keep the smallest corner
/// index (the largest such alpha), matching the subgradient condition that
/// the chosen prefix is the shortest one whose running mean covers
/// `f_hat + N*lambda/m`.
pub fn optimize_alpha(
    f_hat: f64,
    demo_values: &[f64],
    lambda: f64,
) -> Result<AlphaSolution, SubdominanceError> {
    if demo_values.is_empty() {
        return Err(SubdominanceError::EmptyDemos);
    }
    if !(lambda >= 0.0) {
        return Err(SubdominanceError::NegativeLambda(lambda));
    }
    let n = demo_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        demo_values[a]
            .partial_cmp(&demo_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sorted: Vec<f64> = order.iter().map(|&i| demo_values[i]).collect();

    // prefix[j] = sum of the j smallest reference values
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in &sorted {
        prefix.push(prefix.last().unwrap() + v);
    }

    // alpha = 0 corner: every hinge contributes exactly 1.
    let mut best = AlphaSolution {
        alpha: 0.0,
        gamma_k: 1.0,
        support_count: 0,
    };

    for m in 1..=n {
        let gap = sorted[m - 1] - f_hat;
        if gap <= 0.0 {
            continue; // the model does not beat this reference in feature k
        }
        let alpha = 1.0 / gap;
        // Hinges for the m-1 smaller references are active and positive, the
        // m-th sits exactly at zero, and references with larger values (or
        // equal values later in the tie order) contribute zero.
        let active_sum = (m as f64 - 1.0) + alpha * ((m as f64 - 1.0) * f_hat - prefix[m - 1]);
        let gamma = active_sum / n as f64 + lambda * alpha;
        if gamma < best.gamma_k {
            best = AlphaSolution {
                alpha,
                gamma_k: gamma,
                support_count: m,
            };
        }
    }
    Ok(best)
}

/// Indices of references whose hinge is active at `alpha`:
/// `alpha*(f_hat - v_j) + 1 >= 0`.
pub fn support_vectors(
    f_hat: f64,
    demo_values: &[f64],
    alpha: f64,
) -> Result<Vec<usize>, SubdominanceError> {
    if !(alpha >= 0.0) {
        return Err(SubdominanceError::NegativeAlpha(alpha));
    }
    Ok(demo_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| alpha * (f_hat - v) + 1.0 >= 0.0)
        .map(|(j, _)| j)
        .collect())
}

/// The generalization diagnostic `1 - |support union| / N`.
pub fn generalization_gamma(
    support_union_size: usize,
    n_demos: usize,
) -> Result<f64, SubdominanceError> {
    if n_demos == 0 {
        return Err(SubdominanceError::NoDemos);
    }
    if support_union_size > n_demos {
        return Err(SubdominanceError::UnionExceedsCount {
            union: support_union_size,
            n: n_demos,
        });
    }
    Ok(1.0 - support_union_size as f64 / n_demos as f64)
}
