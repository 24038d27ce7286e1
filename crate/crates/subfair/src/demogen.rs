//! Reference-decision synthesis: the noisy "human" decision makers.
//!
//! Each demonstration is produced by corrupting a copy of the training data
//! with label/group noise, splitting it in half, fitting a logistic score
//! model on one half, choosing group-specific decision thresholds that trade
//! accuracy against a fairness constraint, and recording the resulting
//! decisions on the other half. Decision quality is always profiled against
//! the clean ground truth, so noisier decision makers genuinely look worse.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{flip_noise, split, Dataset, DatasetError};
use crate::metrics::{profile, DecisionVector, MetricError, MetricId, MetricProfile};
use crate::policy::{predict_proba, PolicyError, PolicyModel};
use crate::seeds;

/// Version tag written into demonstration files.
pub const DEMOS_SCHEMA_VERSION: u32 = 1;

const FIT_MAX_EPOCHS: usize = 500;
const FIT_GRAD_TOL: f64 = 1e-5;
const PARITY_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DemogenError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("scores, groups, and labels must have equal nonzero lengths")]
    MisalignedInputs,
    #[error("group {0} is empty; the demonstration split must contain both groups")]
    EmptyGroup(u8),
    #[error("need at least one demonstration")]
    ZeroDemos,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("unsupported demonstration schema version {0}")]
    UnsupportedVersion(u32),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("demonstration parse error on {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Fairness constraint enforced by the post-processing decision maker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    /// Equalize positive-decision rates across groups.
    Dp,
    /// Equalize true positive and false positive rates across groups.
    Eqodds,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Dp => write!(f, "dp"),
            Constraint::Eqodds => write!(f, "eqodds"),
        }
    }
}

impl std::str::FromStr for Constraint {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dp" => Ok(Constraint::Dp),
            "eqodds" => Ok(Constraint::Eqodds),
            other => Err(format!("unknown constraint '{other}' (expected dp or eqodds)")),
        }
    }
}

/// Per-group decision rule: predict 1 when the score exceeds the group's
/// threshold; exactly at the threshold, predict 1 with the group's
/// randomization probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupThresholds {
    pub t0: f64,
    pub r0: f64,
    pub t1: f64,
    pub r1: f64,
}

impl GroupThresholds {
    fn threshold(&self, group: u8) -> (f64, f64) {
        if group == 1 {
            (self.t1, self.r1)
        } else {
            (self.t0, self.r0)
        }
    }
}

/// Provenance of a demonstration set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub epsilon: f64,
    pub baseline: String,
    pub seed: u64,
    pub metric_ids: Vec<MetricId>,
}

/// N reference decision vectors with their cached clean-ground-truth
/// profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemonstrationSet {
    pub demos: Vec<DecisionVector>,
    pub profiles: Vec<MetricProfile>,
    pub provenance: Provenance,
}

impl DemonstrationSet {
    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    /// Reference values of feature `k` across all demonstrations.
    pub fn feature_values(&self, k: usize) -> Vec<f64> {
        self.profiles.iter().map(|p| p.values()[k]).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), DemogenError> {
        let file = DemoFile {
            schema_version: DEMOS_SCHEMA_VERSION,
            n: self.demos.len(),
            provenance: self.provenance.clone(),
            demos: self
                .demos
                .iter()
                .zip(&self.profiles)
                .map(|(d, p)| DemoRecord {
                    item_ids: d.item_ids().to_vec(),
                    values: d.values().to_vec(),
                    profile: p.clone(),
                })
                .collect(),
        };
        let bytes = serde_json::to_vec(&file).expect("demo serialization cannot fail");
        std::fs::write(path, bytes).map_err(|source| DemogenError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<DemonstrationSet, DemogenError> {
        let bytes = std::fs::read(path).map_err(|source| DemogenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: DemoFile =
            serde_json::from_slice(&bytes).map_err(|source| DemogenError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        if file.schema_version != DEMOS_SCHEMA_VERSION {
            return Err(DemogenError::UnsupportedVersion(file.schema_version));
        }
        let mut demos = Vec::with_capacity(file.demos.len());
        let mut profiles = Vec::with_capacity(file.demos.len());
        for rec in file.demos {
            demos.push(DecisionVector::new(rec.values, rec.item_ids)?);
            profiles.push(rec.profile);
        }
        Ok(DemonstrationSet {
            demos,
            profiles,
            provenance: file.provenance,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DemoFile {
    schema_version: u32,
    n: usize,
    provenance: Provenance,
    demos: Vec<DemoRecord>,
}

#[derive(Serialize, Deserialize)]
struct DemoRecord {
    item_ids: Vec<u64>,
    values: Vec<u8>,
    profile: MetricProfile,
}

// ---------------------------------------------------------------------------
// Base score model
// ---------------------------------------------------------------------------

/// Fits a logistic model on the mean log loss by gradient descent with a
/// halving step-size safeguard, stopping after [`FIT_MAX_EPOCHS`] epochs or
/// once the gradient norm drops below [`FIT_GRAD_TOL`]. A single-class
/// training set yields a constant-score model (intercept only).
pub fn fit_base_scorer(train: &Dataset) -> Result<PolicyModel, DemogenError> {
    if train.is_empty() {
        return Err(DemogenError::EmptyTrainingSet);
    }
    let l = train.n_features();
    let rate = train.label_rate();
    if rate == 0.0 || rate == 1.0 {
        // Degenerate: constant score at the clamped base-rate logit via the
        // intercept column (always the last feature for this crate's data).
        let p = rate.clamp(1e-6, 1.0 - 1.0e-6);
        let mut theta = vec![0.0; l];
        theta[l - 1] = (p / (1.0 - p)).ln();
        return Ok(PolicyModel::new(theta)?);
    }

    let mut theta = vec![0.0; l];
    let mut lr = 1.0;
    let mut loss = mean_log_loss(train, &theta);
    for _ in 0..FIT_MAX_EPOCHS {
        let grad = mean_loss_gradient(train, &theta);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < FIT_GRAD_TOL {
            break;
        }
        // halve the step until the loss stops increasing
        loop {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(w, g)| w - lr * g)
                .collect();
            let candidate_loss = mean_log_loss(train, &candidate);
            if candidate_loss <= loss || lr < 1e-12 {
                theta = candidate;
                loss = candidate_loss;
                break;
            }
            lr *= 0.5;
        }
    }
    Ok(PolicyModel::new(theta)?)
}

fn mean_log_loss(ds: &Dataset, theta: &[f64]) -> f64 {
    let m = ds.len();
    let mut total = 0.0;
    for r in 0..m {
        let z: f64 = theta
            .iter()
            .zip(ds.feature_row(r))
            .map(|(w, x)| w * x)
            .sum();
        // log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0, stably
        let y = ds.label(r) as f64;
        let margin = if y == 1.0 { z } else { -z };
        total += if margin > 0.0 {
            (-margin).exp().ln_1p()
        } else {
            -margin + margin.exp().ln_1p()
        };
    }
    total / m as f64
}

fn mean_loss_gradient(ds: &Dataset, theta: &[f64]) -> Vec<f64> {
    let m = ds.len();
    let mut grad = vec![0.0; theta.len()];
    for r in 0..m {
        let z: f64 = theta
            .iter()
            .zip(ds.feature_row(r))
            .map(|(w, x)| w * x)
            .sum();
        let p = 1.0 / (1.0 + (-z).exp());
        let coeff = p - ds.label(r) as f64;
        for (g, x) in grad.iter_mut().zip(ds.feature_row(r)) {
            *g += coeff * x;
        }
    }
    for g in &mut grad {
        *g /= m as f64;
    }
    grad
}

// ---------------------------------------------------------------------------
// Threshold post-processing
// ---------------------------------------------------------------------------

/// Per-group score statistics at distinct score levels, descending.
struct GroupLevels {
    /// Distinct score values, highest first.
    levels: Vec<f64>,
    /// Items at each level.
    counts: Vec<usize>,
    /// Positive labels at each level.
    positives: Vec<usize>,
    total: usize,
    total_pos: usize,
}

impl GroupLevels {
    fn build(scores: &[f64], labels: &[u8], groups: &[u8], group: u8) -> GroupLevels {
        let mut pairs: Vec<(f64, u8)> = scores
            .iter()
            .zip(labels)
            .zip(groups)
            .filter(|((_, _), &g)| g == group)
            .map(|((&s, &y), _)| (s, y))
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut levels = Vec::new();
        let mut counts = Vec::new();
        let mut positives = Vec::new();
        for (s, y) in pairs.iter().copied() {
            if levels.last().is_some_and(|&last: &f64| last == s) {
                *counts.last_mut().unwrap() += 1;
                *positives.last_mut().unwrap() += y as usize;
            } else {
                levels.push(s);
                counts.push(1);
                positives.push(y as usize);
            }
        }
        let total = pairs.len();
        let total_pos = pairs.iter().map(|(_, y)| *y as usize).sum();
        GroupLevels {
            levels,
            counts,
            positives,
            total,
            total_pos,
        }
    }

    fn total_neg(&self) -> usize {
        self.total - self.total_pos
    }

    /// Expected (false positives, false negatives) when the expected number
    /// of positive decisions is `c` (items are taken from the top score
    /// down, fractionally within the boundary level).
    fn expected_errors(&self, c: f64) -> (f64, f64) {
        let c = c.clamp(0.0, self.total as f64);
        let mut remaining = c;
        let mut fp = 0.0;
        let mut taken_pos = 0.0;
        for (i, &n) in self.counts.iter().enumerate() {
            if remaining <= 0.0 {
                break;
            }
            let take = remaining.min(n as f64);
            let frac = take / n as f64;
            taken_pos += frac * self.positives[i] as f64;
            fp += frac * (n - self.positives[i]) as f64;
            remaining -= take;
        }
        let fn_ = self.total_pos as f64 - taken_pos;
        (fp, fn_)
    }

    /// Expected positive rate realized by a threshold rule.
    fn expected_rate(&self, t: f64, r: f64) -> f64 {
        let mut expected = 0.0;
        for (i, &level) in self.levels.iter().enumerate() {
            if level > t {
                expected += self.counts[i] as f64;
            } else if level == t {
                expected += r * self.counts[i] as f64;
            }
        }
        expected / self.total as f64
    }

    /// Threshold/randomization pair whose expected positive count is `c`.
    fn realize_count(&self, c: f64) -> (f64, f64) {
        let c = c.clamp(0.0, self.total as f64);
        let mut cum = 0usize;
        for (i, &n) in self.counts.iter().enumerate() {
            let next = cum + n;
            if c <= next as f64 {
                let r = (c - cum as f64) / n as f64;
                return (self.levels[i], r.clamp(0.0, 1.0));
            }
            cum = next;
        }
        // c == total: include everything at the lowest level
        (*self.levels.last().unwrap(), 1.0)
    }

    /// ROC polyline vertices (FPR, TPR), from (0,0) to (1,1), one per level.
    /// Degenerate strata use the 0-rate convention shared with the metrics.
    fn roc_vertices(&self) -> Vec<(f64, f64)> {
        let pos = self.total_pos as f64;
        let neg = self.total_neg() as f64;
        let mut verts = vec![(0.0, 0.0)];
        let mut tp = 0usize;
        let mut fp = 0usize;
        for i in 0..self.levels.len() {
            tp += self.positives[i];
            fp += self.counts[i] - self.positives[i];
            let tpr = if pos > 0.0 { tp as f64 / pos } else { 0.0 };
            let fpr = if neg > 0.0 { fp as f64 / neg } else { 0.0 };
            verts.push((fpr, tpr));
        }
        verts
    }

    /// Realizes an ROC point lying on segment `seg` (between vertices `seg`
    /// and `seg+1`) at parameter `u` along it.
    fn realize_roc(&self, seg: usize, u: f64) -> (f64, f64) {
        (self.levels[seg], u.clamp(0.0, 1.0))
    }
}

/// Chooses group thresholds that minimize expected misclassification subject
/// to the fairness constraint (positive rates equal for `dp`; TPR and FPR
/// equal for `eqodds`, found on the intersection of the groups' achievable
/// ROC polylines). Equalization holds in expectation, within [`PARITY_TOL`].
pub fn postprocess(
    scores: &[f64],
    groups: &[u8],
    labels: &[u8],
    constraint: Constraint,
) -> Result<GroupThresholds, DemogenError> {
    if scores.is_empty() || scores.len() != groups.len() || scores.len() != labels.len() {
        return Err(DemogenError::MisalignedInputs);
    }
    for g in [0u8, 1u8] {
        if !groups.iter().any(|&x| x == g) {
            return Err(DemogenError::EmptyGroup(g));
        }
    }
    let g0 = GroupLevels::build(scores, labels, groups, 0);
    let g1 = GroupLevels::build(scores, labels, groups, 1);
    match constraint {
        Constraint::Dp => Ok(postprocess_dp(&g0, &g1)),
        Constraint::Eqodds => Ok(postprocess_eqodds(&g0, &g1)),
    }
}

/// Demographic parity: a common positive rate for both groups. The expected
/// error is piecewise linear in the rate, so only block boundaries (and the
/// endpoints) can be optimal.
fn postprocess_dp(g0: &GroupLevels, g1: &GroupLevels) -> GroupThresholds {
    let mut candidates: Vec<f64> = vec![0.0, 1.0];
    for g in [g0, g1] {
        let mut cum = 0usize;
        for &n in &g.counts {
            cum += n;
            candidates.push(cum as f64 / g.total as f64);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut best_rate = 0.0;
    let mut best_err = f64::INFINITY;
    for &rate in &candidates {
        let (fp0, fn0) = g0.expected_errors(rate * g0.total as f64);
        let (fp1, fn1) = g1.expected_errors(rate * g1.total as f64);
        let err = fp0 + fn0 + fp1 + fn1;
        if err < best_err - 1e-12 {
            best_err = err;
            best_rate = rate;
        }
    }
    let (t0, r0) = g0.realize_count(best_rate * g0.total as f64);
    let (t1, r1) = g1.realize_count(best_rate * g1.total as f64);
    debug_assert!(
        (g0.expected_rate(t0, r0) - g1.expected_rate(t1, r1)).abs() <= PARITY_TOL,
        "realized expected rates must agree"
    );
    GroupThresholds { t0, r0, t1, r1 }
}

/// Equalized odds: a common (FPR, TPR) point on both groups' ROC polylines.
/// Candidates are all pairwise segment intersections plus the shared corners
/// (0,0) and (1,1). Expected error is linear in (FPR, TPR), so intersection
/// points suffice.
fn postprocess_eqodds(g0: &GroupLevels, g1: &GroupLevels) -> GroupThresholds {
    let v0 = g0.roc_vertices();
    let v1 = g1.roc_vertices();

    struct Candidate {
        x: f64,
        y: f64,
        rule0: (f64, f64),
        rule1: (f64, f64),
    }
    let mut candidates: Vec<Candidate> = Vec::new();

    // Shared corners: all-negative and all-positive rules.
    candidates.push(Candidate {
        x: 0.0,
        y: 0.0,
        rule0: (g0.levels[0], 0.0),
        rule1: (g1.levels[0], 0.0),
    });
    candidates.push(Candidate {
        x: 1.0,
        y: 1.0,
        rule0: (*g0.levels.last().unwrap(), 1.0),
        rule1: (*g1.levels.last().unwrap(), 1.0),
    });

    for s0 in 0..v0.len() - 1 {
        for s1 in 0..v1.len() - 1 {
            if let Some((x, y, u0, u1)) =
                segment_intersection(v0[s0], v0[s0 + 1], v1[s1], v1[s1 + 1])
            {
                candidates.push(Candidate {
                    x,
                    y,
                    rule0: g0.realize_roc(s0, u0),
                    rule1: g1.realize_roc(s1, u1),
                });
            }
        }
    }

    let weight_neg = (g0.total_neg() + g1.total_neg()) as f64;
    let weight_pos = (g0.total_pos + g1.total_pos) as f64;
    let mut best: Option<(f64, &Candidate)> = None;
    for cand in &candidates {
        let err = cand.x * weight_neg + (1.0 - cand.y) * weight_pos;
        let better = match &best {
            None => true,
            Some((best_err, best_cand)) => {
                err < best_err - 1e-12
                    || ((err - best_err).abs() <= 1e-12
                        && (cand.x, -cand.y) < (best_cand.x, -best_cand.y))
            }
        };
        if better {
            best = Some((err, cand));
        }
    }
    let (_, chosen) = best.expect("corner candidates always exist");
    GroupThresholds {
        t0: chosen.rule0.0,
        r0: chosen.rule0.1,
        t1: chosen.rule1.0,
        r1: chosen.rule1.1,
    }
}

/// Intersection of two closed 2D segments. Returns the point and the
/// parameters along each segment. Collinear overlaps report the midpoint of
/// the overlap. Touching endpoints count.
fn segment_intersection(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> Option<(f64, f64, f64, f64)> {
    let d1 = (p2.0 - p1.0, p2.1 - p1.1);
    let d2 = (q2.0 - q1.0, q2.1 - q1.1);
    let denom = d1.0 * d2.1 - d1.1 * d2.0;
    let diff = (q1.0 - p1.0, q1.1 - p1.1);
    if denom.abs() < 1e-15 {
        // parallel; check for collinear overlap
        let cross = diff.0 * d1.1 - diff.1 * d1.0;
        if cross.abs() > 1e-12 {
            return None;
        }
        let len_sq = d1.0 * d1.0 + d1.1 * d1.1;
        if len_sq < 1e-30 {
            return None;
        }
        let t_q1 = (diff.0 * d1.0 + diff.1 * d1.1) / len_sq;
        let t_q2 = ((q2.0 - p1.0) * d1.0 + (q2.1 - p1.1) * d1.1) / len_sq;
        let lo = t_q1.min(t_q2).max(0.0);
        let hi = t_q1.max(t_q2).min(1.0);
        if lo > hi {
            return None;
        }
        let u0 = (lo + hi) / 2.0;
        let x = p1.0 + u0 * d1.0;
        let y = p1.1 + u0 * d1.1;
        // parameter along the second segment
        let len2_sq = d2.0 * d2.0 + d2.1 * d2.1;
        let u1 = if len2_sq < 1e-30 {
            0.0
        } else {
            ((x - q1.0) * d2.0 + (y - q1.1) * d2.1) / len2_sq
        };
        if !(0.0..=1.0).contains(&u1) {
            return None;
        }
        return Some((x, y, u0, u1));
    }
    let u0 = (diff.0 * d2.1 - diff.1 * d2.0) / denom;
    let u1 = (diff.0 * d1.1 - diff.1 * d1.0) / denom;
    if !(-1e-12..=1.0 + 1e-12).contains(&u0) || !(-1e-12..=1.0 + 1e-12).contains(&u1) {
        return None;
    }
    let u0 = u0.clamp(0.0, 1.0);
    let u1 = u1.clamp(0.0, 1.0);
    Some((p1.0 + u0 * d1.0, p1.1 + u0 * d1.1, u0, u1))
}

/// Applies group thresholds to scores; randomization at exact threshold
/// equality is seeded.
pub fn apply_thresholds(
    th: &GroupThresholds,
    scores: &[f64],
    groups: &[u8],
    item_ids: &[u64],
    seed: u64,
) -> Result<DecisionVector, DemogenError> {
    if scores.is_empty() || scores.len() != groups.len() || scores.len() != item_ids.len() {
        return Err(DemogenError::MisalignedInputs);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values: Vec<u8> = scores
        .iter()
        .zip(groups)
        .map(|(&s, &g)| {
            let (t, r) = th.threshold(g);
            if s > t {
                1
            } else if s == t {
                u8::from(rng.random::<f64>() < r)
            } else {
                0
            }
        })
        .collect();
    Ok(DecisionVector::new(values, item_ids.to_vec())?)
}

// ---------------------------------------------------------------------------
// Demonstration synthesis
// ---------------------------------------------------------------------------

/// Synthesizes `n` demonstrations over halves of `train_sh` (see module
/// docs). Per-demonstration seeds are the stage seed plus the demo index.
pub fn synthesize_demos(
    train_sh: &Dataset,
    n: usize,
    epsilon: f64,
    constraint: Constraint,
    seed: u64,
    metric_ids: &[MetricId],
) -> Result<DemonstrationSet, DemogenError> {
    synthesize(train_sh, None, n, epsilon, constraint, seed, metric_ids)
}

/// Same decision makers, but producing decisions on seeded halves of a
/// transfer dataset (used to build held-out demonstrations on the test
/// split). Group attributes seen by the decision rule get the same
/// epsilon-flipping as the training pipeline; profiles are computed against
/// the clean transfer data.
pub fn synthesize_transfer_demos(
    train_sh: &Dataset,
    target: &Dataset,
    n: usize,
    epsilon: f64,
    constraint: Constraint,
    seed: u64,
    metric_ids: &[MetricId],
) -> Result<DemonstrationSet, DemogenError> {
    synthesize(
        train_sh,
        Some(target),
        n,
        epsilon,
        constraint,
        seed,
        metric_ids,
    )
}

fn synthesize(
    train_sh: &Dataset,
    target: Option<&Dataset>,
    n: usize,
    epsilon: f64,
    constraint: Constraint,
    seed: u64,
    metric_ids: &[MetricId],
) -> Result<DemonstrationSet, DemogenError> {
    if n == 0 {
        return Err(DemogenError::ZeroDemos);
    }
    let mut demos = Vec::with_capacity(n);
    let mut profiles = Vec::with_capacity(n);
    for i in 0..n {
        let demo_seed = seeds::indexed(seed, i as u64);
        let noisy = flip_noise(
            train_sh,
            epsilon,
            seeds::derive(demo_seed, seeds::stage::NOISE),
            true,
            true,
        )?;
        let pair = split(&noisy, 0.5, seeds::derive(demo_seed, seeds::stage::PP_SPLIT))?;
        let (train_pp, test_pp) = (&pair.first, &pair.second);

        let scorer = fit_base_scorer(train_pp)?;
        let train_scores = predict_proba(&scorer, train_pp, &train_pp.all_rows())?;
        let th = postprocess(
            &train_scores,
            train_pp.groups(),
            train_pp.labels(),
            constraint,
        )?;

        // Where do the decisions land? On test-pp for the training pipeline,
        // or on a fresh half of the transfer dataset.
        let (decide_ds, clean_ds): (Dataset, &Dataset) = match target {
            None => (test_pp.clone(), train_sh),
            Some(tgt) => {
                let subset = split(
                    tgt,
                    0.5,
                    seeds::derive(demo_seed, seeds::stage::EVAL_SUBSET),
                )?;
                // the decision maker sees epsilon-corrupted group attributes
                let noisy_subset = flip_noise(
                    &subset.first,
                    epsilon,
                    seeds::derive(demo_seed, seeds::stage::NOISE),
                    false,
                    true,
                )?;
                (noisy_subset, tgt)
            }
        };
        let scores = predict_proba(&scorer, &decide_ds, &decide_ds.all_rows())?;
        let decisions = apply_thresholds(
            &th,
            &scores,
            decide_ds.groups(),
            decide_ds.ids(),
            seeds::derive(demo_seed, seeds::stage::THRESHOLDS),
        )?;
        let prof = profile(&decisions, clean_ds, metric_ids)?;
        demos.push(decisions);
        profiles.push(prof);
    }
    Ok(DemonstrationSet {
        demos,
        profiles,
        provenance: Provenance {
            epsilon,
            baseline: format!("post_proc_{constraint}"),
            seed,
            metric_ids: metric_ids.to_vec(),
        },
    })
}
