//! Predictive-performance and group-fairness violation measures.
//!
//! Each measure maps a decision vector, evaluated against a dataset's ground
//! truth labels and group attributes, to a value in `[0, 1]` where lower is
//! better. All rates are exact integer tallies followed by one floating
//! division; a conditional rate whose denominator is empty is defined as 0,
//! so every measure is total on all inputs.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("decision vector is empty")]
    EmptyDecisions,
    #[error("decision values and item ids have different lengths ({values} vs {ids})")]
    LengthMismatch { values: usize, ids: usize },
    #[error("decision value other than 0 or 1 at position {0}")]
    NonBinaryDecision(usize),
    #[error("duplicate item id {0} in decision vector")]
    DuplicateId(u64),
    #[error("item id {0} does not resolve in the dataset")]
    UnresolvedId(u64),
    #[error("unknown metric id '{0}'")]
    UnknownMetricId(String),
    #[error("duplicate metric id '{0}' in profile")]
    DuplicateMetricId(MetricId),
    #[error("metric list must be nonempty")]
    EmptyMetricList,
    #[error("profiles have mismatched metric ids")]
    MetricIdMismatch,
    #[error("profile value {value} for {metric} outside [0, 1]")]
    ValueOutOfRange { metric: MetricId, value: f64 },
}

/// Closed enumeration of the supported measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Prediction error: fraction of items where the decision differs from
    /// the label.
    Err,
    /// Demographic parity difference: absolute gap in positive-decision rates
    /// between groups.
    DDp,
    /// Equalized odds difference: larger of the TPR gap and the FPR gap.
    DEqodds,
    /// Predictive rate parity difference: larger of the positive and negative
    /// predictive value gaps.
    DPrp,
    /// False negative rate difference between groups.
    DFnr,
    /// False positive rate difference between groups.
    DFpr,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        MetricId::Err,
        MetricId::DDp,
        MetricId::DEqodds,
        MetricId::DPrp,
        MetricId::DFnr,
        MetricId::DFpr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Err => "err",
            MetricId::DDp => "d_dp",
            MetricId::DEqodds => "d_eqodds",
            MetricId::DPrp => "d_prp",
            MetricId::DFnr => "d_fnr",
            MetricId::DFpr => "d_fpr",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = MetricError;
    fn from_str(s: &str) -> Result<Self, MetricError> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetricError::UnknownMetricId(s.to_string()))
    }
}

/// The default K = 4 measure set used by the experiments.
pub fn default_metric_ids() -> Vec<MetricId> {
    vec![MetricId::Err, MetricId::DDp, MetricId::DEqodds, MetricId::DPrp]
}

/// One binary decision per item over an indexed item subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionVector {
    values: Vec<u8>,
    item_ids: Vec<u64>,
}

impl DecisionVector {
    pub fn new(values: Vec<u8>, item_ids: Vec<u64>) -> Result<Self, MetricError> {
        if values.is_empty() {
            return Err(MetricError::EmptyDecisions);
        }
        if values.len() != item_ids.len() {
            return Err(MetricError::LengthMismatch {
                values: values.len(),
                ids: item_ids.len(),
            });
        }
        if let Some(pos) = values.iter().position(|&v| v > 1) {
            return Err(MetricError::NonBinaryDecision(pos));
        }
        let mut seen = HashSet::with_capacity(item_ids.len());
        for &id in &item_ids {
            if !seen.insert(id) {
                return Err(MetricError::DuplicateId(id));
            }
        }
        Ok(DecisionVector { values, item_ids })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn item_ids(&self) -> &[u64] {
        &self.item_ids
    }
}

/// Confusion-matrix tallies split by group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives_decided(&self) -> usize {
        self.tp + self.fp
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub group0: ConfusionCounts,
    pub group1: ConfusionCounts,
}

impl GroupConfusion {
    pub fn total(&self) -> usize {
        self.group0.total() + self.group1.total()
    }

    fn by_group(&self, g: u8) -> &ConfusionCounts {
        if g == 1 {
            &self.group1
        } else {
            &self.group0
        }
    }
}

/// Exact per-group tally of (decision, label) pairs.
pub fn confusion_counts(d: &DecisionVector, ds: &Dataset) -> Result<GroupConfusion, MetricError> {
    let mut out = GroupConfusion::default();
    for (&id, &yhat) in d.item_ids.iter().zip(&d.values) {
        let row = ds
            .row_of_id(id)
            .ok_or(MetricError::UnresolvedId(id))?;
        let y = ds.label(row);
        let counts = if ds.group(row) == 1 {
            &mut out.group1
        } else {
            &mut out.group0
        };
        match (yhat, y) {
            (1, 1) => counts.tp += 1,
            (1, 0) => counts.fp += 1,
            (0, 0) => counts.tn += 1,
            _ => counts.fn_ += 1,
        }
    }
    Ok(out)
}

/// `num / den`, with the degenerate-denominator convention `0 / 0 := 0`.
fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn metric_from_counts(metric: MetricId, c: &GroupConfusion) -> f64 {
    let g0 = c.by_group(0);
    let g1 = c.by_group(1);
    match metric {
        MetricId::Err => rate(
            g0.fp + g0.fn_ + g1.fp + g1.fn_,
            c.total(),
        ),
        MetricId::DDp => {
            let r1 = rate(g1.positives_decided(), g1.total());
            let r0 = rate(g0.positives_decided(), g0.total());
            (r1 - r0).abs()
        }
        MetricId::DEqodds => {
            let tpr_gap = (rate(g1.tp, g1.tp + g1.fn_) - rate(g0.tp, g0.tp + g0.fn_)).abs();
            let fpr_gap = (rate(g1.fp, g1.fp + g1.tn) - rate(g0.fp, g0.fp + g0.tn)).abs();
            tpr_gap.max(fpr_gap)
        }
        MetricId::DPrp => {
            // P(Y=1 | Yhat=1) and P(Y=1 | Yhat=0), per group.
            let ppv_gap = (rate(g1.tp, g1.tp + g1.fp) - rate(g0.tp, g0.tp + g0.fp)).abs();
            let forate_gap =
                (rate(g1.fn_, g1.fn_ + g1.tn) - rate(g0.fn_, g0.fn_ + g0.tn)).abs();
            ppv_gap.max(forate_gap)
        }
        MetricId::DFnr => {
            (rate(g1.fn_, g1.tp + g1.fn_) - rate(g0.fn_, g0.tp + g0.fn_)).abs()
        }
        MetricId::DFpr => {
            (rate(g1.fp, g1.fp + g1.tn) - rate(g0.fp, g0.fp + g0.tn)).abs()
        }
    }
}

fn single_metric(metric: MetricId, d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    let counts = confusion_counts(d, ds)?;
    Ok(metric_from_counts(metric, &counts))
}

/// Fraction of items whose decision differs from the label.
pub fn prediction_error(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::Err, d, ds)
}

/// Absolute difference of positive-decision rates across groups.
pub fn d_dp(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::DDp, d, ds)
}

/// Max over label strata of the group-conditional positive-rate gap.
pub fn d_eqodds(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::DEqodds, d, ds)
}

/// Max over decision strata of the group-conditional `P(Y=1)` gap.
pub fn d_prp(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::DPrp, d, ds)
}

/// Absolute false-negative-rate difference across groups.
pub fn d_fnr(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::DFnr, d, ds)
}

/// Absolute false-positive-rate difference across groups.
pub fn d_fpr(d: &DecisionVector, ds: &Dataset) -> Result<f64, MetricError> {
    single_metric(MetricId::DFpr, d, ds)
}

/// The K-vector of measure values for one decision vector, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricProfile {
    metric_ids: Vec<MetricId>,
    values: Vec<f64>,
}

impl MetricProfile {
    pub fn new(metric_ids: Vec<MetricId>, values: Vec<f64>) -> Result<Self, MetricError> {
        if metric_ids.is_empty() {
            return Err(MetricError::EmptyMetricList);
        }
        if metric_ids.len() != values.len() {
            return Err(MetricError::LengthMismatch {
                values: values.len(),
                ids: metric_ids.len(),
            });
        }
        let mut seen = HashSet::new();
        for &m in &metric_ids {
            if !seen.insert(m) {
                return Err(MetricError::DuplicateMetricId(m));
            }
        }
        for (&m, &v) in metric_ids.iter().zip(&values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricError::ValueOutOfRange { metric: m, value: v });
            }
        }
        Ok(MetricProfile { metric_ids, values })
    }

    pub fn metric_ids(&self) -> &[MetricId] {
        &self.metric_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_of(&self, metric: MetricId) -> Option<f64> {
        self.metric_ids
            .iter()
            .position(|&m| m == metric)
            .map(|k| self.values[k])
    }

    pub fn same_metrics(&self, other: &MetricProfile) -> bool {
        self.metric_ids == other.metric_ids
    }
}

/// Evaluates the requested measures on one decision vector. The confusion
/// tally is computed once and every measure is derived from it.
pub fn profile(
    d: &DecisionVector,
    ds: &Dataset,
    metric_ids: &[MetricId],
) -> Result<MetricProfile, MetricError> {
    if metric_ids.is_empty() {
        return Err(MetricError::EmptyMetricList);
    }
    let counts = confusion_counts(d, ds)?;
    let values: Vec<f64> = metric_ids
        .iter()
        .map(|&m| metric_from_counts(m, &counts))
        .collect();
    MetricProfile::new(metric_ids.to_vec(), values)
}

/// Parses a comma-separated metric list, e.g. `"err,d_dp,d_eqodds,d_prp"`.
pub fn parse_metric_ids(s: &str) -> Result<Vec<MetricId>, MetricError> {
    let ids: Vec<MetricId> = s
        .split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(MetricId::from_str)
        .collect::<Result<_, _>>()?;
    if ids.is_empty() {
        return Err(MetricError::EmptyMetricList);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use crate::dataset::Dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Dataset with the given labels/groups and trivial features.
    fn tiny(labels: Vec<u8>, groups: Vec<u8>) -> Dataset {
        let m = labels.len();
        let features = vec![1.0; m];
        let ids = (0..m as u64).collect();
        Dataset::from_parts(features, 1, labels, groups, ids, vec!["bias".into()]).unwrap()
    }

    fn decisions(values: Vec<u8>, m: usize) -> DecisionVector {
        DecisionVector::new(values, (0..m as u64).collect()).unwrap()
    }

    #[test]
    fn confusion_hand_tally() {
        // yhat=[1,0,1,0], y=[1,1,0,0], a=[1,1,0,0]
        let ds = tiny(vec![1, 1, 0, 0], vec![1, 1, 0, 0]);
        let d = decisions(vec![1, 0, 1, 0], 4);
        let c = confusion_counts(&d, &ds).unwrap();
        assert_eq!(c.group1, ConfusionCounts { tp: 1, fp: 0, tn: 0, fn_: 1 });
        assert_eq!(c.group0, ConfusionCounts { tp: 0, fp: 1, tn: 1, fn_: 0 });
        assert_eq!(c.total(), 4);
    }

    #[test]
    fn confusion_perfect_and_empty_group() {
        let ds = tiny(vec![1, 0, 1, 0], vec![1, 0, 1, 0]);
        let d = decisions(vec![1, 0, 1, 0], 4);
        let c = confusion_counts(&d, &ds).unwrap();
        assert_eq!(c.group0.fp + c.group0.fn_ + c.group1.fp + c.group1.fn_, 0);

        let all1 = tiny(vec![1, 0], vec![1, 1]);
        let c = confusion_counts(&decisions(vec![1, 1], 2), &all1).unwrap();
        assert_eq!(c.group0, ConfusionCounts::default());
    }

    #[test]
    fn unresolved_id_errors() {
        let ds = tiny(vec![1, 0], vec![1, 0]);
        let d = DecisionVector::new(vec![1, 0], vec![0, 99]).unwrap();
        assert!(matches!(
            confusion_counts(&d, &ds),
            Err(MetricError::UnresolvedId(99))
        ));
    }

    #[test]
    fn prediction_error_hand_cases() {
        let ds = tiny(vec![1, 1, 1, 1], vec![1, 1, 0, 0]);
        assert_eq!(prediction_error(&decisions(vec![1, 1, 1, 1], 4), &ds).unwrap(), 0.0);
        assert_eq!(prediction_error(&decisions(vec![0, 0, 0, 0], 4), &ds).unwrap(), 1.0);
        assert_eq!(prediction_error(&decisions(vec![1, 0, 1, 0], 4), &ds).unwrap(), 0.5);
    }

    #[test]
    fn d_dp_hand_cases() {
        let ds = tiny(vec![0, 0, 0, 0], vec![1, 1, 0, 0]);
        assert_eq!(d_dp(&decisions(vec![1, 0, 1, 0], 4), &ds).unwrap(), 0.0);
        assert_eq!(d_dp(&decisions(vec![1, 1, 0, 0], 4), &ds).unwrap(), 1.0);
        // empty group 0: its rate is defined as 0, so all-ones on an all-group-1
        // dataset reads |1 - 0| = 1
        let ds1 = tiny(vec![0, 0, 0, 0], vec![1, 1, 1, 1]);
        assert_eq!(d_dp(&decisions(vec![1, 1, 1, 1], 4), &ds1).unwrap(), 1.0);
    }

    #[test]
    fn d_eqodds_hand_cases() {
        // yhat=[1,0,1,0], y=[1,1,1,1], a=[1,1,0,0]: TPR gap 0, FPR strata empty
        let ds = tiny(vec![1, 1, 1, 1], vec![1, 1, 0, 0]);
        assert_eq!(d_eqodds(&decisions(vec![1, 0, 1, 0], 4), &ds).unwrap(), 0.0);
        // yhat=[1,0,0,0], y=[1,1,0,0], a=[1,0,1,0]
        let ds2 = tiny(vec![1, 1, 0, 0], vec![1, 0, 1, 0]);
        assert_eq!(d_eqodds(&decisions(vec![1, 0, 0, 0], 4), &ds2).unwrap(), 1.0);
        // perfect prediction, both groups in both strata
        let ds3 = tiny(vec![1, 0, 1, 0], vec![1, 1, 0, 0]);
        assert_eq!(d_eqodds(&decisions(vec![1, 0, 1, 0], 4), &ds3).unwrap(), 0.0);
    }

    #[test]
    fn d_prp_hand_cases() {
        // yhat=[1,1,1,1], y=[1,0,1,0], a=[1,1,0,0]: PPV 1/2 in both groups
        let ds = tiny(vec![1, 0, 1, 0], vec![1, 1, 0, 0]);
        assert_eq!(d_prp(&decisions(vec![1, 1, 1, 1], 4), &ds).unwrap(), 0.0);
        // yhat=[1,1,0,0], y=[1,0,0,1], a=[1,0,1,0]
        let ds2 = tiny(vec![1, 0, 0, 1], vec![1, 0, 1, 0]);
        assert_eq!(d_prp(&decisions(vec![1, 1, 0, 0], 4), &ds2).unwrap(), 1.0);
        // d == y with both decisions in both groups
        let ds3 = tiny(vec![1, 0, 1, 0], vec![1, 1, 0, 0]);
        assert_eq!(d_prp(&decisions(vec![1, 0, 1, 0], 4), &ds3).unwrap(), 0.0);
    }

    #[test]
    fn d_fnr_d_fpr_hand_cases() {
        let ds = tiny(vec![1, 1, 1, 1], vec![1, 1, 0, 0]);
        assert_eq!(d_fnr(&decisions(vec![0, 1, 1, 1], 4), &ds).unwrap(), 0.5);
        let ds2 = tiny(vec![0, 0, 0, 0], vec![1, 1, 0, 0]);
        assert_eq!(d_fpr(&decisions(vec![1, 0, 0, 0], 4), &ds2).unwrap(), 0.5);
        let ds3 = tiny(vec![1, 0, 1, 0], vec![1, 1, 0, 0]);
        let d = decisions(vec![1, 0, 1, 0], 4);
        assert_eq!(d_fnr(&d, &ds3).unwrap(), 0.0);
        assert_eq!(d_fpr(&d, &ds3).unwrap(), 0.0);
    }

    #[test]
    fn profile_matches_individual_ops_and_order() {
        let ds = generate_synthetic(21, 60, 4, 0.4, 0.3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let values: Vec<u8> = (0..ds.len()).map(|_| rng.random_range(0..2u8)).collect();
        let d = DecisionVector::new(values, ds.ids().to_vec()).unwrap();

        let single = profile(&d, &ds, &[MetricId::Err]).unwrap();
        let pair = profile(&d, &ds, &[MetricId::Err, MetricId::DDp]).unwrap();
        assert_eq!(single.values()[0], pair.values()[0]);
        assert_eq!(pair.values()[1], d_dp(&d, &ds).unwrap());
    }

    #[test]
    fn profile_rejects_duplicates_and_empty() {
        let ds = tiny(vec![1, 0], vec![1, 0]);
        let d = decisions(vec![1, 0], 2);
        assert!(matches!(
            profile(&d, &ds, &[MetricId::Err, MetricId::Err]),
            Err(MetricError::DuplicateMetricId(MetricId::Err))
        ));
        assert!(matches!(
            profile(&d, &ds, &[]),
            Err(MetricError::EmptyMetricList)
        ));
    }

    #[test]
    fn parse_metric_ids_round_trip() {
        let ids = parse_metric_ids("err,d_dp,d_eqodds,d_prp,d_fnr,d_fpr").unwrap();
        assert_eq!(ids, MetricId::ALL.to_vec());
        assert!(parse_metric_ids("bogus").is_err());
    }

    // ------------------------------------------------------------------
    // Brute-force oracle: independent per-metric recounts straight from the
    // raw vectors, no shared confusion tally.
    // ------------------------------------------------------------------

    fn count<F: Fn(u8, u8, u8) -> bool>(d: &[u8], y: &[u8], a: &[u8], pred: F) -> usize {
        (0..d.len()).filter(|&i| pred(d[i], y[i], a[i])).count()
    }

    fn brute_rate(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    fn brute_force(metric: MetricId, d: &[u8], y: &[u8], a: &[u8]) -> f64 {
        match metric {
            MetricId::Err => {
                count(d, y, a, |d, y, _| d != y) as f64 / d.len() as f64
            }
            MetricId::DDp => {
                let r = |g: u8| {
                    brute_rate(
                        count(d, y, a, |d, _, a| d == 1 && a == g),
                        count(d, y, a, |_, _, a| a == g),
                    )
                };
                (r(1) - r(0)).abs()
            }
            MetricId::DEqodds => {
                let r = |g: u8, stratum: u8| {
                    brute_rate(
                        count(d, y, a, |d, y, a| d == 1 && y == stratum && a == g),
                        count(d, y, a, |_, y, a| y == stratum && a == g),
                    )
                };
                let d1 = (r(1, 1) - r(0, 1)).abs();
                let d0 = (r(1, 0) - r(0, 0)).abs();
                d1.max(d0)
            }
            MetricId::DPrp => {
                let r = |g: u8, stratum: u8| {
                    brute_rate(
                        count(d, y, a, |d, y, a| y == 1 && d == stratum && a == g),
                        count(d, y, a, |d, _, a| d == stratum && a == g),
                    )
                };
                let d1 = (r(1, 1) - r(0, 1)).abs();
                let d0 = (r(1, 0) - r(0, 0)).abs();
                d1.max(d0)
            }
            MetricId::DFnr => {
                let r = |g: u8| {
                    brute_rate(
                        count(d, y, a, |d, y, a| d == 0 && y == 1 && a == g),
                        count(d, y, a, |_, y, a| y == 1 && a == g),
                    )
                };
                (r(1) - r(0)).abs()
            }
            MetricId::DFpr => {
                let r = |g: u8| {
                    brute_rate(
                        count(d, y, a, |d, y, a| d == 1 && y == 0 && a == g),
                        count(d, y, a, |_, y, a| y == 0 && a == g),
                    )
                };
                (r(1) - r(0)).abs()
            }
        }
    }

    #[test]
    fn all_metrics_equal_brute_force_on_random_instances() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..200 {
            let m = rng.random_range(1..=50);
            let y: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
            let a: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
            let dv: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
            let ds = tiny(y.clone(), a.clone());
            let d = decisions(dv.clone(), m);
            let prof = profile(&d, &ds, &MetricId::ALL).unwrap();
            for (k, &metric) in MetricId::ALL.iter().enumerate() {
                let expect = brute_force(metric, &dv, &y, &a);
                assert_eq!(
                    prof.values()[k], expect,
                    "metric {metric} mismatch on d={dv:?} y={y:?} a={a:?}"
                );
            }
        }
    }

    // ------------------------------------------------------------------
    // Property tests
    // ------------------------------------------------------------------

    use proptest::prelude::*;

    fn instance() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
        (1usize..40).prop_flat_map(|m| {
            (
                proptest::collection::vec(0u8..2, m),
                proptest::collection::vec(0u8..2, m),
                proptest::collection::vec(0u8..2, m),
            )
        })
    }

    proptest! {
        #[test]
        fn metrics_lie_in_unit_interval((dv, y, a) in instance()) {
            let ds = tiny(y, a);
            let d = decisions(dv, ds.len());
            let prof = profile(&d, &ds, &MetricId::ALL).unwrap();
            for &v in prof.values() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn metrics_invariant_under_joint_permutation((dv, y, a) in instance(), seed in any::<u64>()) {
            let m = dv.len();
            let mut order: Vec<usize> = (0..m).collect();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for i in (1..m).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let permuted = |xs: &[u8]| order.iter().map(|&i| xs[i]).collect::<Vec<u8>>();
            let base = profile(
                &decisions(dv.clone(), m),
                &tiny(y.clone(), a.clone()),
                &MetricId::ALL,
            ).unwrap();
            let perm = profile(
                &decisions(permuted(&dv), m),
                &tiny(permuted(&y), permuted(&a)),
                &MetricId::ALL,
            ).unwrap();
            for k in 0..MetricId::ALL.len() {
                prop_assert_eq!(base.values()[k], perm.values()[k]);
            }
        }

        #[test]
        fn group_swap_leaves_differences_unchanged((dv, y, a) in instance()) {
            let m = dv.len();
            let swapped: Vec<u8> = a.iter().map(|&g| 1 - g).collect();
            let base = profile(&decisions(dv.clone(), m), &tiny(y.clone(), a), &MetricId::ALL).unwrap();
            let swap = profile(&decisions(dv, m), &tiny(y, swapped), &MetricId::ALL).unwrap();
            for k in 0..MetricId::ALL.len() {
                prop_assert!((base.values()[k] - swap.values()[k]).abs() < 1e-15);
            }
        }

        #[test]
        fn d_dp_ignores_labels_err_ignores_groups((dv, y, a) in instance(), y2 in proptest::collection::vec(0u8..2, 1..40), a2 in proptest::collection::vec(0u8..2, 1..40)) {
            let m = dv.len();
            prop_assume!(y2.len() >= m && a2.len() >= m);
            let d = decisions(dv, m);
            let dp1 = d_dp(&d, &tiny(y.clone(), a.clone())).unwrap();
            let dp2 = d_dp(&d, &tiny(y2[..m].to_vec(), a.clone())).unwrap();
            prop_assert_eq!(dp1, dp2);
            let e1 = prediction_error(&d, &tiny(y.clone(), a)).unwrap();
            let e2 = prediction_error(&d, &tiny(y, a2[..m].to_vec())).unwrap();
            prop_assert_eq!(e1, e2);
        }
    }
}
