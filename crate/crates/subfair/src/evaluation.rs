//! Pareto-dominance evaluation, gamma measurement, and result export.
//!
//! A model is gamma-superhuman when its metric profile weakly dominates at
//! least a gamma fraction of reference-decision profiles (componentwise <=,
//! ties count). Evaluation builds profiles for the trained model and the
//! baseline decision makers on the withheld test split, measures gamma
//! against both the training demonstrations and a fresh held-out
//! demonstration set, and writes the comparison table and plot data files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::demogen::{
    apply_thresholds, fit_base_scorer, postprocess, Constraint, DemogenError, DemonstrationSet,
};
use crate::metrics::{profile, MetricError, MetricId, MetricProfile};
use crate::policy::{hard_decisions, predict_proba, PolicyError, PolicyModel};
use crate::seeds;
use crate::subdominance::{
    generalization_gamma, optimize_alpha, support_vectors, AlphaVector, SubdominanceError,
};
use crate::trainer::TrainReport;

/// Method identifiers used in reports. The last three are known baselines
/// this artifact does not implement; they appear in tables as unavailable.
pub const METHOD_SUBDOMINANCE: &str = "subdominance";
pub const METHOD_POST_PROC_DP: &str = "post_proc_dp";
pub const METHOD_POST_PROC_EQODDS: &str = "post_proc_eqodds";
pub const METHOD_LOGISTIC: &str = "logistic";
pub const UNAVAILABLE_METHODS: [&str; 3] = ["mfopt", "fair_logloss_dp", "fair_logloss_eqodds"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("profiles have mismatched metric ids")]
    MetricIdMismatch,
    #[error("demonstration profile list is empty")]
    EmptyDemos,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Demogen(#[from] DemogenError),
    #[error(transparent)]
    Subdominance(#[from] SubdominanceError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Weak componentwise dominance: `a` dominates `b` when every component of
/// `a` is at most the matching component of `b`.
pub fn pareto_dominates(a: &MetricProfile, b: &MetricProfile) -> Result<bool, EvalError> {
    if !a.same_metrics(b) {
        return Err(EvalError::MetricIdMismatch);
    }
    Ok(a.values().iter().zip(b.values()).all(|(x, y)| x <= y))
}

/// Fraction of reference profiles weakly dominated by the model profile.
pub fn gamma_superhuman(
    model_profile: &MetricProfile,
    demo_profiles: &[MetricProfile],
) -> Result<f64, EvalError> {
    if demo_profiles.is_empty() {
        return Err(EvalError::EmptyDemos);
    }
    let mut dominated = 0usize;
    for demo in demo_profiles {
        if pareto_dominates(model_profile, demo)? {
            dominated += 1;
        }
    }
    Ok(dominated as f64 / demo_profiles.len() as f64)
}

/// Per-feature fraction of reference profiles the model matches or beats in
/// that feature alone (the per-metric row of the comparison table).
pub fn gamma_per_metric(
    model_profile: &MetricProfile,
    demo_profiles: &[MetricProfile],
) -> Result<Vec<f64>, EvalError> {
    if demo_profiles.is_empty() {
        return Err(EvalError::EmptyDemos);
    }
    let k = model_profile.len();
    let mut out = vec![0.0; k];
    for demo in demo_profiles {
        if !model_profile.same_metrics(demo) {
            return Err(EvalError::MetricIdMismatch);
        }
        for kk in 0..k {
            if model_profile.values()[kk] <= demo.values()[kk] {
                out[kk] += 1.0;
            }
        }
    }
    for v in &mut out {
        *v /= demo_profiles.len() as f64;
    }
    Ok(out)
}

/// One method's test-split evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    pub profile: MetricProfile,
    /// Gamma against the training demonstration profiles.
    pub gamma_train: f64,
    /// Gamma against the fresh held-out demonstration profiles.
    pub gamma_test: f64,
}

/// Full comparison report on the withheld test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metric_ids: Vec<MetricId>,
    pub methods: Vec<MethodEval>,
    /// Per-metric gamma of the subdominance method against held-out
    /// demonstrations.
    pub gamma_per_metric: Vec<f64>,
    /// Held-out demonstration profiles used for the test-time gammas.
    pub demo_profiles: Vec<MetricProfile>,
    /// Hinge slopes recorded at the best training iteration.
    pub alpha: AlphaVector,
    /// Support-vector generalization diagnostic on the training
    /// demonstrations.
    pub bound_gamma: f64,
    pub support_union_size: usize,
}

impl EvaluationReport {
    pub fn method(&self, name: &str) -> Option<&MethodEval> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Evaluates one model's hard decisions on the test split against a
/// demonstration set.
pub fn evaluate_on_test(
    model: &PolicyModel,
    test_sh: &Dataset,
    demos_for_eval: &DemonstrationSet,
    metric_ids: &[MetricId],
) -> Result<MethodEval, EvalError> {
    let hard = hard_decisions(model, test_sh, &test_sh.all_rows())?;
    let prof = profile(&hard, test_sh, metric_ids)?;
    let gamma = gamma_superhuman(&prof, &demos_for_eval.profiles)?;
    Ok(MethodEval {
        method: METHOD_SUBDOMINANCE.to_string(),
        profile: prof,
        gamma_train: gamma,
        gamma_test: gamma,
    })
}

/// Recomputes the support-vector union of the final model over the training
/// demonstrations: hard decisions on each demonstration's item set, slopes
/// re-optimized per feature, union over features and decision vectors.
pub fn support_union(
    model: &PolicyModel,
    demos: &DemonstrationSet,
    train_sh: &Dataset,
    lambda: f64,
    metric_ids: &[MetricId],
) -> Result<Vec<usize>, EvalError> {
    let k = metric_ids.len();
    let demo_values_per_k: Vec<Vec<f64>> = (0..k).map(|kk| demos.feature_values(kk)).collect();
    let mut in_union = vec![false; demos.len()];
    for d in &demos.demos {
        let rows = train_sh.rows_for_ids(d.item_ids())?;
        let hard = hard_decisions(model, train_sh, &rows)?;
        let prof = profile(&hard, train_sh, metric_ids)?;
        for (kk, &f_hat) in prof.values().iter().enumerate() {
            let sol = optimize_alpha(f_hat, &demo_values_per_k[kk], lambda)?;
            for j in support_vectors(f_hat, &demo_values_per_k[kk], sol.alpha)? {
                in_union[j] = true;
            }
        }
    }
    Ok((0..demos.len()).filter(|&j| in_union[j]).collect())
}

/// Inputs for [`build_report`].
pub struct ReportInputs<'a> {
    pub train_report: &'a TrainReport,
    pub train_sh: &'a Dataset,
    pub test_sh: &'a Dataset,
    pub train_demos: &'a DemonstrationSet,
    pub eval_demos: &'a DemonstrationSet,
    pub lambda: f64,
    pub seed: u64,
}

/// Builds the full comparison report: the trained model plus the
/// post-processing baselines and the unconstrained logistic scorer, all
/// profiled on the test split.
pub fn build_report(inputs: &ReportInputs) -> Result<EvaluationReport, EvalError> {
    let metric_ids = inputs.train_report.metric_ids.clone();
    let test = inputs.test_sh;
    let baseline_seed = seeds::derive(inputs.seed, seeds::stage::BASELINE);

    let mut methods: Vec<MethodEval> = Vec::new();
    let mut profiles: Vec<(String, MetricProfile)> = Vec::new();

    // trained model
    let hard = hard_decisions(&inputs.train_report.final_theta, test, &test.all_rows())?;
    profiles.push((
        METHOD_SUBDOMINANCE.to_string(),
        profile(&hard, test, &metric_ids)?,
    ));

    // baselines on the clean training split
    let scorer = fit_base_scorer(inputs.train_sh)?;
    let train_scores = predict_proba(&scorer, inputs.train_sh, &inputs.train_sh.all_rows())?;
    let test_scores = predict_proba(&scorer, test, &test.all_rows())?;
    for (name, constraint) in [
        (METHOD_POST_PROC_DP, Constraint::Dp),
        (METHOD_POST_PROC_EQODDS, Constraint::Eqodds),
    ] {
        let th = postprocess(
            &train_scores,
            inputs.train_sh.groups(),
            inputs.train_sh.labels(),
            constraint,
        )?;
        let d = apply_thresholds(
            &th,
            &test_scores,
            test.groups(),
            test.ids(),
            seeds::derive(baseline_seed, constraint as u64 + 1),
        )?;
        profiles.push((name.to_string(), profile(&d, test, &metric_ids)?));
    }
    let raw = hard_decisions(&scorer, test, &test.all_rows())?;
    profiles.push((METHOD_LOGISTIC.to_string(), profile(&raw, test, &metric_ids)?));

    for (name, prof) in profiles {
        let gamma_train = gamma_superhuman(&prof, &inputs.train_demos.profiles)?;
        let gamma_test = gamma_superhuman(&prof, &inputs.eval_demos.profiles)?;
        methods.push(MethodEval {
            method: name,
            profile: prof,
            gamma_train,
            gamma_test,
        });
    }

    let union = support_union(
        &inputs.train_report.final_theta,
        inputs.train_demos,
        inputs.train_sh,
        inputs.lambda,
        &metric_ids,
    )?;
    let bound_gamma = generalization_gamma(union.len(), inputs.train_demos.len())?;
    let gamma_per = gamma_per_metric(
        &methods[0].profile,
        &inputs.eval_demos.profiles,
    )?;

    Ok(EvaluationReport {
        metric_ids,
        methods,
        gamma_per_metric: gamma_per,
        demo_profiles: inputs.eval_demos.profiles.clone(),
        alpha: inputs.train_report.best_alpha.clone(),
        bound_gamma,
        support_union_size: union.len(),
    })
}

// ---------------------------------------------------------------------------
// File export
// ---------------------------------------------------------------------------

fn write_file(path: &Path, content: &str) -> Result<(), EvalError> {
    std::fs::write(path, content).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn fmt_value(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes the comparison table, per-metric-pair scatter data, and (through
/// [`append_gamma_row`]) the gamma-vs-epsilon curve. Formats are documented
/// in the repository README. Margin-boundary values are the reciprocals of
/// the learned hinge slopes (0 slope yields an empty margin field).
pub fn export_results(
    report: &EvaluationReport,
    demo_profiles: &[MetricProfile],
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>, EvalError> {
    if demo_profiles.is_empty() {
        return Err(EvalError::EmptyDemos);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| EvalError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    // table_comparison.csv
    let metric_names: Vec<&str> = report.metric_ids.iter().map(|m| m.as_str()).collect();
    let mut table = String::new();
    table.push_str(&format!(
        "row,method,{},gamma_train,gamma_test\n",
        metric_names.join(",")
    ));
    for m in &report.methods {
        let vals: Vec<String> = m.profile.values().iter().map(|&v| fmt_value(v)).collect();
        table.push_str(&format!(
            "profile,{},{},{},{}\n",
            m.method,
            vals.join(","),
            fmt_value(m.gamma_train),
            fmt_value(m.gamma_test)
        ));
    }
    for name in UNAVAILABLE_METHODS {
        let na = vec!["NA"; report.metric_ids.len() + 2].join(",");
        table.push_str(&format!("profile,{name},{na}\n"));
    }
    let alpha_vals: Vec<String> = report.alpha.values().iter().map(|&v| fmt_value(v)).collect();
    table.push_str(&format!(
        "alpha,{},{},NA,NA\n",
        METHOD_SUBDOMINANCE,
        alpha_vals.join(",")
    ));
    let gamma_vals: Vec<String> = report
        .gamma_per_metric
        .iter()
        .map(|&v| fmt_value(v))
        .collect();
    table.push_str(&format!(
        "gamma_per_metric,{},{},NA,NA\n",
        METHOD_SUBDOMINANCE,
        gamma_vals.join(",")
    ));
    let na_metrics = vec!["NA"; report.metric_ids.len()].join(",");
    table.push_str(&format!(
        "bound_gamma,{},{na_metrics},{},NA\n",
        METHOD_SUBDOMINANCE,
        fmt_value(report.bound_gamma)
    ));
    let table_path = out_dir.join("table_comparison.csv");
    write_file(&table_path, &table)?;
    written.push(table_path);

    // scatter_<a>_<b>.csv for every metric pair
    for i in 0..report.metric_ids.len() {
        for j in (i + 1)..report.metric_ids.len() {
            let (ma, mb) = (report.metric_ids[i], report.metric_ids[j]);
            let mut out = String::new();
            out.push_str(&format!("kind,label,{},{}\n", ma.as_str(), mb.as_str()));
            for (idx, demo) in demo_profiles.iter().enumerate() {
                if !demo_profiles[0].same_metrics(demo) {
                    return Err(EvalError::MetricIdMismatch);
                }
                out.push_str(&format!(
                    "demo,demo_{idx},{},{}\n",
                    fmt_value(demo.values()[i]),
                    fmt_value(demo.values()[j])
                ));
            }
            for m in &report.methods {
                out.push_str(&format!(
                    "method,{},{},{}\n",
                    m.method,
                    fmt_value(m.profile.values()[i]),
                    fmt_value(m.profile.values()[j])
                ));
            }
            let margin = |k: usize| -> String {
                let a = report.alpha.values()[k];
                if a > 0.0 {
                    fmt_value(1.0 / a)
                } else {
                    String::new()
                }
            };
            out.push_str(&format!(
                "margin,{},{},{}\n",
                METHOD_SUBDOMINANCE,
                margin(i),
                margin(j)
            ));
            let path = out_dir.join(format!("scatter_{}_{}.csv", ma.as_str(), mb.as_str()));
            write_file(&path, &out)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// One row of `gamma_vs_epsilon.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub epsilon: f64,
    pub method: String,
    pub gamma_train: f64,
    pub gamma_test: f64,
}

/// Writes the noise-sweep curve file consumed by plotting tools.
pub fn write_gamma_curve(rows: &[GammaRow], out_dir: &Path) -> Result<std::path::PathBuf, EvalError> {
    std::fs::create_dir_all(out_dir).map_err(|source| EvalError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut out = String::from("epsilon,method,gamma_train,gamma_test\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.epsilon,
            row.method,
            fmt_value(row.gamma_train),
            fmt_value(row.gamma_test)
        ));
    }
    let path = out_dir.join("gamma_vs_epsilon.csv");
    write_file(&path, &out)?;
    Ok(path)
}
