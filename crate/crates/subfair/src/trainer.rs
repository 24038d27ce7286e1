//! Policy-gradient minimization of subdominance against a demonstration set.
//!
//! Each iteration samples one decision vector per demonstration item set,
//! profiles it against the clean ground truth, minimizes the per-feature
//! hinge slope in closed form (per sample, against all demonstration
//! profiles), and descends the score-function gradient weighted by the
//! summed minimized objectives. The reported model is the one whose sampled
//! objective estimate was lowest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::demogen::{fit_base_scorer, DemogenError, DemonstrationSet};
use crate::metrics::{profile, MetricError, MetricId};
use crate::policy::{init_policy, log_prob_gradient, sample_decisions, PolicyError, PolicyModel};
use crate::subdominance::{optimize_alpha, AlphaVector, SubdominanceError};

/// Version tag written into training report files.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("learning rate must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("max_iters must be at least 1")]
    ZeroIters,
    #[error("samples_per_demo must be at least 1")]
    ZeroSamples,
    #[error("config metric ids do not match the demonstration set's")]
    MetricIdMismatch,
    #[error("demonstration set is empty")]
    EmptyDemos,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Subdominance(#[from] SubdominanceError),
    #[error(transparent)]
    Demogen(#[from] DemogenError),
    #[error("unsupported report schema version {0}")]
    UnsupportedVersion(u32),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report parse error on {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Initial weights for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// All-zero weights (uniform random decisions).
    Zero,
    /// Logistic fit on the clean training data. Starting from a competent
    /// decision maker keeps every feature's hinge slope responsive from the
    /// first iteration.
    #[default]
    Warm,
}

impl std::str::FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(InitMode::Zero),
            "warm" => Ok(InitMode::Warm),
            other => Err(format!("unknown init mode '{other}' (expected zero or warm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub lambda: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub samples_per_demo: usize,
    pub seed: u64,
    pub metric_ids: Vec<MetricId>,
    #[serde(default)]
    pub init: InitMode,
}

impl TrainConfig {
    pub fn new(metric_ids: Vec<MetricId>, seed: u64) -> Self {
        TrainConfig {
            eta: 0.01,
            lambda: 0.01,
            max_iters: 300,
            patience: 30,
            samples_per_demo: 1,
            seed,
            metric_ids,
            init: InitMode::default(),
        }
    }

    fn validate(&self, demos: &DemonstrationSet) -> Result<(), TrainError> {
        if !(self.eta > 0.0) {
            return Err(TrainError::NonPositiveEta(self.eta));
        }
        if !(self.lambda >= 0.0) {
            return Err(TrainError::NegativeLambda(self.lambda));
        }
        if self.max_iters == 0 {
            return Err(TrainError::ZeroIters);
        }
        if self.samples_per_demo == 0 {
            return Err(TrainError::ZeroSamples);
        }
        if demos.is_empty() {
            return Err(TrainError::EmptyDemos);
        }
        if demos.provenance.metric_ids != self.metric_ids {
            return Err(TrainError::MetricIdMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub final_theta: PolicyModel,
    /// Per-iteration hinge slopes, averaged over the iteration's samples.
    pub alpha_history: Vec<AlphaVector>,
    /// Per-iteration mean of the sampled per-feature objectives.
    pub subdom_history: Vec<f64>,
    pub iterations_run: usize,
    /// Iteration whose objective estimate was lowest; `final_theta` is the
    /// model that produced it.
    pub best_iteration: usize,
    /// Slopes recorded at the best iteration.
    pub best_alpha: AlphaVector,
    pub metric_ids: Vec<MetricId>,
}

impl TrainReport {
    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let bytes = serde_json::to_vec(self).expect("report serialization cannot fail");
        std::fs::write(path, bytes).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<TrainReport, TrainError> {
        let bytes = std::fs::read(path).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let report: TrainReport =
            serde_json::from_slice(&bytes).map_err(|source| TrainError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(TrainError::UnsupportedVersion(report.schema_version));
        }
        Ok(report)
    }
}

/// Summed minimized per-feature objectives of one sampled decision vector
/// against all demonstration profiles, plus the per-feature slopes.
fn sample_objective(
    sample_values: &[f64],
    demo_values_per_k: &[Vec<f64>],
    lambda: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let mut total = 0.0;
    let mut alphas = Vec::with_capacity(sample_values.len());
    for (k, &f_hat) in sample_values.iter().enumerate() {
        let sol = optimize_alpha(f_hat, &demo_values_per_k[k], lambda)?;
        total += sol.gamma_k;
        alphas.push(sol.alpha);
    }
    Ok((total, alphas))
}

/// Runs the training loop and returns the best model by sampled objective.
pub fn train(
    demos: &DemonstrationSet,
    train_sh: &Dataset,
    config: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    config.validate(demos)?;
    let n = demos.len();
    let k = config.metric_ids.len();
    let rows_per_demo: Vec<Vec<usize>> = demos
        .demos
        .iter()
        .map(|d| train_sh.rows_for_ids(d.item_ids()))
        .collect::<Result<_, _>>()?;
    let demo_values_per_k: Vec<Vec<f64>> = (0..k).map(|kk| demos.feature_values(kk)).collect();

    let mut model = match config.init {
        InitMode::Zero => init_policy(train_sh.n_features())?,
        InitMode::Warm => fit_base_scorer(train_sh)?,
    };

    let mut alpha_history: Vec<AlphaVector> = Vec::new();
    let mut subdom_history: Vec<f64> = Vec::new();
    let mut best_subdom = f64::INFINITY;
    let mut best_theta = model.clone();
    let mut best_iteration = 0usize;
    let mut sample_counter: u64 = 0;

    for iter in 0..config.max_iters {
        let l = train_sh.n_features();
        let mut grad_acc = vec![0.0; l];
        let mut subdom_sum = 0.0;
        let mut alpha_sum = vec![0.0; k];
        let total_samples = (n * config.samples_per_demo) as f64;

        for rows in &rows_per_demo {
            for _ in 0..config.samples_per_demo {
                let seed = config.seed.wrapping_add(sample_counter);
                sample_counter += 1;
                let sampled = sample_decisions(&model, train_sh, rows, seed)?;
                let prof = profile(&sampled, train_sh, &config.metric_ids)?;
                let (objective, alphas) =
                    sample_objective(prof.values(), &demo_values_per_k, config.lambda)?;
                let grad = log_prob_gradient(&model, train_sh, &sampled)?;
                for (acc, g) in grad_acc.iter_mut().zip(&grad) {
                    *acc += objective * g;
                }
                for (acc, a) in alpha_sum.iter_mut().zip(&alphas) {
                    *acc += a;
                }
                subdom_sum += objective;
            }
        }

        let mean_subdom = subdom_sum / total_samples;
        subdom_history.push(mean_subdom);
        alpha_history.push(AlphaVector::new(
            alpha_sum.iter().map(|a| a / total_samples).collect(),
        )?);
        if mean_subdom < best_subdom {
            best_subdom = mean_subdom;
            best_theta = model.clone();
            best_iteration = iter;
        }

        // Descent step on the expected objective: the score-function
        // estimator points uphill, so subtract it.
        let step = config.eta / total_samples;
        let theta: Vec<f64> = model
            .theta()
            .iter()
            .zip(&grad_acc)
            .map(|(w, g)| w - step * g)
            .collect();
        model = PolicyModel::new(theta)?;

        if iter - best_iteration >= config.patience {
            break;
        }
    }

    let best_alpha = alpha_history[best_iteration].clone();
    let iterations_run = subdom_history.len();
    Ok(TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        final_theta: best_theta,
        alpha_history,
        subdom_history,
        iterations_run,
        best_iteration,
        best_alpha,
        metric_ids: config.metric_ids.clone(),
    })
}

/// Monte-Carlo estimate of the training objective for a fixed model: one
/// sampled decision vector per demonstration item set (seed plus demo
/// index), each scored by its summed minimized per-feature objective.
pub fn mean_subdominance(
    model: &PolicyModel,
    demos: &DemonstrationSet,
    train_sh: &Dataset,
    lambda: f64,
    metric_ids: &[MetricId],
    seed: u64,
) -> Result<f64, TrainError> {
    if demos.is_empty() {
        return Err(TrainError::EmptyDemos);
    }
    if demos.provenance.metric_ids != metric_ids {
        return Err(TrainError::MetricIdMismatch);
    }
    let k = metric_ids.len();
    let demo_values_per_k: Vec<Vec<f64>> = (0..k).map(|kk| demos.feature_values(kk)).collect();
    let mut total = 0.0;
    for (i, d) in demos.demos.iter().enumerate() {
        let rows = train_sh.rows_for_ids(d.item_ids())?;
        let sampled = sample_decisions(model, train_sh, &rows, seed.wrapping_add(i as u64))?;
        let prof = profile(&sampled, train_sh, metric_ids)?;
        let (objective, _) = sample_objective(prof.values(), &demo_values_per_k, lambda)?;
        total += objective;
    }
    Ok(total / demos.len() as f64)
}
