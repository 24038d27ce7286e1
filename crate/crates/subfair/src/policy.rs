//! The probabilistic decision model: per-item independent logistic decisions.
//!
//! A [`PolicyModel`] holds a weight vector over the dataset's feature columns
//! (intercept included, since the loaders append a constant feature). Items
//! receive independent Bernoulli decisions with probability `sigma(theta . x)`;
//! training needs samples, the score-function gradient, and hard (most
//! probable) decisions for evaluation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::metrics::{DecisionVector, MetricError};

/// Version tag written into policy model files.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Probabilities are clamped to this range inside log computations only.
const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy needs at least one weight")]
    EmptyTheta,
    #[error("non-finite weight at index {0}")]
    NonFiniteWeight(usize),
    #[error("model has {model} weights but items have {items} features")]
    DimensionMismatch { model: usize, items: usize },
    #[error("row index {0} out of bounds")]
    RowOutOfBounds(usize),
    #[error("no rows selected")]
    NoRows,
    #[error("decision vector does not align with the dataset: {0}")]
    Decisions(#[from] MetricError),
    #[error("unsupported model schema version {0}")]
    UnsupportedVersion(u32),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model parse error on {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Weight vector of the logistic decision model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    theta: Vec<f64>,
}

impl PolicyModel {
    pub fn new(theta: Vec<f64>) -> Result<Self, PolicyError> {
        if theta.is_empty() {
            return Err(PolicyError::EmptyTheta);
        }
        if let Some(i) = theta.iter().position(|w| !w.is_finite()) {
            return Err(PolicyError::NonFiniteWeight(i));
        }
        Ok(PolicyModel { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            theta: self.theta.clone(),
        };
        let bytes = serde_json::to_vec(&file).expect("model serialization cannot fail");
        std::fs::write(path, bytes).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<PolicyModel, PolicyError> {
        let bytes = std::fs::read(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ModelFile =
            serde_json::from_slice(&bytes).map_err(|source| PolicyError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(PolicyError::UnsupportedVersion(file.schema_version));
        }
        PolicyModel::new(file.theta)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    theta: Vec<f64>,
}

/// All-zero weights: every item gets probability 0.5.
pub fn init_policy(l: usize) -> Result<PolicyModel, PolicyError> {
    if l == 0 {
        return Err(PolicyError::EmptyTheta);
    }
    PolicyModel::new(vec![0.0; l])
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_dims(model: &PolicyModel, ds: &Dataset) -> Result<(), PolicyError> {
    if model.len() != ds.n_features() {
        return Err(PolicyError::DimensionMismatch {
            model: model.len(),
            items: ds.n_features(),
        });
    }
    Ok(())
}

/// Decision probabilities `sigma(theta . x)` for the selected rows.
pub fn predict_proba(
    model: &PolicyModel,
    ds: &Dataset,
    rows: &[usize],
) -> Result<Vec<f64>, PolicyError> {
    check_dims(model, ds)?;
    if rows.is_empty() {
        return Err(PolicyError::NoRows);
    }
    let mut probs = Vec::with_capacity(rows.len());
    for &r in rows {
        if r >= ds.len() {
            return Err(PolicyError::RowOutOfBounds(r));
        }
        let z: f64 = model
            .theta
            .iter()
            .zip(ds.feature_row(r))
            .map(|(w, x)| w * x)
            .sum();
        probs.push(sigmoid(z));
    }
    Ok(probs)
}

/// Samples one Bernoulli decision per selected row, deterministically in the
/// seed. Concurrent samplers should use disjoint seeds derived as base seed
/// plus sample index.
pub fn sample_decisions(
    model: &PolicyModel,
    ds: &Dataset,
    rows: &[usize],
    seed: u64,
) -> Result<DecisionVector, PolicyError> {
    let probs = predict_proba(model, ds, rows)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values: Vec<u8> = probs
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect();
    let ids: Vec<u64> = rows.iter().map(|&r| ds.id(r)).collect();
    Ok(DecisionVector::new(values, ids)?)
}

/// Most probable decision per row; the tie at p = 0.5 resolves to 1.
pub fn hard_decisions(
    model: &PolicyModel,
    ds: &Dataset,
    rows: &[usize],
) -> Result<DecisionVector, PolicyError> {
    let probs = predict_proba(model, ds, rows)?;
    let values: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let ids: Vec<u64> = rows.iter().map(|&r| ds.id(r)).collect();
    Ok(DecisionVector::new(values, ids)?)
}

/// Score-function gradient of the decision log probability:
/// `sum_i (d_i - p_i) * x_i`.
pub fn log_prob_gradient(
    model: &PolicyModel,
    ds: &Dataset,
    d: &DecisionVector,
) -> Result<Vec<f64>, PolicyError> {
    check_dims(model, ds)?;
    let rows = ds
        .rows_for_ids(d.item_ids())
        .map_err(|_| MetricError::UnresolvedId(find_unresolved(ds, d)))?;
    let mut grad = vec![0.0; model.len()];
    for (&r, &di) in rows.iter().zip(d.values()) {
        let z: f64 = model
            .theta
            .iter()
            .zip(ds.feature_row(r))
            .map(|(w, x)| w * x)
            .sum();
        let p = sigmoid(z);
        let coeff = di as f64 - p;
        for (g, x) in grad.iter_mut().zip(ds.feature_row(r)) {
            *g += coeff * x;
        }
    }
    Ok(grad)
}

fn find_unresolved(ds: &Dataset, d: &DecisionVector) -> u64 {
    d.item_ids()
        .iter()
        .copied()
        .find(|&id| ds.row_of_id(id).is_none())
        .unwrap_or(0)
}

/// Log probability of the decision vector under the model, with probabilities
/// clamped away from 0 and 1 inside the logs.
pub fn log_prob(model: &PolicyModel, ds: &Dataset, d: &DecisionVector) -> Result<f64, PolicyError> {
    check_dims(model, ds)?;
    let rows = ds
        .rows_for_ids(d.item_ids())
        .map_err(|_| MetricError::UnresolvedId(find_unresolved(ds, d)))?;
    let probs = predict_proba(model, ds, &rows)?;
    let mut total = 0.0;
    for (&p, &di) in probs.iter().zip(d.values()) {
        let p = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        total += if di == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total)
}
