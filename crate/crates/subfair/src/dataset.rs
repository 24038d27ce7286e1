//! Tabular datasets: loading, preprocessing, splitting, and noise insertion.
//!
//! A [`Dataset`] holds a standardized feature matrix plus binary labels and
//! binary group-membership attributes. Loaders for the `adult` and `compas`
//! schemas one-hot encode categorical columns, standardize numeric columns to
//! zero mean / unit variance over the whole file, drop rows with missing
//! values, and append a constant intercept feature as the last column. The
//! deterministic synthetic generator plays the same role for tests and
//! desk-scale experiments without any downloads.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag written into dataset cache files.
pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("field lengths disagree: items {items}, labels {labels}, groups {groups}, ids {ids}")]
    LengthMismatch {
        items: usize,
        labels: usize,
        groups: usize,
        ids: usize,
    },
    #[error("dataset must contain at least one item")]
    Empty,
    #[error("{field} contains a value other than 0 or 1 at row {row}")]
    NonBinary { field: &'static str, row: usize },
    #[error("duplicate item id {0}")]
    DuplicateId(u64),
    #[error("unknown item id {0}")]
    UnknownId(u64),
    #[error("feature row length {got} does not divide into {expected} columns")]
    RaggedMatrix { got: usize, expected: usize },
    #[error("unknown dataset schema '{0}' (expected adult, compas, or synthetic)")]
    UnknownSchema(String),
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("no rows left after dropping missing/filtered records")]
    EmptyAfterFiltering,
    #[error("split fraction {0} leaves one side empty")]
    DegenerateSplit(f64),
    #[error("probability argument {name}={value} outside [0, 1]")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("synthetic generator needs m >= 2 and l >= 1 (got m={m}, l={l})")]
    InvalidSyntheticShape { m: usize, l: usize },
    #[error("unsupported cache schema version {0}")]
    UnsupportedCacheVersion(u32),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("cache parse error on {path}: {source}")]
    CacheParse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Named input schema for [`load_tabular`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TabularSchema {
    Adult,
    Compas,
}

impl FromStr for TabularSchema {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adult" => Ok(TabularSchema::Adult),
            "compas" => Ok(TabularSchema::Compas),
            other => Err(DatasetError::UnknownSchema(other.to_string())),
        }
    }
}

impl fmt::Display for TabularSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TabularSchema::Adult => write!(f, "adult"),
            TabularSchema::Compas => write!(f, "compas"),
        }
    }
}

/// Loader options beyond the schema choice.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Include the protected attribute among the model input features.
    /// Excluded by default; the group vector always carries it either way.
    pub include_group_feature: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            include_group_feature: false,
        }
    }
}

/// An immutable item table: standardized features, binary labels, binary
/// group attributes, and stable unique ids.
///
/// The feature matrix is stored row-major; the last column is always the
/// constant intercept feature appended at construction time by the loaders
/// and the synthetic generator.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    groups: Vec<u8>,
    ids: Vec<u64>,
    feature_names: Vec<String>,
    id_to_row: HashMap<u64, usize>,
}

impl Dataset {
    /// Builds a dataset and validates its invariants: equal field lengths,
    /// binary labels and groups, unique ids.
    pub fn from_parts(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u8>,
        groups: Vec<u8>,
        ids: Vec<u64>,
        feature_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if n_features == 0 || features.len() % n_features != 0 {
            return Err(DatasetError::RaggedMatrix {
                got: features.len(),
                expected: n_features.max(1),
            });
        }
        let m = features.len() / n_features;
        if m == 0 {
            return Err(DatasetError::Empty);
        }
        if labels.len() != m || groups.len() != m || ids.len() != m {
            return Err(DatasetError::LengthMismatch {
                items: m,
                labels: labels.len(),
                groups: groups.len(),
                ids: ids.len(),
            });
        }
        for (row, &y) in labels.iter().enumerate() {
            if y > 1 {
                return Err(DatasetError::NonBinary {
                    field: "labels",
                    row,
                });
            }
        }
        for (row, &a) in groups.iter().enumerate() {
            if a > 1 {
                return Err(DatasetError::NonBinary {
                    field: "groups",
                    row,
                });
            }
        }
        let mut id_to_row = HashMap::with_capacity(m);
        for (row, &id) in ids.iter().enumerate() {
            if id_to_row.insert(id, row).is_some() {
                return Err(DatasetError::DuplicateId(id));
            }
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            groups,
            ids,
            feature_names,
            id_to_row,
        })
    }

    /// Number of items M.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of feature columns L (intercept included).
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_row(&self, row: usize) -> &[f64] {
        &self.features[row * self.n_features..(row + 1) * self.n_features]
    }

    pub fn label(&self, row: usize) -> u8 {
        self.labels[row]
    }

    pub fn group(&self, row: usize) -> u8 {
        self.groups[row]
    }

    pub fn id(&self, row: usize) -> u64 {
        self.ids[row]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn groups(&self) -> &[u8] {
        &self.groups
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row_of_id(&self, id: u64) -> Option<usize> {
        self.id_to_row.get(&id).copied()
    }

    /// Resolves item ids to row indices, erroring on the first unknown id.
    pub fn rows_for_ids(&self, ids: &[u64]) -> Result<Vec<usize>, DatasetError> {
        ids.iter()
            .map(|&id| self.row_of_id(id).ok_or(DatasetError::UnknownId(id)))
            .collect()
    }

    /// All row indices in storage order.
    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Fraction of items with label 1.
    pub fn label_rate(&self) -> f64 {
        self.labels.iter().map(|&y| y as u64).sum::<u64>() as f64 / self.len() as f64
    }

    /// Fraction of items in group 1.
    pub fn group_rate(&self) -> f64 {
        self.groups.iter().map(|&a| a as u64).sum::<u64>() as f64 / self.len() as f64
    }

    /// New dataset containing the given rows, in the given order.
    fn take_rows(&self, rows: &[usize]) -> Result<Dataset, DatasetError> {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut labels = Vec::with_capacity(rows.len());
        let mut groups = Vec::with_capacity(rows.len());
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.feature_row(r));
            labels.push(self.labels[r]);
            groups.push(self.groups[r]);
            ids.push(self.ids[r]);
        }
        Dataset::from_parts(
            features,
            self.n_features,
            labels,
            groups,
            ids,
            self.feature_names.clone(),
        )
    }

    /// Writes the versioned cache file (one record per item).
    pub fn save_cache(&self, path: &Path) -> Result<(), DatasetError> {
        let file = CacheFile {
            schema_version: CACHE_SCHEMA_VERSION,
            feature_names: self.feature_names.clone(),
            items: (0..self.len())
                .map(|r| CacheItem {
                    id: self.ids[r],
                    features: self.feature_row(r).to_vec(),
                    label: self.labels[r],
                    group: self.groups[r],
                })
                .collect(),
        };
        let bytes = serde_json::to_vec(&file).expect("cache serialization cannot fail");
        std::fs::write(path, bytes).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads a cache file written by [`Dataset::save_cache`].
    pub fn load_cache(path: &Path) -> Result<Dataset, DatasetError> {
        let bytes = std::fs::read(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: CacheFile =
            serde_json::from_slice(&bytes).map_err(|source| DatasetError::CacheParse {
                path: path.display().to_string(),
                source,
            })?;
        if file.schema_version != CACHE_SCHEMA_VERSION {
            return Err(DatasetError::UnsupportedCacheVersion(file.schema_version));
        }
        let n_features = file.items.first().map(|it| it.features.len()).unwrap_or(0);
        let mut features = Vec::with_capacity(file.items.len() * n_features);
        let mut labels = Vec::with_capacity(file.items.len());
        let mut groups = Vec::with_capacity(file.items.len());
        let mut ids = Vec::with_capacity(file.items.len());
        for it in &file.items {
            if it.features.len() != n_features {
                return Err(DatasetError::RaggedMatrix {
                    got: it.features.len(),
                    expected: n_features,
                });
            }
            features.extend_from_slice(&it.features);
            labels.push(it.label);
            groups.push(it.group);
            ids.push(it.id);
        }
        Dataset::from_parts(features, n_features, labels, groups, ids, file.feature_names)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    feature_names: Vec<String>,
    items: Vec<CacheItem>,
}

#[derive(Serialize, Deserialize)]
struct CacheItem {
    id: u64,
    features: Vec<f64>,
    label: u8,
    group: u8,
}

/// A disjoint two-way partition of a parent dataset.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub first: Dataset,
    pub second: Dataset,
    pub seed: u64,
}

/// Splits `ds` into two disjoint parts; `first` gets `round(fraction * M)`
/// items of a seed-determined uniform permutation.
pub fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<SplitPair, DatasetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::InvalidRate {
            name: "fraction",
            value: fraction,
        });
    }
    let m = ds.len();
    let first_len = (fraction * m as f64).round() as usize;
    if first_len == 0 || first_len == m {
        return Err(DatasetError::DegenerateSplit(fraction));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);
    let first = ds.take_rows(&order[..first_len])?;
    let second = ds.take_rows(&order[first_len..])?;
    Ok(SplitPair {
        first,
        second,
        seed,
    })
}

/// Fisher-Yates shuffle. Spelled out here (rather than `SliceRandom`) so the
/// permutation for a given seed is pinned by this crate, not by rand's
/// internals.
fn shuffle<T>(xs: &mut [T], rng: &mut ChaCha20Rng) {
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}

/// Chooses `k` distinct positions out of `m` (partial Fisher-Yates).
fn sample_positions(m: usize, k: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Returns a copy of `ds` with exactly `round(epsilon * M)` label entries
/// flipped (when `flip_labels`) and, independently, `round(epsilon * M)`
/// group entries flipped (when `flip_groups`). Positions are chosen uniformly
/// without replacement; both position sets are drawn regardless of the flags
/// so that they do not depend on which flags are set.
pub fn flip_noise(
    ds: &Dataset,
    epsilon: f64,
    seed: u64,
    flip_labels: bool,
    flip_groups: bool,
) -> Result<Dataset, DatasetError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DatasetError::InvalidRate {
            name: "epsilon",
            value: epsilon,
        });
    }
    let m = ds.len();
    let k = (epsilon * m as f64).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let label_positions = sample_positions(m, k, &mut rng);
    let group_positions = sample_positions(m, k, &mut rng);

    let mut labels = ds.labels.clone();
    let mut groups = ds.groups.clone();
    if flip_labels {
        for &p in &label_positions {
            labels[p] = 1 - labels[p];
        }
    }
    if flip_groups {
        for &p in &group_positions {
            groups[p] = 1 - groups[p];
        }
    }
    Dataset::from_parts(
        ds.features.clone(),
        ds.n_features,
        labels,
        groups,
        ds.ids.clone(),
        ds.feature_names.clone(),
    )
}

// Fixed coefficients of the synthetic labeling rule. The first feature is a
// pure group proxy (group-shifted, no direct label weight): an unconstrained
// fit loads onto it to capture the group-dependent label shift and picks up
// decision disparity, while near-fair linear rules of the same accuracy
// still exist. The latent logit shift keeps label base rates apart across
// groups, so the conditional-rate measures stay genuinely constrained.
const SYNTH_WEIGHT_PATTERN: [f64; 6] = [0.0, 1.0, -0.7, 0.6, -0.5, 0.8];
const SYNTH_GROUP_FEATURE_SHIFT: f64 = 1.0;
const SYNTH_GROUP_LOGIT_SHIFT: f64 = 0.3;

/// Deterministic synthetic dataset: `l` feature columns (the last being the
/// intercept), groups drawn with probability `group_rate`, labels from a
/// fixed linear rule with a group-dependent intercept, then flipped with
/// probability `flip_rate`. Label base rates differ across groups by
/// construction.
pub fn generate_synthetic(
    seed: u64,
    m: usize,
    l: usize,
    group_rate: f64,
    flip_rate: f64,
) -> Result<Dataset, DatasetError> {
    if m < 2 || l < 1 {
        return Err(DatasetError::InvalidSyntheticShape { m, l });
    }
    for (name, value) in [("group_rate", group_rate), ("flip_rate", flip_rate)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(DatasetError::InvalidRate { name, value });
        }
    }
    let n_random = l - 1;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(m * l);
    let mut labels = Vec::with_capacity(m);
    let mut groups = Vec::with_capacity(m);
    let ids: Vec<u64> = (0..m as u64).collect();

    for _ in 0..m {
        let a: u8 = if rng.random::<f64>() < group_rate { 1 } else { 0 };
        let sign = if a == 1 { 1.0 } else { -1.0 };
        let mut logit = SYNTH_GROUP_LOGIT_SHIFT * sign;
        let row_start = features.len();
        for j in 0..n_random {
            let mut x = standard_normal(&mut rng);
            if j == 0 {
                x += SYNTH_GROUP_FEATURE_SHIFT * sign;
            }
            logit += SYNTH_WEIGHT_PATTERN[j % SYNTH_WEIGHT_PATTERN.len()] * x;
            features.push(x);
        }
        features.push(1.0); // intercept
        debug_assert_eq!(features.len() - row_start, l);
        let mut y: u8 = if logit > 0.0 { 1 } else { 0 };
        if rng.random::<f64>() < flip_rate {
            y = 1 - y;
        }
        labels.push(y);
        groups.push(a);
    }

    let mut feature_names: Vec<String> = (0..n_random).map(|j| format!("x{j}")).collect();
    feature_names.push("bias".to_string());
    Dataset::from_parts(features, l, labels, groups, ids, feature_names)
}

/// Box-Muller draw; two uniforms per normal keeps the stream layout simple.
fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ---------------------------------------------------------------------------
// Tabular loading
// ---------------------------------------------------------------------------

struct ColumnSpec {
    numeric: &'static [&'static str],
    categorical: &'static [&'static str],
    label: &'static str,
    group: &'static str,
}

const ADULT_COLUMNS: ColumnSpec = ColumnSpec {
    numeric: &[
        "age",
        "fnlwgt",
        "education-num",
        "capital-gain",
        "capital-loss",
        "hours-per-week",
    ],
    categorical: &[
        "workclass",
        "education",
        "marital-status",
        "occupation",
        "relationship",
        "race",
        "native-country",
    ],
    label: "income",
    group: "sex",
};

const COMPAS_COLUMNS: ColumnSpec = ColumnSpec {
    numeric: &["age", "priors_count", "juv_fel_count", "juv_misd_count", "juv_other_count"],
    categorical: &["c_charge_degree", "age_cat", "sex"],
    label: "two_year_recid",
    group: "race",
};

// ProPublica row filters, applied when the columns are present.
const COMPAS_FILTER_COLUMNS: &[&str] = &["days_b_screening_arrest", "is_recid", "score_text"];

/// Loads a delimited text file with a header row under a named schema.
///
/// Preprocessing: rows with missing or unparseable values are dropped, the
/// label and group columns are binarized, categorical columns are one-hot
/// encoded, numeric columns are standardized over the whole file, and a
/// constant intercept feature is appended. Item ids are the 0-based row
/// numbers of the surviving rows in file order.
pub fn load_tabular(path: &Path, schema: TabularSchema) -> Result<Dataset, DatasetError> {
    load_tabular_with(path, schema, &LoadOptions::default())
}

/// [`load_tabular`] with explicit options.
pub fn load_tabular_with(
    path: &Path,
    schema: TabularSchema,
    options: &LoadOptions,
) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|source| DatasetError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| DatasetError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let col = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };

    let spec = match schema {
        TabularSchema::Adult => &ADULT_COLUMNS,
        TabularSchema::Compas => &COMPAS_COLUMNS,
    };
    let numeric_cols: Vec<usize> = spec
        .numeric
        .iter()
        .map(|n| col(n))
        .collect::<Result<_, _>>()?;
    let categorical_cols: Vec<usize> = spec
        .categorical
        .iter()
        .map(|n| col(n))
        .collect::<Result<_, _>>()?;
    let label_col = col(spec.label)?;
    let group_col = col(spec.group)?;
    let filter_cols: Vec<Option<usize>> = match schema {
        TabularSchema::Compas => COMPAS_FILTER_COLUMNS
            .iter()
            .map(|n| headers.iter().position(|h| h == n))
            .collect(),
        TabularSchema::Adult => vec![],
    };

    let missing = |v: &str| v.is_empty() || v == "?" || v == "NA" || v == "N/A";

    // First pass: collect surviving raw rows.
    struct RawRow {
        numeric: Vec<f64>,
        categorical: Vec<String>,
        label: u8,
        group_value: String,
    }
    let mut rows: Vec<RawRow> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| DatasetError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let get = |c: usize| record.get(c).unwrap_or("");
        if record.len() < headers.len() {
            continue; // short row: treat as missing
        }
        if numeric_cols
            .iter()
            .chain(categorical_cols.iter())
            .chain([&label_col, &group_col])
            .any(|&c| missing(get(c)))
        {
            continue;
        }
        if schema == TabularSchema::Compas && !compas_row_passes(&filter_cols, &get) {
            continue;
        }
        let mut numeric = Vec::with_capacity(numeric_cols.len());
        let mut parse_failed = false;
        for &c in &numeric_cols {
            match get(c).parse::<f64>() {
                Ok(v) if v.is_finite() => numeric.push(v),
                _ => {
                    parse_failed = true;
                    break;
                }
            }
        }
        if parse_failed {
            continue;
        }
        let label = match schema {
            TabularSchema::Adult => {
                let v = get(label_col);
                u8::from(v == ">50K" || v == ">50K.")
            }
            TabularSchema::Compas => match get(label_col).parse::<i64>() {
                Ok(1) => 1,
                Ok(0) => 0,
                _ => continue,
            },
        };
        rows.push(RawRow {
            numeric,
            categorical: categorical_cols.iter().map(|&c| get(c).to_string()).collect(),
            label,
            group_value: get(group_col).to_string(),
        });
    }

    // Group binarization. Adult: sex == Male -> 1. Compas: keep the two most
    // frequent race categories (most frequent -> 1), drop other rows.
    let group_of: Box<dyn Fn(&str) -> Option<u8>> = match schema {
        TabularSchema::Adult => Box::new(|v: &str| Some(u8::from(v == "Male"))),
        TabularSchema::Compas => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for r in &rows {
                *counts.entry(r.group_value.as_str()).or_insert(0) += 1;
            }
            let mut ranked: Vec<(&str, usize)> =
                counts.into_iter().map(|(k, v)| (k, v)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let top: Vec<String> = ranked.iter().take(2).map(|(k, _)| k.to_string()).collect();
            Box::new(move |v: &str| {
                if top.first().is_some_and(|t| t == v) {
                    Some(1)
                } else if top.get(1).is_some_and(|t| t == v) {
                    Some(0)
                } else {
                    None
                }
            })
        }
    };
    let rows: Vec<(RawRow, u8)> = rows
        .into_iter()
        .filter_map(|r| group_of(&r.group_value).map(|g| (r, g)))
        .collect();
    if rows.is_empty() {
        return Err(DatasetError::EmptyAfterFiltering);
    }

    // Categorical vocabularies in first-seen order.
    let mut vocab: Vec<Vec<String>> = vec![Vec::new(); spec.categorical.len()];
    for (r, _) in &rows {
        for (j, v) in r.categorical.iter().enumerate() {
            if !vocab[j].contains(v) {
                vocab[j].push(v.clone());
            }
        }
    }

    // Standardization statistics over the whole file.
    let m = rows.len();
    let n_num = numeric_cols.len();
    let mut mean = vec![0.0; n_num];
    for (r, _) in &rows {
        for (j, &v) in r.numeric.iter().enumerate() {
            mean[j] += v;
        }
    }
    for mj in &mut mean {
        *mj /= m as f64;
    }
    let mut std = vec![0.0; n_num];
    for (r, _) in &rows {
        for (j, &v) in r.numeric.iter().enumerate() {
            std[j] += (v - mean[j]).powi(2);
        }
    }
    for sj in &mut std {
        *sj = (*sj / m as f64).sqrt();
        if *sj == 0.0 {
            *sj = 1.0; // constant column: leave centered at zero
        }
    }

    let mut feature_names: Vec<String> = Vec::new();
    for (j, name) in spec.numeric.iter().enumerate() {
        let _ = j;
        feature_names.push(name.to_string());
    }
    for (j, name) in spec.categorical.iter().enumerate() {
        for v in &vocab[j] {
            feature_names.push(format!("{name}={v}"));
        }
    }
    if options.include_group_feature {
        feature_names.push(format!("{}(group)", spec.group));
    }
    feature_names.push("bias".to_string());
    let l = feature_names.len();

    let mut features = Vec::with_capacity(m * l);
    let mut labels = Vec::with_capacity(m);
    let mut groups = Vec::with_capacity(m);
    for (r, g) in &rows {
        for (j, &v) in r.numeric.iter().enumerate() {
            features.push((v - mean[j]) / std[j]);
        }
        for (j, v) in r.categorical.iter().enumerate() {
            for choice in &vocab[j] {
                features.push(if choice == v { 1.0 } else { 0.0 });
            }
        }
        if options.include_group_feature {
            features.push(*g as f64);
        }
        features.push(1.0);
        labels.push(r.label);
        groups.push(*g);
    }
    let ids: Vec<u64> = (0..m as u64).collect();
    Dataset::from_parts(features, l, labels, groups, ids, feature_names)
}

fn compas_row_passes<'a>(filter_cols: &[Option<usize>], get: &dyn Fn(usize) -> &'a str) -> bool {
    // days_b_screening_arrest in [-30, 30]
    if let Some(c) = filter_cols[0] {
        match get(c).parse::<f64>() {
            Ok(v) if (-30.0..=30.0).contains(&v) => {}
            _ => return false,
        }
    }
    // is_recid != -1
    if let Some(c) = filter_cols[1] {
        if get(c) == "-1" {
            return false;
        }
    }
    // score_text != N/A (already covered by the missing check, kept explicit)
    if let Some(c) = filter_cols[2] {
        if get(c) == "N/A" {
            return false;
        }
    }
    true
}

/// Sanity helper used by tests and the CLI: ids of `pair` partition the ids
/// of `parent` exactly.
pub fn is_exact_partition(parent: &Dataset, pair: &SplitPair) -> bool {
    let mut union: HashSet<u64> = pair.first.ids.iter().copied().collect();
    if pair.second.ids.iter().any(|id| !union.insert(*id)) {
        return false;
    }
    union.len() == parent.len() && parent.ids.iter().all(|id| union.contains(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    const ADULT_HEADER: &str = "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,sex,capital-gain,capital-loss,hours-per-week,native-country,income";

    fn adult_row(age: u32, sex: &str, income: &str) -> String {
        format!(
            "{age},Private,{},Bachelors,13,Never-married,Sales,Own-child,White,{sex},0,0,40,United-States,{income}",
            100000 + age
        )
    }

    #[test]
    fn loads_adult_schema_and_binarizes() {
        let mut content = String::from(ADULT_HEADER);
        content.push('\n');
        content.push_str(&adult_row(25, "Male", ">50K"));
        content.push('\n');
        content.push_str(&adult_row(30, "Female", "<=50K"));
        content.push('\n');
        content.push_str(&adult_row(45, "Male", "<=50K"));
        content.push('\n');
        let f = write_temp(&content);
        let ds = load_tabular(f.path(), TabularSchema::Adult).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), &[1, 0, 0]);
        assert_eq!(ds.groups(), &[1, 0, 1]);
        // last column is the intercept
        for r in 0..ds.len() {
            assert_eq!(ds.feature_row(r)[ds.n_features() - 1], 1.0);
        }
        // numeric standardization: age column has mean  zero over the file
        let age_sum: f64 = (0..ds.len()).map(|r| ds.feature_row(r)[0]).sum();
        assert!(age_sum.abs() < 1e-9);
    }

    #[test]
    fn drops_rows_with_missing_or_unparseable_values() {
        let mut content = String::from(ADULT_HEADER);
        content.push('\n');
        content.push_str(&adult_row(25, "Male", ">50K"));
        content.push('\n');
        // missing workclass
        content.push_str(
            "30,?,130000,Bachelors,13,Never-married,Sales,Own-child,White,Female,0,0,40,United-States,<=50K\n",
        );
        // unparseable age
        content.push_str(
            "abc,Private,130000,Bachelors,13,Never-married,Sales,Own-child,White,Female,0,0,40,United-States,<=50K\n",
        );
        content.push_str(&adult_row(40, "Female", "<=50K"));
        content.push('\n');
        let f = write_temp(&content);
        let ds = load_tabular(f.path(), TabularSchema::Adult).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn load_is_deterministic_in_file_bytes() {
        let mut content = String::from(ADULT_HEADER);
        content.push('\n');
        for i in 0..20 {
            let sex = if i % 2 == 0 { "Male" } else { "Female" };
            let income = if i % 3 == 0 { ">50K" } else { "<=50K" };
            content.push_str(&adult_row(20 + i, sex, income));
            content.push('\n');
        }
        let f = write_temp(&content);
        let a = load_tabular(f.path(), TabularSchema::Adult).unwrap();
        let b = load_tabular(f.path(), TabularSchema::Adult).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.groups, b.groups);
        assert_eq!(a.ids, b.ids);
    }

    #[test]
    fn missing_required_column_is_schema_mismatch() {
        let f = write_temp("age,sex\n25,Male\n");
        match load_tabular(f.path(), TabularSchema::Adult) {
            Err(DatasetError::MissingColumn(_)) => {}
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = load_tabular(Path::new("/nonexistent/file.csv"), TabularSchema::Adult);
        assert!(err.is_err());
    }

    #[test]
    fn compas_schema_keeps_two_majority_races_and_filters() {
        let header = "age,priors_count,juv_fel_count,juv_misd_count,juv_other_count,c_charge_degree,age_cat,sex,race,two_year_recid,days_b_screening_arrest,is_recid,score_text";
        let mut content = String::from(header);
        content.push('\n');
        // 3x race A, 2x race B, 1x race C (dropped)
        for (race, recid) in [("A", 1), ("A", 0), ("A", 1), ("B", 0), ("B", 1), ("C", 1)] {
            content.push_str(&format!(
                "30,2,0,0,0,F,25 - 45,Male,{race},{recid},0,0,High\n"
            ));
        }
        // filtered: screening arrest gap too large
        content.push_str("30,2,0,0,0,F,25 - 45,Male,A,1,45,0,High\n");
        // filtered: is_recid == -1
        content.push_str("30,2,0,0,0,F,25 - 45,Male,A,1,0,-1,High\n");
        let f = write_temp(&content);
        let ds = load_tabular(f.path(), TabularSchema::Compas).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.groups(), &[1, 1, 1, 0, 0]);
        assert_eq!(ds.labels(), &[1, 0, 1, 0, 1]);
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let mut content = String::from(ADULT_HEADER);
        content.push('\n');
        content.push_str(
            "30,?,130000,Bachelors,13,Never-married,Sales,Own-child,White,Female,0,0,40,United-States,<=50K\n",
        );
        let f = write_temp(&content);
        match load_tabular(f.path(), TabularSchema::Adult) {
            Err(DatasetError::EmptyAfterFiltering) => {}
            other => panic!("expected EmptyAfterFiltering, got {other:?}"),
        }
    }

    #[test]
    fn include_group_feature_adds_a_column() {
        let mut content = String::from(ADULT_HEADER);
        content.push('\n');
        content.push_str(&adult_row(25, "Male", ">50K"));
        content.push('\n');
        content.push_str(&adult_row(30, "Female", "<=50K"));
        content.push('\n');
        let f = write_temp(&content);
        let base = load_tabular(f.path(), TabularSchema::Adult).unwrap();
        let with = load_tabular_with(
            f.path(),
            TabularSchema::Adult,
            &LoadOptions {
                include_group_feature: true,
            },
        )
        .unwrap();
        assert_eq!(with.n_features(), base.n_features() + 1);
        assert_eq!(with.feature_row(0)[with.n_features() - 2], 1.0);
        assert_eq!(with.feature_row(1)[with.n_features() - 2], 0.0);
    }

    #[test]
    fn synthetic_is_deterministic_and_seed_sensitive() {
        let a = generate_synthetic(7, 1000, 5, 0.5, 0.0).unwrap();
        let b = generate_synthetic(7, 1000, 5, 0.5, 0.0).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.groups, b.groups);
        let c = generate_synthetic(8, 1000, 5, 0.5, 0.0).unwrap();
        assert_ne!(a.labels, c.labels);
    }

    #[test]
    fn synthetic_group_rate_is_respected() {
        let ds = generate_synthetic(7, 2000, 5, 0.3, 0.1).unwrap();
        let rate = ds.group_rate();
        assert!((rate - 0.3).abs() < 0.05, "group rate {rate}");
    }

    #[test]
    fn synthetic_shapes_and_binary_fields() {
        for seed in [1, 2, 3] {
            let ds = generate_synthetic(seed, 50, 4, 0.5, 0.2).unwrap();
            assert_eq!(ds.len(), 50);
            assert_eq!(ds.n_features(), 4);
            assert!(ds.labels().iter().all(|&y| y <= 1));
            assert!(ds.groups().iter().all(|&a| a <= 1));
        }
    }

    #[test]
    fn synthetic_base_rates_differ_across_groups() {
        let ds = generate_synthetic(11, 4000, 8, 0.5, 0.0).unwrap();
        let (mut pos1, mut n1, mut pos0, mut n0) = (0u32, 0u32, 0u32, 0u32);
        for r in 0..ds.len() {
            if ds.group(r) == 1 {
                n1 += 1;
                pos1 += ds.label(r) as u32;
            } else {
                n0 += 1;
                pos0 += ds.label(r) as u32;
            }
        }
        let gap = pos1 as f64 / n1 as f64 - pos0 as f64 / n0 as f64;
        assert!(gap > 0.1, "base-rate gap {gap}");
    }

    #[test]
    fn synthetic_rejects_bad_arguments() {
        assert!(generate_synthetic(1, 1, 5, 0.5, 0.0).is_err());
        assert!(generate_synthetic(1, 10, 0, 0.5, 0.0).is_err());
        assert!(generate_synthetic(1, 10, 5, 1.5, 0.0).is_err());
        assert!(generate_synthetic(1, 10, 5, 0.5, -0.1).is_err());
    }

    #[test]
    fn split_sizes_round_and_partition() {
        let ds = generate_synthetic(3, 45222 / 100, 3, 0.5, 0.0).unwrap(); // 452 items
        let pair = split(&ds, 0.5, 9).unwrap();
        assert_eq!(pair.first.len(), 226);
        assert_eq!(pair.second.len(), 226);
        assert!(is_exact_partition(&ds, &pair));

        let ds7 = generate_synthetic(3, 7, 3, 0.5, 0.0).unwrap();
        let pair7 = split(&ds7, 0.5, 1).unwrap();
        assert_eq!(pair7.first.len(), 4); // round(3.5) = 4
    }

    #[test]
    fn split_is_deterministic() {
        let ds = generate_synthetic(5, 200, 4, 0.5, 0.1).unwrap();
        let a = split(&ds, 0.4, 17).unwrap();
        let b = split(&ds, 0.4, 17).unwrap();
        assert_eq!(a.first.ids(), b.first.ids());
        assert_eq!(a.second.ids(), b.second.ids());
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = generate_synthetic(5, 10, 3, 0.5, 0.0).unwrap();
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
        assert!(split(&ds, 0.01, 1).is_err()); // round(0.1) = 0
    }

    #[test]
    fn flip_noise_zero_is_identity() {
        let ds = generate_synthetic(2, 100, 4, 0.5, 0.1).unwrap();
        let out = flip_noise(&ds, 0.0, 7, true, true).unwrap();
        assert_eq!(out.labels(), ds.labels());
        assert_eq!(out.groups(), ds.groups());
    }

    #[test]
    fn flip_noise_full_flips_selected_field_only() {
        let ds = generate_synthetic(2, 100, 4, 0.5, 0.1).unwrap();
        let out = flip_noise(&ds, 1.0, 7, true, false).unwrap();
        for r in 0..ds.len() {
            assert_eq!(out.label(r), 1 - ds.label(r));
        }
        assert_eq!(out.groups(), ds.groups());
    }

    #[test]
    fn flip_noise_exact_counts() {
        let ds = generate_synthetic(2, 1000, 4, 0.5, 0.1).unwrap();
        let out = flip_noise(&ds, 0.2, 7, true, true).unwrap();
        let label_diff = (0..ds.len()).filter(|&r| out.label(r) != ds.label(r)).count();
        let group_diff = (0..ds.len()).filter(|&r| out.group(r) != ds.group(r)).count();
        assert_eq!(label_diff, 200);
        assert_eq!(group_diff, 200);
    }

    #[test]
    fn flip_noise_full_is_involution() {
        let ds = generate_synthetic(2, 64, 4, 0.5, 0.1).unwrap();
        let once = flip_noise(&ds, 1.0, 3, true, true).unwrap();
        let twice = flip_noise(&once, 1.0, 99, true, true).unwrap();
        assert_eq!(twice.labels(), ds.labels());
        assert_eq!(twice.groups(), ds.groups());
    }

    #[test]
    fn cache_round_trip() {
        let ds = generate_synthetic(13, 40, 5, 0.4, 0.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        ds.save_cache(&path).unwrap();
        let back = Dataset::load_cache(&path).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.groups, ds.groups);
        assert_eq!(back.ids, ds.ids);
        assert_eq!(back.feature_names, ds.feature_names);
    }

    #[test]
    fn from_parts_validates_invariants() {
        assert!(matches!(
            Dataset::from_parts(vec![1.0], 1, vec![2], vec![0], vec![0], vec![]),
            Err(DatasetError::NonBinary { .. })
        ));
        assert!(matches!(
            Dataset::from_parts(
                vec![1.0, 2.0],
                1,
                vec![0, 1],
                vec![0, 1],
                vec![5, 5],
                vec![]
            ),
            Err(DatasetError::DuplicateId(5))
        ));
    }
}
