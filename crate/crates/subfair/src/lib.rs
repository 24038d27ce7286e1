//! Fairness-aware classification by subdominance minimization.
//!
//! The crate trains a probabilistic classifier to Pareto-dominate a set of
//! noisy reference decisions across several predictive-performance and
//! group-fairness measures at once. Instead of optimizing a prescribed
//! performance/fairness trade-off, training minimizes the *subdominance*: a
//! hinge-shaped convex upper bound on failing to outperform each reference
//! decision vector in each measure by a learned margin.
//!
//! The pipeline, end to end:
//!
//! 1. [`dataset`] loads or generates a tabular dataset and splits it into a
//!    training half and a withheld test half.
//! 2. [`demogen`] synthesizes reference decisions ("demonstrations") by
//!    repeatedly corrupting the training half with label/group noise, fitting
//!    a score model, and applying fairness post-processing.
//! 3. [`trainer`] runs policy-gradient optimization of a logistic decision
//!    model against the demonstration set, with per-feature hinge slopes
//!    chosen in closed form each step ([`subdominance`]).
//! 4. [`evaluation`] measures how often the trained model's test-set metric
//!    profile weakly Pareto-dominates held-out demonstrations and exports
//!    comparison tables and plot data.

pub mod dataset;
pub mod demogen;
pub mod evaluation;
pub mod metrics;
pub mod policy;
pub mod seeds;
pub mod subdominance;
pub mod trainer;

pub use dataset::{Dataset, SplitPair};
pub use metrics::{DecisionVector, MetricId, MetricProfile};
pub use policy::PolicyModel;
