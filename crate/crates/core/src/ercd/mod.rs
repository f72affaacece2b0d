//! Compliance-by-design augmentation.
//!
//! Turns a generated dataset into an augmented one made of the base data,
//! perturbation test suites, an optional fairness-resampled copy, a causal
//! bias report and a clause-to-metric audit trail. Every artifact records
//! the content digest of the base dataset it was derived from.

mod augment;
mod causal;
mod discretize;
mod graph;
mod independence;
mod resample;
mod suite;
mod trail;

pub use augment::{augment, AugmentConfig, AugmentedDataset, BiasConfig, SuiteConfig};
pub use causal::{
    bootstrap_threshold, bootstrap_threshold_discrete, causal_score, causal_score_discrete,
    BiasReport, BiasScore, BootstrapInfo, CausalColumns,
};
pub use discretize::{discretize, DEFAULT_BINS};
pub use graph::{discover_graph, discover_skeleton, CausalGraph, Edge, GRAPH_FEATURES, MIN_GRAPH_SAMPLES};
pub use independence::{g_test, GTest};
pub use resample::fairness_resample;
pub use suite::{build_suite, PerturbationDistribution, PerturbationSpec, RegulatoryTarget, TestSuite};
pub use trail::{build_trail, AuditTrail, ClauseMapping, Gate, MetricTable, MetricValue, TrailEntry, Verdict};

use thiserror::Error;

use crate::datagen::DatagenError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErcdError {
    #[error("unknown or non-numeric feature `{0}`")]
    UnknownFeature(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single protected group")]
    SingleGroupDataset,
    #[error("{n} samples is below the minimum of {min}")]
    TooFewSamples { n: usize, min: usize },
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("column `{0}` is not binary")]
    NotBinary(String),
    #[error("no samples with {x_name}={x} in adjustment stratum {stratum}")]
    EmptyStratum { x_name: String, x: u8, stratum: usize },
    #[error("metric `{0}` has no computed value")]
    UnresolvableMetric(String),
    #[error("clause `{0}` is mapped more than once")]
    DuplicateClause(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
}
