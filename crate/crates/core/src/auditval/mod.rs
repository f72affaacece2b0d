//! Fidelity, fairness and robustness metrics for a refined dataset, and
//! the pass/recalibrate decision built on them.

mod fairness;
mod fid;
mod report;

pub use fairness::{adversarial_accuracy, equalized_odds, Classifier, FairnessResult};
pub use fid::{fid, fid_from_moments, Standardizer};
pub use report::{decide, validate, Thresholds, ValidationReport, ValidationVerdict, CSV_HEADER};

use thiserror::Error;

use crate::numerics::NumericsError;
use crate::taskmodel::TaskError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("covariance failure: {0}")]
    CovarianceFailure(String),
    #[error("no samples with label {y} in group {a}")]
    EmptyCell { y: u8, a: u8 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("broken suite linkage: {0}")]
    BrokenLinkage(String),
    #[error("digest mismatch: {0}")]
    DigestMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

impl From<NumericsError> for AuditError {
    fn from(e: NumericsError) -> Self {
        AuditError::CovarianceFailure(e.to_string())
    }
}
