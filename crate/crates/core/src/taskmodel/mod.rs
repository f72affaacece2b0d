//! Downstream classifier: a ReLU MLP with a softmax head, trained from
//! scratch with Adam on mean cross-entropy.

mod mlp;
mod train;

pub use mlp::{backward, forward, mean_cross_entropy, predict, MlpModel};
pub use train::{design_matrix, fit, grid_search, train, GridResult, TrainConfig, TrainOutcome, TASK_FEATURES};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training data has a single class")]
    DegenerateLabels,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("malformed model document: {0}")]
    Format(String),
}
