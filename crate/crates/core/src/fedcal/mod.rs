//! Federated calibration of the generator against field observations.
//!
//! Virtual clients each hold a slice of (emulated) real observations. Every
//! round they score the simulator against their data, take a
//! finite-difference gradient of that score with respect to the
//! normalized parameter vector, clip it and add Gaussian noise. The server
//! averages the noisy gradients by sample count and takes one descent
//! step, projected back into the admissible parameter region.

mod aggregate;
mod client;
mod dp;
mod emulate;
mod round;

pub use aggregate::fedavg;
pub use client::{discrepancy, local_gradient, mse, partition_users, Objective, Region, SimClient, Unbounded, UnitRegion};
pub use dp::{clip, dp_noise};
pub use emulate::{emulate_real, InterferenceSpec};
pub use round::{
    calibrate, run_round, write_history_jsonl, write_theta_trace, Calibration, ClientRound, FLConfig,
    FLRoundState, PrivacyLedger,
};

use thiserror::Error;

use crate::datagen::DatagenError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FedcalError {
    #[error("client observations do not match the simulator output: {0}")]
    SchemaMismatch(String),
    #[error("loss is not finite at coordinate {coordinate}")]
    NonFiniteLoss { coordinate: usize },
    #[error("vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("client weights sum to {got}, expected {expected}")]
    WeightSumMismatch { expected: usize, got: usize },
    #[error("at least one client is required")]
    NoClients,
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
}
