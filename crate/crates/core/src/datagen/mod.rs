//! Synthetic data generation for a 6G network slice.
//!
//! The generator composes a fixed registry of models: inhomogeneous Poisson
//! traffic, random-waypoint mobility and a log-distance channel around a
//! base station at the centre of the area. Users are simulated on
//! independent random substreams, then observed once per window.

mod channel;
mod dataset;
mod generate;
mod mobility;
mod params;
mod traffic;

pub use channel::{channel_snr, deterministic_snr_db, fspl_db, snr_from_draw};
pub use dataset::{
    default_schema, Dataset, DatasetMetadata, DatasetSidecar, FeatureDescriptor, FeatureKind, Group,
    Provenance, Sample, GENERATOR_VERSION, NUMERIC_FEATURES, SCHEMA_VERSION, STATE_FEATURES,
};
pub use generate::{
    generate, generate_users, group_at, inject_anomaly, label_for, SampleLayout, ANOMALY_FEATURES,
};
pub use mobility::{random_waypoint, TrajectoryPoint, Walker};
pub use params::{
    AnomalySpec, ChannelParams, Harmonic, LabelRuleParams, MobilityParams, SimulationParams,
    ThetaLayout, TrafficParams, THETA_LAYOUT_VERSION,
};
pub use traffic::{rate_at, sample_arrivals, thinning};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatagenError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("distance {distance_m} m is below the reference distance {ref_distance_m} m")]
    DistanceBelowReference { distance_m: f64, ref_distance_m: f64 },
    #[error("noise standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("malformed dataset file: {0}")]
    Format(String),
    #[error("dataset digest mismatch: sidecar says {expected}, content hashes to {actual}")]
    DigestMismatch { expected: String, actual: String },
}
