//! Closed-loop generation of auditable synthetic network-slice data.
//!
//! The pipeline runs generate -> augment -> calibrate -> validate -> govern:
//!
//! * [`datagen`] simulates traffic, mobility and channel observations.
//! * [`ercd`] adds adversarial test suites, fairness resampling, causal
//!   bias scores and a clause-to-metric audit trail.
//! * [`fedcal`] tunes the generator against emulated field data with
//!   federated, differentially private gradient steps.
//! * [`taskmodel`] is the downstream classifier used for validation.
//! * [`auditval`] computes FID, equalized odds and adversarial accuracy.
//! * [`governance`] authorizes access, keeps a hash-chained lifecycle log
//!   and seals datasets for sharing.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod auditval;
pub mod canonical;
pub mod datagen;
pub mod ercd;
pub mod fedcal;
pub mod governance;
pub mod numerics;
pub mod taskmodel;
