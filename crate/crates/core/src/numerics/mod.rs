//! Dense linear algebra and statistics kernel.
//!
//! Sized for the handful of feature dimensions this pipeline works with: a
//! row-major [`Matrix`], a cyclic Jacobi eigensolver for symmetric input,
//! the PSD square root built on it, sample moments, and reproducible
//! substreamed random number generation ([`RngStream`]).

mod eigen;
mod matrix;
mod rng;
mod stats;

pub use eigen::{sqrtm_psd, sym_eig, SymEig, JACOBI_MAX_SWEEPS};
pub use matrix::Matrix;
pub use rng::RngStream;
pub use stats::{gaussian_draw, mean_cov, mean_std};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix asymmetry {asymmetry:e} exceeds tolerance {tol:e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix has eigenvalue {eigenvalue:e} below the PSD floor")]
    IndefiniteInput { eigenvalue: f64 },
    #[error("need at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("standard deviation must be non-negative, got {sigma}")]
    NegativeSigma { sigma: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in matrix")]
    NonFinite,
}
