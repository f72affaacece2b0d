use super::AuditError;
use crate::datagen::Dataset;
use crate::numerics::{mean_cov, sqrtm_psd, Matrix};

/// Values down to this far below zero are round-off and clamp to 0.
const NEGATIVE_SLACK: f64 = 1e-8;

/// Frechet distance between two Gaussians given by their moments.
///
/// The cross term uses `Tr((A S2 A)^{1/2})` with `A = S1^{1/2}`, which has
/// the same trace as `(S1 S2)^{1/2}` but stays symmetric.
pub fn fid_from_moments(mu1: &[f64], s1: &Matrix, mu2: &[f64], s2: &Matrix) -> Result<f64, AuditError> {
    let k = mu1.len();
    if mu2.len() != k || s1.rows() != k || s2.rows() != k || !s1.is_square() || !s2.is_square() {
        return Err(AuditError::SchemaMismatch(format!("moment shapes disagree (dimension {k})")));
    }
    let mean_term: f64 = mu1.iter().zip(mu2).map(|(a, b)| (a - b) * (a - b)).sum();
    let a = sqrtm_psd(s1)?;
    let inner = a.matmul(s2)?.matmul(&a)?;
    let inner = inner.add(&inner.transpose())?.scale(0.5);
    let cross = sqrtm_psd(&inner)?.trace();
    let value = mean_term + s1.trace() + s2.trace() - 2.0 * cross;
    if value < -NEGATIVE_SLACK * (1.0 + s1.trace() + s2.trace()) {
        return Err(AuditError::CovarianceFailure(format!("negative distance {value:e}")));
    }
    Ok(value.max(0.0))
}

/// FID between two sample matrices (rows = samples) over the same columns.
pub fn fid(real: &Matrix, sim: &Matrix) -> Result<f64, AuditError> {
    if real.cols() != sim.cols() {
        return Err(AuditError::SchemaMismatch(format!("{} vs {} feature columns", real.cols(), sim.cols())));
    }
    let min = real.cols() + 1;
    for m in [real, sim] {
        if m.rows() < min {
            return Err(AuditError::TooFewSamples { n: m.rows(), min });
        }
    }
    let (mu_r, s_r) = mean_cov(real)?;
    let (mu_s, s_s) = mean_cov(sim)?;
    fid_from_moments(&mu_r, &s_r, &mu_s, &s_s)
}

/// Per-feature affine map fitted on a reference dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(reference: &Dataset, features: &[&str]) -> Result<Self, AuditError> {
        let mut mean = Vec::with_capacity(features.len());
        let mut std = Vec::with_capacity(features.len());
        for f in features {
            let col = reference.column(f).map_err(|_| AuditError::SchemaMismatch(format!("unknown feature `{f}`")))?;
            let (m, s) = crate::numerics::mean_std(&col);
            mean.push(m);
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Ok(Self { features: features.iter().map(|s| s.to_string()).collect(), mean, std })
    }

    /// Standardized feature block of `d`, one row per sample.
    pub fn matrix(&self, d: &Dataset) -> Result<Matrix, AuditError> {
        let k = self.features.len();
        let mut data = Vec::with_capacity(d.len() * k);
        for s in &d.samples {
            for (j, f) in self.features.iter().enumerate() {
                let v = s.feature(f).ok_or_else(|| AuditError::SchemaMismatch(format!("unknown feature `{f}`")))?;
                data.push((v - self.mean[j]) / self.std[j]);
            }
        }
        Ok(Matrix::new(d.len(), k, data)?)
    }
}
