use serde::{Deserialize, Serialize};

use super::ErcdError;
use crate::datagen::{Dataset, Sample};
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationDistribution {
    /// `N(0, eta^2)`
    Gaussian,
    /// `U(-eta, eta)`
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub distribution: PerturbationDistribution,
    pub eta: f64,
    pub target_features: Vec<String>,
    pub sample_fraction: f64,
}

impl PerturbationSpec {
    pub fn validate(&self, d: &Dataset) -> Result<(), ErcdError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(ErcdError::InvalidSpec(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(ErcdError::InvalidSpec(format!(
                "sample_fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        for f in &self.target_features {
            if !d.is_numeric_feature(f) {
                return Err(ErcdError::UnknownFeature(f.clone()));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match self.distribution {
            PerturbationDistribution::Gaussian => self.eta * rng.standard_normal(),
            PerturbationDistribution::Uniform => self.eta * (2.0 * rng.uniform() - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegulatoryTarget {
    Fairness,
    Robustness,
    Shift,
}

impl RegulatoryTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            RegulatoryTarget::Fairness => "fairness",
            RegulatoryTarget::Robustness => "robustness",
            RegulatoryTarget::Shift => "shift",
        }
    }
}

/// Perturbed copies of a subset of a dataset. `perturbed[i]` is derived
/// from the sample keyed by `originals[i]` and keeps that key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub regulatory_target: RegulatoryTarget,
    pub spec: PerturbationSpec,
    pub base_digest: String,
    pub originals: Vec<(u32, u32)>,
    pub perturbed: Vec<Sample>,
}

impl TestSuite {
    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }
}

/// Picks `ceil(sample_fraction * |d|)` samples without replacement and adds
/// noise drawn from the perturbation spec to their target features only.
pub fn build_suite(
    d: &Dataset,
    target: RegulatoryTarget,
    spec: &PerturbationSpec,
    rng: &mut RngStream,
) -> Result<TestSuite, ErcdError> {
    if d.is_empty() {
        return Err(ErcdError::EmptyDataset);
    }
    spec.validate(d)?;
    let n = d.len();
    let k = ((spec.sample_fraction * n as f64).ceil() as usize).min(n);

    // partial Fisher-Yates: the first k slots become a uniform k-subset
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();

    let mut originals = Vec::with_capacity(k);
    let mut perturbed = Vec::with_capacity(k);
    for i in chosen {
        let orig = &d.samples[i];
        let mut p = orig.clone();
        for f in &spec.target_features {
            let eps = spec.draw(rng);
            *p.feature_mut(f).ok_or_else(|| ErcdError::UnknownFeature(f.clone()))? += eps;
        }
        originals.push(orig.key());
        perturbed.push(p);
    }
    Ok(TestSuite {
        regulatory_target: target,
        spec: spec.clone(),
        base_digest: d.content_digest(),
        originals,
        perturbed,
    })
}
