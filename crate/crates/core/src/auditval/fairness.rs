use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::datagen::Dataset;
use crate::ercd::TestSuite;
use crate::taskmodel::{predict, MlpModel, TaskError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessResult {
    /// |TPR_0 - TPR_1| + |FPR_0 - FPR_1|
    pub eo_gap: f64,
    /// 1 - eo_gap, for tables where higher is better.
    pub eo_score: f64,
    /// Indexed by group code.
    pub tpr: [f64; 2],
    pub fpr: [f64; 2],
    /// `counts[y][a]`
    pub counts: [[usize; 2]; 2],
}

pub fn equalized_odds(preds: &[u8], labels: &[u8], groups: &[u8]) -> Result<FairnessResult, AuditError> {
    if preds.len() != labels.len() || preds.len() != groups.len() {
        return Err(AuditError::LengthMismatch(format!(
            "{} predictions, {} labels, {} groups",
            preds.len(),
            labels.len(),
            groups.len()
        )));
    }
    let mut counts = [[0usize; 2]; 2];
    let mut positives = [[0usize; 2]; 2];
    for ((&p, &y), &a) in preds.iter().zip(labels).zip(groups) {
        if p > 1 || y > 1 || a > 1 {
            return Err(AuditError::InvalidInput(format!("non-binary entry (pred {p}, label {y}, group {a})")));
        }
        counts[y as usize][a as usize] += 1;
        positives[y as usize][a as usize] += p as usize;
    }
    for y in 0..2 {
        for a in 0..2 {
            if counts[y][a] == 0 {
                return Err(AuditError::EmptyCell { y: y as u8, a: a as u8 });
            }
        }
    }
    let rate = |y: usize, a: usize| positives[y][a] as f64 / counts[y][a] as f64;
    let tpr = [rate(1, 0), rate(1, 1)];
    let fpr = [rate(0, 0), rate(0, 1)];
    let eo_gap = (tpr[0] - tpr[1]).abs() + (fpr[0] - fpr[1]).abs();
    Ok(FairnessResult { eo_gap, eo_score: 1.0 - eo_gap, tpr, fpr, counts })
}

/// Anything that maps a raw feature vector to a class.
pub trait Classifier {
    fn classify(&self, features: &[f64]) -> Result<u8, TaskError>;
}

impl Classifier for MlpModel {
    fn classify(&self, features: &[f64]) -> Result<u8, TaskError> {
        predict(self, features)
    }
}

impl<F: Fn(&[f64]) -> u8> Classifier for F {
    fn classify(&self, features: &[f64]) -> Result<u8, TaskError> {
        Ok(self(features))
    }
}

/// Fraction of suite pairs whose predicted class survives the perturbation.
pub fn adversarial_accuracy(
    model: &dyn Classifier,
    features: &[&str],
    suite: &TestSuite,
    originals: &Dataset,
) -> Result<f64, AuditError> {
    if suite.is_empty() {
        return Err(AuditError::InvalidInput("empty test suite".into()));
    }
    let by_key: std::collections::HashMap<(u32, u32), usize> =
        originals.samples.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
    let row = |s: &crate::datagen::Sample| -> Result<Vec<f64>, AuditError> {
        features
            .iter()
            .map(|f| s.feature(f).ok_or_else(|| AuditError::SchemaMismatch(format!("unknown feature `{f}`"))))
            .collect()
    };
    let mut same = 0usize;
    for (key, pert) in suite.originals.iter().zip(&suite.perturbed) {
        let &i = by_key
            .get(key)
            .ok_or_else(|| AuditError::BrokenLinkage(format!("suite sample {key:?} not in originals")))?;
        if pert.key() != *key {
            return Err(AuditError::BrokenLinkage(format!("perturbed sample {:?} linked to {key:?}", pert.key())));
        }
        let a = model.classify(&row(&originals.samples[i])?)?;
        let b = model.classify(&row(pert)?)?;
        same += usize::from(a == b);
    }
    Ok(same as f64 / suite.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cell_names_the_cell() {
        let err = equalized_odds(&[1, 0, 1], &[1, 0, 1], &[0, 0, 1]).unwrap_err();
        assert_eq!(err, AuditError::EmptyCell { y: 0, a: 1 });
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(equalized_odds(&[1], &[1, 0], &[0, 1]), Err(AuditError::LengthMismatch(_))));
    }
}
