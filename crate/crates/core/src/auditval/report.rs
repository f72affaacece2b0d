use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{adversarial_accuracy, equalized_odds, fid, AuditError, FairnessResult, Standardizer};
use crate::canonical;
use crate::datagen::Dataset;
use crate::ercd::{AugmentedDataset, RegulatoryTarget};
use crate::taskmodel::{predict, MlpModel, TASK_FEATURES};

/// JSON has no infinity; an absent gate is written as `null`.
mod gate_bound {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(with = "gate_bound")]
    pub fid_max: f64,
    #[serde(with = "gate_bound")]
    pub eo_gap_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { fid_max: 0.1, eo_gap_max: 0.05 }
    }
}

impl Thresholds {
    pub fn open() -> Self {
        Self { fid_max: f64::INFINITY, eo_gap_max: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationVerdict {
    Pass,
    Recalibrate,
}

impl ValidationVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationVerdict::Pass => "pass",
            ValidationVerdict::Recalibrate => "recalibrate",
        }
    }
}

/// Pass iff both gates hold strictly.
pub fn decide(fid: f64, eo_gap: f64, t: &Thresholds) -> ValidationVerdict {
    if fid < t.fid_max && eo_gap < t.eo_gap_max {
        ValidationVerdict::Pass
    } else {
        ValidationVerdict::Recalibrate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fid: f64,
    pub fairness: FairnessResult,
    pub adv_acc: f64,
    pub task_acc: f64,
    pub thresholds: Thresholds,
    pub verdict: ValidationVerdict,
    pub dprime_digest: String,
    pub real_digest: String,
    pub model_digest: String,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 6] = ["fid", "eo_gap", "eo_score", "adv_acc", "task_acc", "verdict"];

impl ValidationReport {
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("report serializes")
    }

    pub fn digest(&self) -> String {
        canonical::sha256_hex(self.to_canonical_json().as_bytes())
    }

    /// Row matching [`CSV_HEADER`].
    pub fn csv_row(&self) -> [String; 6] {
        [
            canonical::format_float(self.fid),
            canonical::format_float(self.fairness.eo_gap),
            canonical::format_float(self.fairness.eo_score),
            canonical::format_float(self.adv_acc),
            canonical::format_float(self.task_acc),
            self.verdict.as_str().to_string(),
        ]
    }
}

/// Scores `dprime` against the emulated real data with a trained model.
///
/// FID compares the generated base data with the real data on the state
/// features standardized by real-data moments. Accuracy and equalized odds
/// are measured on the real data; adversarial accuracy uses the robustness
/// suite (or the first suite when there is none).
pub fn validate(
    dprime: &AugmentedDataset,
    real: &Dataset,
    model: &MlpModel,
    thresholds: &Thresholds,
    seed: u64,
) -> Result<ValidationReport, AuditError> {
    if !dprime.links_consistent() {
        return Err(AuditError::DigestMismatch("augmented dataset artifacts name a different base digest".into()));
    }
    if model.feature_names != TASK_FEATURES {
        return Err(AuditError::SchemaMismatch(format!("model inputs {:?}", model.feature_names)));
    }
    let std = Standardizer::fit(real, &TASK_FEATURES)?;
    let fid = fid(&std.matrix(real)?, &std.matrix(&dprime.base)?)?;

    let mut preds = Vec::with_capacity(real.len());
    let mut row = vec![0.0; TASK_FEATURES.len()];
    for s in &real.samples {
        for (v, f) in row.iter_mut().zip(TASK_FEATURES) {
            *v = s.feature(f).expect("state feature");
        }
        preds.push(predict(model, &row)?);
    }
    let labels: Vec<u8> = real.samples.iter().map(|s| s.label).collect();
    let groups: Vec<u8> = real.samples.iter().map(|s| s.group.code()).collect();
    let hits = preds.iter().zip(&labels).filter(|(p, y)| p == y).count();
    let task_acc = hits as f64 / real.len().max(1) as f64;
    let fairness = equalized_odds(&preds, &labels, &groups)?;

    let suite = dprime
        .suite(RegulatoryTarget::Robustness)
        .or(dprime.suites.first())
        .ok_or_else(|| AuditError::InvalidInput("augmented dataset has no test suite".into()))?;
    let adv_acc = adversarial_accuracy(model, &TASK_FEATURES, suite, &dprime.base)?;

    let verdict = decide(fid, fairness.eo_gap, thresholds);
    Ok(ValidationReport {
        fid,
        fairness,
        adv_acc,
        task_acc,
        thresholds: *thresholds,
        verdict,
        dprime_digest: dprime.digest(),
        real_digest: real.content_digest(),
        model_digest: canonical::sha256_hex(model.to_json().as_bytes()),
        seed,
    })
}
