use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ErcdError;
use crate::canonical;

/// Pass condition attached to a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// value < limit
    Below(f64),
    /// value <= limit
    AtMost(f64),
    /// value >= limit
    AtLeast(f64),
}

impl Gate {
    pub fn passes(self, value: f64) -> bool {
        match self {
            Gate::Below(l) => value < l,
            Gate::AtMost(l) => value <= l,
            Gate::AtLeast(l) => value >= l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub gate: Option<Gate>,
}

impl MetricValue {
    pub fn info(value: f64) -> Self {
        Self { value, gate: None }
    }

    pub fn gated(value: f64, gate: Gate) -> Self {
        Self { value, gate: Some(gate) }
    }
}

/// Computed metrics by name.
pub type MetricTable = BTreeMap<String, MetricValue>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseMapping {
    pub clause_id: String,
    pub metric_name: String,
}

impl ClauseMapping {
    pub fn new(clause_id: &str, metric_name: &str) -> Self {
        Self { clause_id: clause_id.into(), metric_name: metric_name.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailEntry {
    pub clause_id: String,
    pub metric_name: String,
    pub metric_value: f64,
    pub gate: Option<Gate>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrail {
    pub entries: Vec<TrailEntry>,
    pub created_at: u64,
    pub dataset_digest: String,
}

impl AuditTrail {
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("trail serializes")
    }

    pub fn digest(&self) -> String {
        canonical::sha256_hex(self.to_canonical_json().as_bytes())
    }

    pub fn any_fail(&self) -> bool {
        self.entries.iter().any(|e| e.verdict == Verdict::Fail)
    }
}

/// One entry per mapping, sorted by clause id. Gated metrics get pass or
/// fail, ungated ones info.
pub fn build_trail(
    metrics: &MetricTable,
    mappings: &[ClauseMapping],
    dataset_digest: &str,
    created_at: u64,
) -> Result<AuditTrail, ErcdError> {
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(mappings.len());
    for m in mappings {
        if !seen.insert(m.clause_id.as_str()) {
            return Err(ErcdError::DuplicateClause(m.clause_id.clone()));
        }
        let v = metrics
            .get(&m.metric_name)
            .ok_or_else(|| ErcdError::UnresolvableMetric(m.metric_name.clone()))?;
        let verdict = match v.gate {
            None => Verdict::Info,
            Some(g) if g.passes(v.value) => Verdict::Pass,
            Some(_) => Verdict::Fail,
        };
        entries.push(TrailEntry {
            clause_id: m.clause_id.clone(),
            metric_name: m.metric_name.clone(),
            metric_value: v.value,
            gate: v.gate,
            verdict,
        });
    }
    entries.sort_by(|a, b| a.clause_id.cmp(&b.clause_id));
    Ok(AuditTrail { entries, created_at, dataset_digest: dataset_digest.into() })
}
