use serde::{Deserialize, Serialize};

use super::{DatagenError, SimulationParams};
use crate::canonical;

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_VERSION: &str = concat!("seal-datagen/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Urban,
    Rural,
}

impl Group {
    /// Binary coding used by the fairness metrics: urban = 1.
    pub fn code(self) -> u8 {
        match self {
            Group::Urban => 1,
            Group::Rural => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub run_id: String,
    pub seed: u64,
    pub generator_version: String,
    /// Processing steps applied after generation, oldest first.
    #[serde(default)]
    pub lineage: Vec<String>,
}

/// One network observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub timestamp_s: f64,
    pub user_id: u32,
    /// Observation window index within the user's timeline.
    pub window: u32,
    pub pos_x_m: f64,
    pub pos_y_m: f64,
    pub speed_mps: f64,
    pub traffic_load_pps: f64,
    pub snr_db: f64,
    pub group: Group,
    pub label: u8,
    pub is_anomalous: bool,
    pub provenance: Provenance,
}

/// Numeric features in schema order.
pub const NUMERIC_FEATURES: [&str; 6] =
    ["timestamp_s", "pos_x_m", "pos_y_m", "speed_mps", "traffic_load_pps", "snr_db"];

/// Features that describe network state (everything numeric except time).
pub const STATE_FEATURES: [&str; 5] =
    ["pos_x_m", "pos_y_m", "speed_mps", "traffic_load_pps", "snr_db"];

impl Sample {
    pub fn key(&self) -> (u32, u32) {
        (self.user_id, self.window)
    }

    pub fn feature(&self, name: &str) -> Option<f64> {
        Some(match name {
            "timestamp_s" => self.timestamp_s,
            "pos_x_m" => self.pos_x_m,
            "pos_y_m" => self.pos_y_m,
            "speed_mps" => self.speed_mps,
            "traffic_load_pps" => self.traffic_load_pps,
            "snr_db" => self.snr_db,
            "group" => f64::from(self.group.code()),
            "label" => f64::from(self.label),
            "is_anomalous" => f64::from(u8::from(self.is_anomalous)),
            _ => return None,
        })
    }

    pub fn feature_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "timestamp_s" => &mut self.timestamp_s,
            "pos_x_m" => &mut self.pos_x_m,
            "pos_y_m" => &mut self.pos_y_m,
            "speed_mps" => &mut self.speed_mps,
            "traffic_load_pps" => &mut self.traffic_load_pps,
            "snr_db" => &mut self.snr_db,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    pub unit: String,
}

pub fn default_schema() -> Vec<FeatureDescriptor> {
    let f = |name: &str, kind, unit: &str| FeatureDescriptor {
        name: name.into(),
        kind,
        unit: unit.into(),
    };
    vec![
        f("timestamp_s", FeatureKind::Numeric, "s"),
        f("pos_x_m", FeatureKind::Numeric, "m"),
        f("pos_y_m", FeatureKind::Numeric, "m"),
        f("speed_mps", FeatureKind::Numeric, "m/s"),
        f("traffic_load_pps", FeatureKind::Numeric, "packets/s"),
        f("snr_db", FeatureKind::Numeric, "dB"),
        f("group", FeatureKind::Categorical, "urban|rural"),
        f("label", FeatureKind::Binary, "0|1"),
        f("is_anomalous", FeatureKind::Binary, "bool"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub theta: SimulationParams,
    pub seed: u64,
    pub sample_count: usize,
    pub run_id: String,
    pub generator_version: String,
    /// Logical creation time (seconds); kept out of the content digest.
    pub created_at: u64,
    #[serde(default)]
    pub lineage: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Vec<FeatureDescriptor>,
    pub samples: Vec<Sample>,
    pub metadata: DatasetMetadata,
}

/// Sidecar document written next to the JSON-Lines sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub schema: Vec<FeatureDescriptor>,
    pub metadata: DatasetMetadata,
    pub content_digest: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn group_counts(&self) -> (usize, usize) {
        let urban = self.samples.iter().filter(|s| s.group == Group::Urban).count();
        (urban, self.samples.len() - urban)
    }

    pub fn is_numeric_feature(&self, name: &str) -> bool {
        self.schema.iter().any(|f| f.name == name && f.kind == FeatureKind::Numeric)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, DatagenError> {
        self.samples
            .iter()
            .map(|s| s.feature(name).ok_or_else(|| DatagenError::UnknownFeature(name.into())))
            .collect()
    }

    /// Canonical JSON-Lines encoding of the samples, one object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 320);
        for s in &self.samples {
            out.push_str(&canonical::to_canonical_string(s).expect("samples serialize"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 over [`Dataset::to_jsonl`].
    pub fn content_digest(&self) -> String {
        canonical::sha256_hex(self.to_jsonl().as_bytes())
    }

    pub fn sidecar(&self) -> DatasetSidecar {
        DatasetSidecar {
            schema: self.schema.clone(),
            metadata: self.metadata.clone(),
            content_digest: self.content_digest(),
        }
    }

    /// Rebuilds a dataset from its JSON-Lines body and sidecar, refusing
    /// content whose digest does not match.
    pub fn from_parts(jsonl: &str, sidecar: DatasetSidecar) -> Result<Self, DatagenError> {
        let samples = jsonl
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str::<Sample>(line)
                    .map_err(|e| DatagenError::Format(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ds = Dataset { schema: sidecar.schema, samples, metadata: sidecar.metadata };
        let digest = ds.content_digest();
        if digest != sidecar.content_digest {
            return Err(DatagenError::DigestMismatch {
                expected: sidecar.content_digest,
                actual: digest,
            });
        }
        Ok(ds)
    }

    /// Appends a lineage note to the metadata and every sample.
    pub fn note_lineage(&mut self, note: &str) {
        self.metadata.lineage.push(note.to_string());
        for s in &mut self.samples {
            s.provenance.lineage.push(note.to_string());
        }
    }
}
