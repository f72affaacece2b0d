use serde::{Deserialize, Serialize};

use super::causal::{bootstrap_threshold_discrete, causal_score_discrete, BiasReport, BiasScore, BootstrapInfo, CausalColumns};
use super::discretize::DEFAULT_BINS;
use super::graph::discover_graph;
use super::resample::fairness_resample;
use super::suite::{build_suite, PerturbationDistribution, PerturbationSpec, RegulatoryTarget, TestSuite};
use super::trail::{build_trail, AuditTrail, ClauseMapping, Gate, MetricTable, MetricValue};
use super::ErcdError;
use crate::canonical;
use crate::datagen::{Dataset, Group};
use crate::numerics::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub target: RegulatoryTarget,
    pub spec: PerturbationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub bins: usize,
    /// Significance level of the skeleton's independence tests.
    pub alpha: f64,
    pub n_resamples: usize,
    pub quantile: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            x: "group".into(),
            y: "label".into(),
            z: vec!["traffic_load_pps".into()],
            bins: DEFAULT_BINS,
            alpha: 0.01,
            n_resamples: 1000,
            quantile: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub suites: Vec<SuiteConfig>,
    pub fairness_resample: bool,
    pub bias: Option<BiasConfig>,
    pub mappings: Vec<ClauseMapping>,
}

impl Default for AugmentConfig {
    /// Fairness and robustness suites over 20% of the data, group
    /// rebalancing, and a group -> label bias check.
    fn default() -> Self {
        let spec = |distribution, eta, targets: &[&str]| PerturbationSpec {
            distribution,
            eta,
            target_features: targets.iter().map(|s| s.to_string()).collect(),
            sample_fraction: 0.2,
        };
        Self {
            suites: vec![
                SuiteConfig {
                    target: RegulatoryTarget::Fairness,
                    spec: spec(PerturbationDistribution::Uniform, 2.0, &["snr_db"]),
                },
                SuiteConfig {
                    target: RegulatoryTarget::Robustness,
                    spec: spec(PerturbationDistribution::Gaussian, 0.5, &["traffic_load_pps", "snr_db"]),
                },
            ],
            fairness_resample: true,
            bias: Some(BiasConfig::default()),
            mappings: vec![
                ClauseMapping::new("EU-AI-Act-Art-10.2f", "causal_score_group_label"),
                ClauseMapping::new("EU-AI-Act-Art-10.3", "group_share_urban"),
                ClauseMapping::new("EU-AI-Act-Art-15.1", "suite_size_robustness"),
                ClauseMapping::new("EU-AI-Act-Art-15.4", "suite_size_fairness"),
            ],
        }
    }
}

impl AugmentConfig {
    /// No suites, no resampling, no bias check; the trail only inventories
    /// the dataset.
    pub fn disabled() -> Self {
        Self {
            suites: Vec::new(),
            fairness_resample: false,
            bias: None,
            mappings: vec![ClauseMapping::new("EU-AI-Act-Art-12", "sample_count")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedDataset {
    pub base: Dataset,
    pub base_digest: String,
    /// Group-balanced copy of `base`, when resampling is enabled.
    pub resampled: Option<Dataset>,
    pub suites: Vec<TestSuite>,
    pub bias: Option<BiasReport>,
    pub metrics: MetricTable,
    pub trail: AuditTrail,
}

impl AugmentedDataset {
    /// The data downstream stages should train on.
    pub fn training_data(&self) -> &Dataset {
        self.resampled.as_ref().unwrap_or(&self.base)
    }

    pub fn suite(&self, target: RegulatoryTarget) -> Option<&TestSuite> {
        self.suites.iter().find(|s| s.regulatory_target == target)
    }

    /// True when every derived artifact names the digest of `base`.
    pub fn links_consistent(&self) -> bool {
        let d = self.base.content_digest();
        d == self.base_digest
            && self.trail.dataset_digest == d
            && self.suites.iter().all(|s| s.base_digest == d)
            && self.bias.as_ref().is_none_or(|b| b.base_digest == d)
    }

    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("augmented dataset serializes")
    }

    pub fn digest(&self) -> String {
        canonical::sha256_hex(self.to_canonical_json().as_bytes())
    }

    /// Rebuilds the trail after further metrics were added.
    pub fn rebuild_trail(&mut self, mappings: &[ClauseMapping], created_at: u64) -> Result<(), ErcdError> {
        self.trail = build_trail(&self.metrics, mappings, &self.base_digest, created_at)?;
        Ok(())
    }
}

fn urban_share(d: &Dataset) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    d.samples.iter().filter(|s| s.group == Group::Urban).count() as f64 / d.len() as f64
}

/// Runs the configured suites, resampling, bias scoring and trail over `d`.
pub fn augment(d: &Dataset, cfg: &AugmentConfig, rng: &RngStream) -> Result<AugmentedDataset, ErcdError> {
    if d.is_empty() {
        return Err(ErcdError::EmptyDataset);
    }
    let base_digest = d.content_digest();
    let mut metrics = MetricTable::new();
    metrics.insert("sample_count".into(), MetricValue::info(d.len() as f64));
    metrics.insert("group_share_urban".into(), MetricValue::info(urban_share(d)));

    let mut suites = Vec::with_capacity(cfg.suites.len());
    for (i, sc) in cfg.suites.iter().enumerate() {
        let mut srng = rng.substream("suite", i as u64);
        let suite = build_suite(d, sc.target, &sc.spec, &mut srng)?;
        metrics.insert(format!("suite_size_{}", sc.target.as_str()), MetricValue::info(suite.len() as f64));
        suites.push(suite);
    }

    let resampled = if cfg.fairness_resample {
        let out = fairness_resample(d, &mut rng.substream("resample", 0))?;
        metrics.insert("resampled_group_share_urban".into(), MetricValue::info(urban_share(&out)));
        Some(out)
    } else {
        None
    };

    let bias = match &cfg.bias {
        Some(bc) => {
            let graph = discover_graph(d, bc.alpha, bc.bins)?;
            let cols = CausalColumns::from_dataset(d, &bc.x, &bc.y, &bc.z, bc.bins)?;
            let score = causal_score_discrete(&cols.x_name, &cols.x, &cols.y, &cols.z)?;
            let threshold =
                bootstrap_threshold_discrete(&cols, bc.n_resamples, bc.quantile, &rng.substream("bootstrap", 0))?;
            let entry = BiasScore::new(&bc.x, &bc.y, &bc.z, score, threshold);
            metrics.insert(entry.metric_name(), MetricValue::gated(score, Gate::AtMost(threshold)));
            Some(BiasReport {
                base_digest: base_digest.clone(),
                scores: vec![entry],
                graph,
                bootstrap: BootstrapInfo { n_resamples: bc.n_resamples, quantile: bc.quantile },
            })
        }
        None => None,
    };

    let trail = build_trail(&metrics, &cfg.mappings, &base_digest, d.metadata.created_at)?;
    Ok(AugmentedDataset { base: d.clone(), base_digest, resampled, suites, bias, metrics, trail })
}
