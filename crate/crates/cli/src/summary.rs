//! Per-seed ledger rows and their mean ± std aggregate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use seal_core::auditval::ValidationReport;
use seal_core::governance::LifecycleState;
use seal_core::numerics::mean_std;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub iterations: usize,
    pub final_state: String,
    pub fid_pre: f64,
    pub fid: f64,
    pub eo_gap: f64,
    pub eo_score: f64,
    pub adv_acc: f64,
    pub task_acc: f64,
    pub verdict: String,
}

impl SeedRow {
    pub fn new(seed: u64, iterations: usize, state: LifecycleState, fid_pre: f64, r: &ValidationReport) -> Self {
        Self {
            seed,
            iterations,
            final_state: format!("{state:?}"),
            fid_pre,
            fid: r.fid,
            eo_gap: r.fairness.eo_gap,
            eo_score: r.fairness.eo_score,
            adv_acc: r.adv_acc,
            task_acc: r.task_acc,
            verdict: r.verdict.as_str().into(),
        }
    }
}

pub fn ledger_csv(rows: &[SeedRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_ledger(path: &Path) -> Result<Vec<SeedRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<SeedRow>, _>>()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rows: Vec<SeedRow>,
    pub fid_pre: MeanStd,
    pub fid: MeanStd,
    pub eo_gap: MeanStd,
    pub eo_score: MeanStd,
    pub adv_acc: MeanStd,
    pub task_acc: MeanStd,
    pub iterations: MeanStd,
    pub certified: usize,
}

impl RunSummary {
    pub fn from_rows(rows: Vec<SeedRow>) -> Result<Self, CliError> {
        if rows.is_empty() {
            return Err(CliError::Format("no ledger rows to aggregate".into()));
        }
        let col = |f: fn(&SeedRow) -> f64| MeanStd::of(&rows.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            fid_pre: col(|r| r.fid_pre),
            fid: col(|r| r.fid),
            eo_gap: col(|r| r.eo_gap),
            eo_score: col(|r| r.eo_score),
            adv_acc: col(|r| r.adv_acc),
            task_acc: col(|r| r.task_acc),
            iterations: col(|r| r.iterations as f64),
            certified: rows.iter().filter(|r| r.final_state == "Certified").count(),
            rows,
        })
    }

    /// Header and one aggregate row, `mean ± std` per metric.
    pub fn table(&self) -> String {
        format!(
            "seeds,certified,fid_pre,fid,eo_gap,eo_score,adv_acc,task_acc\n{},{},{},{},{},{},{},{}\n",
            self.rows.len(),
            self.certified,
            self.fid_pre,
            self.fid,
            self.eo_gap,
            self.eo_score,
            self.adv_acc,
            self.task_acc
        )
    }
}
