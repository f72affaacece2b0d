//! Orchestration of the closed loop and the `seal` command line.
//!
//! Each seed runs generate -> augment -> (calibrate -> validate -> govern)
//! until the dataset is certified or `max_loop_iterations` calibration
//! passes have been spent. Artifacts land in `<output>/seed-<n>/` with a
//! digest manifest; `<output>/ledger.csv` and `<output>/summary.json`
//! aggregate the seeds.

pub mod cli;
pub mod config;
pub mod pipeline;
pub mod store;
pub mod summary;

use std::fs;
use std::path::Path;

use thiserror::Error;

use seal_core::governance::LifecycleState;

pub use config::{GovernanceConfig, RunConfig, TrainingConfig, CONFIG_SCHEMA_VERSION};
pub use pipeline::{run_seed, SeedState};
pub use summary::{RunSummary, SeedRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("digest mismatch for {artifact}: expected {expected}, found {got}")]
    DigestMismatch { artifact: String, expected: String, got: String },
    #[error("datagen: {0}")]
    Datagen(#[from] seal_core::datagen::DatagenError),
    #[error("ercd: {0}")]
    Ercd(#[from] seal_core::ercd::ErcdError),
    #[error("fedcal: {0}")]
    Fedcal(#[from] seal_core::fedcal::FedcalError),
    #[error("taskmodel: {0}")]
    Task(#[from] seal_core::taskmodel::TaskError),
    #[error("auditval: {0}")]
    Audit(#[from] seal_core::auditval::AuditError),
    #[error("governance: {0}")]
    Governance(#[from] seal_core::governance::GovError),
}

/// Progress messages on stderr when `SEAL_LOG` is set.
pub(crate) fn log(msg: &str) {
    if std::env::var_os("SEAL_LOG").is_some() {
        eprintln!("[seal] {msg}");
    }
}

/// Runs `seeds` through the loop, writing every seed directory plus the
/// aggregate ledger and summary under `output`.
pub fn run_loop(cfg: &RunConfig, seeds: &[u64], output: &Path) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let dir = store::seed_dir(output, seed);
        let st = match run_seed(cfg, seed) {
            Ok(st) => st,
            Err((partial, e)) => {
                if let Some(st) = partial {
                    // keep what exists for post-mortem
                    let _ = store::save(&dir, cfg, &st);
                }
                return Err(e);
            }
        };
        store::save(&dir, cfg, &st)?;
        let report = st.report.as_ref().expect("a finished loop has a report");
        rows.push(SeedRow::new(seed, st.iteration, st.state(), st.fid_pre, report));
    }
    let summary = RunSummary::from_rows(rows)?;
    let write = |name: &str, bytes: &[u8]| {
        let p = output.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    write("ledger.csv", &summary::ledger_csv(&summary.rows)?)?;
    write("summary.json", seal_core::canonical::to_canonical_string(&summary).expect("summary serializes").as_bytes())?;
    Ok(summary)
}

/// 0 when every seed ended certified, 2 otherwise.
pub fn exit_code_for(states: impl IntoIterator<Item = LifecycleState>) -> i32 {
    if states.into_iter().all(|s| s == LifecycleState::Certified || s == LifecycleState::Archived) {
        0
    } else {
        2
    }
}
