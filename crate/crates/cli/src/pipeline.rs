//! The per-seed closed loop as separable stages over a [`SeedState`].

use seal_core::auditval::{fid, validate, Standardizer, ValidationReport, ValidationVerdict};
use seal_core::datagen::{generate, Dataset};
use seal_core::ercd::{augment, AugmentedDataset};
use seal_core::fedcal::{calibrate, emulate_real, Calibration, SimClient, UnitRegion};
use seal_core::governance::{
    share, transition, AccessRequest, DatasetMeta, LifecycleRecord, LifecycleState, SealedPackage, VERDICT_KEY,
};
use seal_core::numerics::RngStream;
use seal_core::taskmodel::{grid_search, MlpModel, TrainConfig, TASK_FEATURES};

use crate::config::RunConfig;
use crate::{log, CliError};

/// Everything one seed's loop has produced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedState {
    pub seed: u64,
    pub config_digest: String,
    /// Logical clock for lifecycle timestamps.
    pub clock: u64,
    /// Completed calibration passes.
    pub iteration: usize,
    /// Current generator parameters in normalized coordinates.
    pub theta_unit: Vec<f64>,
    pub real: Dataset,
    /// Data generated under the starting parameters.
    pub synthetic: Dataset,
    /// Data generated under the current parameters.
    pub current: Dataset,
    pub fid_pre: f64,
    pub dprime: Option<AugmentedDataset>,
    /// Calibrations run in this process, by pass index.
    pub calibrations: Vec<(usize, Calibration)>,
    pub model: Option<MlpModel>,
    pub report: Option<ValidationReport>,
    pub lifecycle: LifecycleRecord,
    pub package: Option<SealedPackage>,
}

fn master(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

impl SeedState {
    fn step(&mut self, action: &str) -> Result<(), CliError> {
        self.lifecycle = transition(&self.lifecycle, action, "seal-loop", self.clock)?;
        self.clock += 1;
        Ok(())
    }

    pub fn state(&self) -> LifecycleState {
        self.lifecycle.state
    }
}

/// FID of `sim` against `real` on the state features, standardized by
/// real-data moments.
pub fn fid_to_real(real: &Dataset, sim: &Dataset) -> Result<f64, CliError> {
    let std = Standardizer::fit(real, &TASK_FEATURES)?;
    Ok(fid(&std.matrix(real)?, &std.matrix(sim)?)?)
}

/// Emulated field data (reality plus interference) and the starting
/// synthetic dataset.
pub fn stage_generate(cfg: &RunConfig, seed: u64) -> Result<SeedState, CliError> {
    let m = master(seed);
    let base = generate(&cfg.reality, cfg.n_samples, &m.substream("reality", 0))?;
    let real = emulate_real(&base, &cfg.interference, &mut m.substream("interference", 0));
    let synthetic = generate(&cfg.theta, cfg.n_samples, &m.substream("generate", 0))?;
    let fid_pre = fid_to_real(&real, &synthetic)?;
    log(&format!("seed {seed}: generated {} samples, fid before calibration {fid_pre:.4}", synthetic.len()));
    let layout = cfg.theta.theta_layout();
    Ok(SeedState {
        seed,
        config_digest: cfg.digest(),
        clock: 0,
        iteration: 0,
        theta_unit: layout.normalize(&cfg.theta.to_flat()),
        lifecycle: LifecycleRecord::new(&synthetic.content_digest()),
        current: synthetic.clone(),
        real,
        synthetic,
        fid_pre,
        dprime: None,
        calibrations: Vec::new(),
        model: None,
        report: None,
        package: None,
    })
}

fn augment_current(cfg: &RunConfig, st: &mut SeedState) -> Result<(), CliError> {
    let rng = master(st.seed).substream("augment", st.iteration as u64);
    st.dprime = Some(augment(&st.current, &cfg.augment, &rng)?);
    Ok(())
}

pub fn stage_augment(cfg: &RunConfig, st: &mut SeedState) -> Result<(), CliError> {
    augment_current(cfg, st)?;
    st.step("ercd_complete")
}

/// One federated calibration pass from the current parameters, then
/// regeneration and re-augmentation under the result.
pub fn stage_calibrate(cfg: &RunConfig, st: &mut SeedState) -> Result<(), CliError> {
    if st.state() == LifecycleState::Rejected {
        st.step("recalibrate")?;
    }
    let m = master(st.seed);
    // each client simulates with the stream that produced the field data
    let clients = SimClient::from_partition(&st.real, cfg.fl.n_clients, &cfg.theta, &m.substream("reality", 0))?;
    let layout = cfg.theta.theta_layout();
    let free = cfg.fl.free_indices(&layout)?;
    let cal = calibrate(
        &st.theta_unit,
        &clients,
        &free,
        &cfg.fl,
        &UnitRegion(layout),
        &m.substream("calibrate", st.iteration as u64),
    )?;
    for _ in 0..cal.history.len().max(1) {
        st.step("fl_round_complete")?;
    }
    st.theta_unit = cal.theta_final.clone();
    let theta = cfg.theta.with_flat(&layout.project(&layout.denormalize(&st.theta_unit)))?;
    st.calibrations.push((st.iteration, cal));
    st.iteration += 1;
    st.current = generate(&theta, cfg.n_samples, &m.substream("generate", 0))?;
    augment_current(cfg, st)?;
    st.model = None;
    st.report = None;
    log(&format!("seed {}: calibration pass {} done", st.seed, st.iteration));
    Ok(())
}

fn train_seed(seed: u64, iteration: usize) -> u64 {
    let mut b = [0u8; 8];
    master(seed).substream("train", iteration as u64).fill_bytes(&mut b);
    u64::from_le_bytes(b)
}

/// Trains the task model on the refined data and scores it.
pub fn stage_validate(cfg: &RunConfig, st: &mut SeedState) -> Result<(), CliError> {
    let dprime = st.dprime.as_ref().ok_or_else(|| CliError::MissingArtifact("augmented dataset".into()))?;
    let t = &cfg.training;
    let base = TrainConfig {
        learning_rate: t.learning_rates[0],
        batch_size: t.batch_sizes[0],
        max_epochs: t.max_epochs,
        patience: t.patience,
        seed: train_seed(st.seed, st.iteration),
        hidden: t.hidden.clone(),
    };
    let grid = grid_search(dprime.training_data(), &TASK_FEATURES, &t.learning_rates, &t.batch_sizes, &base)?;
    let report = validate(dprime, &st.real, &grid.best.model, &cfg.thresholds, st.seed)?;
    log(&format!(
        "seed {}: fid {:.4}, eo gap {:.4}, task acc {:.4} -> {}",
        st.seed,
        report.fid,
        report.fairness.eo_gap,
        report.task_acc,
        report.verdict.as_str()
    ));
    st.model = Some(grid.best.model);
    st.report = Some(report);
    st.step("metrics_computed")
}

fn dataset_meta(report: &ValidationReport) -> DatasetMeta {
    let mut m = DatasetMeta::new();
    m.insert(VERDICT_KEY.into(), report.verdict.as_str().into());
    m.insert("fid".into(), seal_core::canonical::format_float(report.fid));
    m.insert("eo_gap".into(), seal_core::canonical::format_float(report.fairness.eo_gap));
    m
}

/// Records the audit verdict; a certified dataset is sealed when a key is
/// configured.
pub fn stage_govern(cfg: &RunConfig, st: &mut SeedState) -> Result<(), CliError> {
    let report = st.report.as_ref().ok_or_else(|| CliError::MissingArtifact("validation report".into()))?;
    let pass = report.verdict == ValidationVerdict::Pass;
    let meta = dataset_meta(report);
    st.step(if pass { "audit_pass" } else { "audit_fail" })?;
    if let (true, Some(path)) = (pass, &cfg.governance.key_file) {
        let key = crate::store::read_key(path)?;
        let dprime = st.dprime.as_ref().ok_or_else(|| CliError::MissingArtifact("augmented dataset".into()))?;
        let req = AccessRequest {
            user: cfg.governance.user.clone(),
            meta,
            policies: cfg.governance.policies.clone(),
        };
        // nonce stream keyed by the payload, so one key never sees two
        // different payloads under the same nonce
        let digest = dprime.digest();
        let mut rng = master(st.seed).substream(&format!("seal:{digest}"), 0);
        let (pkg, rec) = share(dprime, &st.lifecycle, &req, &key, &cfg.governance.key_id, &mut rng, st.clock)?;
        st.clock += 1;
        st.lifecycle = rec;
        st.package = Some(pkg);
    }
    Ok(())
}

/// Runs the full loop for one seed. On error the partial state is
/// returned alongside it so the caller can keep the artifacts.
pub fn run_seed(cfg: &RunConfig, seed: u64) -> Result<SeedState, (Option<Box<SeedState>>, CliError)> {
    let mut st = stage_generate(cfg, seed).map_err(|e| (None, e))?;
    let res = (|| {
        stage_augment(cfg, &mut st)?;
        loop {
            stage_calibrate(cfg, &mut st)?;
            stage_validate(cfg, &mut st)?;
            stage_govern(cfg, &mut st)?;
            if st.state() == LifecycleState::Certified || st.iteration >= cfg.max_loop_iterations {
                return Ok(());
            }
        }
    })();
    match res {
        Ok(()) => Ok(st),
        Err(e) => Err((Some(Box::new(st)), e)),
    }
}
