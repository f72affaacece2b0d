use std::io::Write;

use serde::{Deserialize, Serialize};

use super::aggregate::fedavg;
use super::client::{local_gradient, Objective, Region};
use super::dp::dp_noise;
use super::FedcalError;
use crate::canonical;
use crate::datagen::ThetaLayout;
use crate::numerics::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FLConfig {
    pub n_clients: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub dp_sigma: f64,
    pub clip_norm: f64,
    /// Central-difference step in normalized coordinates.
    pub fd_step: f64,
    /// Parameters being calibrated, by flat-vector name; the rest stay at
    /// their starting values.
    pub free: Vec<String>,
}

impl Default for FLConfig {
    fn default() -> Self {
        Self {
            n_clients: 5,
            n_rounds: 10,
            learning_rate: 0.03,
            dp_sigma: 1.0,
            clip_norm: 1.0,
            fd_step: 1e-3,
            free: vec!["shadowing_sigma_db".into()],
        }
    }
}

impl FLConfig {
    pub fn validate(&self) -> Result<(), FedcalError> {
        let bad = |m: String| Err(FedcalError::InvalidConfig(m));
        if self.n_clients == 0 {
            return bad("n_clients must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.dp_sigma >= 0.0 && self.dp_sigma.is_finite()) {
            return bad(format!("dp_sigma must be >= 0, got {}", self.dp_sigma));
        }
        if !(self.clip_norm > 0.0) {
            return bad(format!("clip_norm must be > 0, got {}", self.clip_norm));
        }
        if !(self.fd_step > 0.0) {
            return bad(format!("fd_step must be > 0, got {}", self.fd_step));
        }
        Ok(())
    }

    pub fn free_indices(&self, layout: &ThetaLayout) -> Result<Vec<usize>, FedcalError> {
        self.free
            .iter()
            .map(|n| {
                layout
                    .index_of(n)
                    .ok_or_else(|| FedcalError::InvalidConfig(format!("unknown parameter `{n}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRound {
    pub client_id: usize,
    pub n_samples: usize,
    pub delta: f64,
    pub gradient: Vec<f64>,
    pub noised_gradient: Vec<f64>,
}

/// One aggregation step. All vectors are in normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FLRoundState {
    pub round: usize,
    pub theta: Vec<f64>,
    pub per_client: Vec<ClientRound>,
    pub aggregated_g: Vec<f64>,
    /// `theta - learning_rate * aggregated_g`, before projection.
    pub theta_next_unprojected: Vec<f64>,
    pub theta_next: Vec<f64>,
}

impl FLRoundState {
    /// Sample-weighted mean discrepancy at `theta`.
    pub fn mean_delta(&self) -> f64 {
        let n: usize = self.per_client.iter().map(|c| c.n_samples).sum();
        self.per_client.iter().map(|c| c.delta * c.n_samples as f64).sum::<f64>() / n as f64
    }
}

/// Records what noise was applied; no (epsilon, delta) accounting is done.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    pub dp_sigma: f64,
    pub clip_norm: f64,
    pub rounds_applied: usize,
    pub note: String,
}

impl PrivacyLedger {
    pub fn new(cfg: &FLConfig) -> Self {
        Self {
            dp_sigma: cfg.dp_sigma,
            clip_norm: cfg.clip_norm,
            rounds_applied: 0,
            note: "Gaussian noise on clipped per-client gradients; (epsilon, delta) accounting not computed".into(),
        }
    }
}

/// Every client scores and differentiates at `theta`, clips and noises its
/// gradient on the free coordinates, and the server takes one FedAvg step.
#[allow(clippy::too_many_arguments)]
pub fn run_round<O: Objective>(
    round: usize,
    theta: &[f64],
    clients: &[O],
    free: &[usize],
    cfg: &FLConfig,
    region: &dyn Region,
    rng: &RngStream,
    ledger: &mut PrivacyLedger,
) -> Result<FLRoundState, FedcalError> {
    if clients.is_empty() {
        return Err(FedcalError::NoClients);
    }
    let round_rng = rng.substream("dp", round as u64);
    let mut per_client = Vec::with_capacity(clients.len());
    for (k, c) in clients.iter().enumerate() {
        let delta = c.loss(theta)?;
        let gradient = local_gradient(c, theta, free, cfg.fd_step)?;
        let sub: Vec<f64> = free.iter().map(|&i| gradient[i]).collect();
        let noised_sub = dp_noise(&sub, cfg.clip_norm, cfg.dp_sigma, &mut round_rng.substream("client", k as u64));
        let mut noised_gradient = vec![0.0; theta.len()];
        for (&i, v) in free.iter().zip(noised_sub) {
            noised_gradient[i] = v;
        }
        per_client.push(ClientRound { client_id: k, n_samples: c.n_samples(), delta, gradient, noised_gradient });
    }
    let n_total: usize = per_client.iter().map(|c| c.n_samples).sum();
    let contributions: Vec<(usize, Vec<f64>)> =
        per_client.iter().map(|c| (c.n_samples, c.noised_gradient.clone())).collect();
    let aggregated_g = fedavg(&contributions, n_total)?;
    let theta_next_unprojected: Vec<f64> =
        theta.iter().zip(&aggregated_g).map(|(t, g)| t - cfg.learning_rate * g).collect();
    let theta_next = region.project(&theta_next_unprojected);
    ledger.rounds_applied += 1;
    Ok(FLRoundState { round, theta: theta.to_vec(), per_client, aggregated_g, theta_next_unprojected, theta_next })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub theta0: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub history: Vec<FLRoundState>,
    pub ledger: PrivacyLedger,
}

pub fn calibrate<O: Objective>(
    theta0: &[f64],
    clients: &[O],
    free: &[usize],
    cfg: &FLConfig,
    region: &dyn Region,
    rng: &RngStream,
) -> Result<Calibration, FedcalError> {
    cfg.validate()?;
    let mut ledger = PrivacyLedger::new(cfg);
    let mut theta = theta0.to_vec();
    let mut history = Vec::with_capacity(cfg.n_rounds);
    for r in 0..cfg.n_rounds {
        let state = run_round(r, &theta, clients, free, cfg, region, rng, &mut ledger)?;
        theta = state.theta_next.clone();
        history.push(state);
    }
    Ok(Calibration { theta0: theta0.to_vec(), theta_final: theta, history, ledger })
}

/// One canonical JSON object per round.
pub fn write_history_jsonl<W: Write>(mut w: W, history: &[FLRoundState]) -> std::io::Result<()> {
    for state in history {
        let line = canonical::to_canonical_string(state).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parameter trajectory in physical units: row 0 is the starting point,
/// row r + 1 the parameters after round r.
pub fn write_theta_trace<W: Write>(w: W, layout: &ThetaLayout, cal: &Calibration) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["round".to_string()];
    header.extend(layout.names());
    out.write_record(&header)?;
    let rows = std::iter::once(&cal.theta0).chain(cal.history.iter().map(|s| &s.theta_next));
    for (r, unit) in rows.enumerate() {
        let mut rec = vec![r.to_string()];
        rec.extend(layout.denormalize(unit).iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
