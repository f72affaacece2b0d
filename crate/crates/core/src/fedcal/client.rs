use std::collections::{BTreeMap, BTreeSet};

use super::FedcalError;
use crate::datagen::{generate_users, Dataset, Sample, SimulationParams, ThetaLayout, STATE_FEATURES};
use crate::numerics::RngStream;

/// A client's discrepancy as a function of the normalized parameter vector.
pub trait Objective {
    /// Local sample count, the client's FedAvg weight.
    fn n_samples(&self) -> usize;
    fn loss(&self, theta: &[f64]) -> Result<f64, FedcalError>;
}

/// Where updated parameter vectors are projected after each step.
pub trait Region {
    fn project(&self, theta: &[f64]) -> Vec<f64>;
}

/// No constraints.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unbounded;

impl Region for Unbounded {
    fn project(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }
}

/// The admissible generator parameters, in normalized coordinates.
#[derive(Debug, Clone, Copy)]
pub struct UnitRegion(pub ThetaLayout);

impl Region for UnitRegion {
    fn project(&self, theta: &[f64]) -> Vec<f64> {
        let layout = self.0;
        layout.normalize(&layout.project(&layout.denormalize(theta)))
    }
}

/// Mean over rows of the squared Euclidean distance.
pub fn mse(preds: &[Vec<f64>], obs: &[Vec<f64>]) -> Result<f64, FedcalError> {
    if preds.len() != obs.len() || preds.is_empty() {
        return Err(FedcalError::SchemaMismatch(format!(
            "{} predictions for {} observations",
            preds.len(),
            obs.len()
        )));
    }
    let mut total = 0.0;
    for (p, o) in preds.iter().zip(obs) {
        if p.len() != o.len() {
            return Err(FedcalError::DimensionMismatch { expected: o.len(), got: p.len() });
        }
        total += p.iter().zip(o).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / preds.len() as f64)
}

fn state(s: &Sample) -> Vec<f64> {
    STATE_FEATURES.iter().map(|f| s.feature(f).expect("state features exist")).collect()
}

/// Splits users round-robin over `n_clients`: user u goes to client
/// `u mod n_clients`.
pub fn partition_users(d: &Dataset, n_clients: usize) -> Vec<BTreeSet<u32>> {
    let k = n_clients.max(1);
    let mut parts = vec![BTreeSet::new(); k];
    for s in &d.samples {
        parts[s.user_id as usize % k].insert(s.user_id);
    }
    parts
}

/// A virtual client whose simulator re-runs the generator for its own
/// users. `sim_rng` is the stream the observations' context was generated
/// from, so every evaluation shares the same random numbers and the
/// predictions pair with observations by `(user_id, window)`.
#[derive(Debug, Clone)]
pub struct SimClient {
    pub client_id: usize,
    pub real_samples: Vec<Sample>,
    pub users: BTreeSet<u32>,
    /// Supplies every field of the parameters outside the flat vector.
    pub template: SimulationParams,
    /// Size of the full dataset the observations were drawn from; fixes
    /// the window layout.
    pub n_total: usize,
    pub sim_rng: RngStream,
}

impl SimClient {
    pub fn new(
        client_id: usize,
        real_samples: Vec<Sample>,
        template: SimulationParams,
        n_total: usize,
        sim_rng: RngStream,
    ) -> Result<Self, FedcalError> {
        if real_samples.is_empty() {
            return Err(FedcalError::InvalidConfig(format!("client {client_id} has no samples")));
        }
        let users = real_samples.iter().map(|s| s.user_id).collect();
        Ok(Self { client_id, real_samples, users, template, n_total, sim_rng })
    }

    /// One client per user partition of `real`.
    pub fn from_partition(
        real: &Dataset,
        n_clients: usize,
        template: &SimulationParams,
        sim_rng: &RngStream,
    ) -> Result<Vec<Self>, FedcalError> {
        partition_users(real, n_clients)
            .into_iter()
            .enumerate()
            .map(|(id, users)| {
                let samples = real.samples.iter().filter(|s| users.contains(&s.user_id)).cloned().collect();
                SimClient::new(id, samples, template.clone(), real.len(), sim_rng.clone())
            })
            .collect()
    }

    /// Simulator parameters for a normalized vector, projected into the
    /// admissible region first (finite-difference probes may step outside).
    pub fn params_at(&self, theta: &[f64]) -> Result<SimulationParams, FedcalError> {
        let layout = self.template.theta_layout();
        if theta.len() != layout.len() {
            return Err(FedcalError::DimensionMismatch { expected: layout.len(), got: theta.len() });
        }
        let flat = layout.project(&layout.denormalize(theta));
        Ok(self.template.with_flat(&flat)?)
    }
}

impl Objective for SimClient {
    fn n_samples(&self) -> usize {
        self.real_samples.len()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64, FedcalError> {
        let params = self.params_at(theta)?;
        let preds = generate_users(&params, self.n_total, &self.sim_rng, Some(&self.users))?;
        let by_key: BTreeMap<(u32, u32), &Sample> = preds.iter().map(|s| (s.key(), s)).collect();
        let mut p = Vec::with_capacity(self.real_samples.len());
        let mut o = Vec::with_capacity(self.real_samples.len());
        for s in &self.real_samples {
            let pred = by_key.get(&s.key()).ok_or_else(|| {
                FedcalError::SchemaMismatch(format!("no prediction for user {} window {}", s.user_id, s.window))
            })?;
            p.push(state(pred));
            o.push(state(s));
        }
        mse(&p, &o)
    }
}

pub fn discrepancy(theta: &[f64], client: &impl Objective) -> Result<f64, FedcalError> {
    client.loss(theta)
}

/// Central differences on the `free` coordinates; every other component is
/// zero. Each probe re-evaluates the same objective, so the random numbers
/// are common to both sides of every difference.
pub fn local_gradient(
    obj: &impl Objective,
    theta: &[f64],
    free: &[usize],
    fd_step: f64,
) -> Result<Vec<f64>, FedcalError> {
    if !(fd_step > 0.0) {
        return Err(FedcalError::InvalidConfig(format!("fd_step must be > 0, got {fd_step}")));
    }
    let mut g = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for &i in free {
        if i >= theta.len() {
            return Err(FedcalError::DimensionMismatch { expected: theta.len(), got: i + 1 });
        }
        probe[i] = theta[i] + fd_step;
        let up = obj.loss(&probe)?;
        probe[i] = theta[i] - fd_step;
        let down = obj.loss(&probe)?;
        probe[i] = theta[i];
        let d = (up - down) / (2.0 * fd_step);
        if !d.is_finite() {
            return Err(FedcalError::NonFiniteLoss { coordinate: i });
        }
        g[i] = d;
    }
    Ok(g)
}
