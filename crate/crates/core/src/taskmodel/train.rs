use serde::{Deserialize, Serialize};

use super::mlp::{backward, mean_cross_entropy, MlpModel};
use super::TaskError;
use crate::datagen::{Dataset, STATE_FEATURES};
use crate::numerics::{mean_std, RngStream};

/// Inputs of the task model.
pub const TASK_FEATURES: [&str; 5] = STATE_FEATURES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, batch_size: 32, max_epochs: 30, patience: 3, seed: 0, hidden: vec![128, 128] }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TaskError> {
        if self.patience == 0 {
            return Err(TaskError::InvalidConfig("patience must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TaskError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(TaskError::InvalidConfig(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: MlpModel,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub initial_train_loss: f64,
    /// Full training-split loss after each epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

pub fn design_matrix(d: &Dataset, features: &[&str]) -> Result<(Vec<Vec<f64>>, Vec<u8>), TaskError> {
    let mut xs = Vec::with_capacity(d.len());
    for s in &d.samples {
        let row = features
            .iter()
            .map(|f| s.feature(f).ok_or_else(|| TaskError::UnknownFeature(f.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        xs.push(row);
    }
    Ok((xs, d.samples.iter().map(|s| s.label).collect()))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains on `(train_x, train_y)` with early stopping on the validation
/// pair (the training split itself when no validation rows are given).
pub fn fit(
    feature_names: Vec<String>,
    train_x: &[Vec<f64>],
    train_y: &[u8],
    val_x: &[Vec<f64>],
    val_y: &[u8],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TaskError> {
    cfg.validate()?;
    if train_x.is_empty() {
        return Err(TaskError::EmptyBatch);
    }
    if train_y.iter().all(|&y| y == train_y[0]) {
        return Err(TaskError::DegenerateLabels);
    }
    let rng = RngStream::new(cfg.seed, 0);
    let mut model = MlpModel::new(feature_names, &cfg.hidden, &mut rng.substream("init", 0));
    for j in 0..model.n_inputs() {
        let col: Vec<f64> = train_x.iter().map(|x| x[j]).collect();
        let (m, s) = mean_std(&col);
        model.mean[j] = m;
        model.std[j] = if s > 0.0 && s.is_finite() { s } else { 1.0 };
    }
    let (val_x, val_y) = if val_x.is_empty() { (train_x, train_y) } else { (val_x, val_y) };

    let initial_train_loss = mean_cross_entropy(&model, train_x, train_y)?;
    let mut adam = Adam::new(model.params.len());
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut shuffle_rng = rng.substream("shuffle", 0);
    let (mut best_params, mut best_val, mut best_epoch) = (model.params.clone(), f64::INFINITY, 0);
    let (mut train_loss, mut val_loss) = (Vec::new(), Vec::new());
    let mut stale = 0;
    let mut bx = Vec::with_capacity(cfg.batch_size);
    let mut by = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.max_epochs {
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.push(train_x[i].clone());
                by.push(train_y[i]);
            }
            let g = backward(&model, &bx, &by)?;
            adam.step(&mut model.params, &g, cfg.learning_rate);
        }
        train_loss.push(mean_cross_entropy(&model, train_x, train_y)?);
        let v = mean_cross_entropy(&model, val_x, val_y)?;
        val_loss.push(v);
        if v < best_val {
            best_val = v;
            best_epoch = epoch;
            best_params.clone_from(&model.params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let epochs_run = val_loss.len();
    model.params = best_params;
    Ok(TrainOutcome { model, epochs_run, best_epoch, best_val_loss: best_val, initial_train_loss, train_loss, val_loss })
}

/// Seeded shuffle; the last 20% is held out for validation.
pub fn train(d: &Dataset, features: &[&str], cfg: &TrainConfig) -> Result<TrainOutcome, TaskError> {
    let (xs, ys) = design_matrix(d, features)?;
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    RngStream::new(cfg.seed, 0).substream("split", 0).shuffle(&mut idx);
    let n_train = xs.len() - xs.len() / 5;
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (ids.iter().map(|&i| xs[i].clone()).collect(), ids.iter().map(|&i| ys[i]).collect())
    };
    let (tx, ty) = pick(&idx[..n_train]);
    let (vx, vy) = pick(&idx[n_train..]);
    fit(features.iter().map(|s| s.to_string()).collect(), &tx, &ty, &vx, &vy, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: TrainOutcome,
    pub best_config: TrainConfig,
    /// `(learning_rate, batch_size, best validation loss)` per grid point.
    pub scores: Vec<(f64, usize, f64)>,
}

/// Trains every (learning rate, batch size) pair and keeps the one with the
/// lowest validation loss; earlier grid points win ties.
pub fn grid_search(
    d: &Dataset,
    features: &[&str],
    learning_rates: &[f64],
    batch_sizes: &[usize],
    base: &TrainConfig,
) -> Result<GridResult, TaskError> {
    let mut best: Option<(TrainOutcome, TrainConfig)> = None;
    let mut scores = Vec::new();
    for &lr in learning_rates {
        for &bs in batch_sizes {
            let cfg = TrainConfig { learning_rate: lr, batch_size: bs, ..base.clone() };
            let out = train(d, features, &cfg)?;
            scores.push((lr, bs, out.best_val_loss));
            if best.as_ref().is_none_or(|(b, _)| out.best_val_loss < b.best_val_loss) {
                best = Some((out, cfg));
            }
        }
    }
    let (best, best_config) = best.ok_or_else(|| TaskError::InvalidConfig("empty hyperparameter grid".into()))?;
    Ok(GridResult { best, best_config, scores })
}
