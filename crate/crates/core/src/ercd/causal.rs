use serde::{Deserialize, Serialize};

use super::discretize::discretize;
use super::graph::CausalGraph;
use super::ErcdError;
use crate::datagen::Dataset;
use crate::numerics::RngStream;

/// Binary treatment and outcome plus a joint stratum code for the
/// adjustment set.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalColumns {
    pub x_name: String,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub z: Vec<usize>,
    pub n_strata: usize,
}

fn binary_column(d: &Dataset, name: &str) -> Result<Vec<u8>, ErcdError> {
    let values = d.column(name).map_err(|_| ErcdError::UnknownFeature(name.into()))?;
    values
        .into_iter()
        .map(|v| {
            if v == 0.0 {
                Ok(0)
            } else if v == 1.0 {
                Ok(1)
            } else {
                Err(ErcdError::NotBinary(name.into()))
            }
        })
        .collect()
}

impl CausalColumns {
    /// `x` and `y` must already be 0/1 columns (e.g. `group`, `label`);
    /// each adjustment variable is cut into `bins` codes and the codes are
    /// combined into one stratum index.
    pub fn from_dataset(d: &Dataset, x: &str, y: &str, z: &[String], bins: usize) -> Result<Self, ErcdError> {
        let xs = binary_column(d, x)?;
        let ys = binary_column(d, y)?;
        let mut strata = vec![0usize; d.len()];
        let mut n_strata = 1usize;
        for name in z {
            let values = d.column(name).map_err(|_| ErcdError::UnknownFeature(name.clone()))?;
            let codes = discretize(&values, bins);
            let radix = codes.iter().max().map_or(1, |m| m + 1);
            for (s, c) in strata.iter_mut().zip(codes) {
                *s = *s * radix + c;
            }
            n_strata *= radix;
        }
        Ok(Self { x_name: x.into(), x: xs, y: ys, z: strata, n_strata })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `|P(Y=1 | X=1) - sum_z P(Y=1 | X=1, Z=z) P(Z=z)|`.
///
/// Every observed stratum must contain both X values; a missing cell is an
/// error rather than something to smooth over.
pub fn causal_score_discrete(x_name: &str, x: &[u8], y: &[u8], z: &[usize]) -> Result<f64, ErcdError> {
    let n = x.len();
    if n == 0 {
        return Err(ErcdError::EmptyDataset);
    }
    if y.len() != n || z.len() != n {
        return Err(ErcdError::InvalidArgument("x, y and z differ in length".into()));
    }
    let n_strata = z.iter().max().map_or(0, |m| m + 1);
    // per stratum: [count x=0, count x=1, count x=1 & y=1]
    let mut cells = vec![[0usize; 3]; n_strata];
    for i in 0..n {
        let c = &mut cells[z[i]];
        c[usize::from(x[i])] += 1;
        if x[i] == 1 && y[i] == 1 {
            c[2] += 1;
        }
    }
    let (mut x1, mut x1y1, mut adjusted) = (0usize, 0usize, 0.0f64);
    for (s, c) in cells.iter().enumerate() {
        let total = c[0] + c[1];
        if total == 0 {
            continue;
        }
        for xv in 0..2u8 {
            if c[usize::from(xv)] == 0 {
                return Err(ErcdError::EmptyStratum { x_name: x_name.into(), x: xv, stratum: s });
            }
        }
        x1 += c[1];
        x1y1 += c[2];
        adjusted += (c[2] as f64 / c[1] as f64) * (total as f64 / n as f64);
    }
    let observational = x1y1 as f64 / x1 as f64;
    Ok((observational - adjusted).abs().min(1.0))
}

pub fn causal_score(d: &Dataset, x: &str, y: &str, z: &[String], bins: usize) -> Result<f64, ErcdError> {
    let cols = CausalColumns::from_dataset(d, x, y, z, bins)?;
    causal_score_discrete(&cols.x_name, &cols.x, &cols.y, &cols.z)
}

/// Empirical `quantile` of the score over `n_resamples` copies with X
/// randomly permuted. Permutation r draws from substream `r` of `rng`, so
/// the result depends only on the seed.
pub fn bootstrap_threshold_discrete(
    cols: &CausalColumns,
    n_resamples: usize,
    quantile: f64,
    rng: &RngStream,
) -> Result<f64, ErcdError> {
    if n_resamples < 100 {
        return Err(ErcdError::InvalidArgument(format!("n_resamples must be >= 100, got {n_resamples}")));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(ErcdError::InvalidArgument(format!("quantile must lie in (0, 1], got {quantile}")));
    }
    let mut scores = Vec::with_capacity(n_resamples);
    let mut x = cols.x.clone();
    for r in 0..n_resamples {
        x.copy_from_slice(&cols.x);
        rng.substream("permutation", r as u64).shuffle(&mut x);
        scores.push(causal_score_discrete(&cols.x_name, &x, &cols.y, &cols.z)?);
    }
    scores.sort_by(f64::total_cmp);
    let rank = ((quantile * n_resamples as f64).ceil() as usize).clamp(1, n_resamples);
    Ok(scores[rank - 1])
}

#[allow(clippy::too_many_arguments)]
pub fn bootstrap_threshold(
    d: &Dataset,
    x: &str,
    y: &str,
    z: &[String],
    bins: usize,
    n_resamples: usize,
    quantile: f64,
    rng: &RngStream,
) -> Result<f64, ErcdError> {
    let cols = CausalColumns::from_dataset(d, x, y, z, bins)?;
    bootstrap_threshold_discrete(&cols, n_resamples, quantile, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScore {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub score: f64,
    pub threshold: f64,
    pub flagged: bool,
}

impl BiasScore {
    pub fn new(x: &str, y: &str, z: &[String], score: f64, threshold: f64) -> Self {
        Self { x: x.into(), y: y.into(), z: z.to_vec(), score, threshold, flagged: score > threshold }
    }

    /// Metric name used in audit trails, e.g. `causal_score_group_label`.
    pub fn metric_name(&self) -> String {
        format!("causal_score_{}_{}", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub n_resamples: usize,
    pub quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub base_digest: String,
    pub scores: Vec<BiasScore>,
    pub graph: CausalGraph,
    pub bootstrap: BootstrapInfo,
}

impl BiasReport {
    pub fn any_flagged(&self) -> bool {
        self.scores.iter().any(|s| s.flagged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Z ~ Bern(.5); X = Z w.p. .9; Y = Z w.p. .8.
    fn reference_scm(n: usize, seed: u64) -> (Vec<u8>, Vec<u8>, Vec<usize>) {
        let mut rng = RngStream::new(seed, 0);
        let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let zv = u8::from(rng.uniform() < 0.5);
            let xv = if rng.uniform() < 0.9 { zv } else { 1 - zv };
            let yv = if rng.uniform() < 0.8 { zv } else { 1 - zv };
            x.push(xv);
            y.push(yv);
            z.push(usize::from(zv));
        }
        (x, y, z)
    }

    #[test]
    fn reference_scm_score() {
        let (x, y, z) = reference_scm(100_000, 5);
        let s = causal_score_discrete("x", &x, &y, &z).unwrap();
        assert!((s - 0.24).abs() < 0.02, "{s}");
    }

    #[test]
    fn empty_adjustment_set_scores_zero() {
        let (x, y, _) = reference_scm(1000, 6);
        let z = vec![0usize; x.len()];
        assert_eq!(causal_score_discrete("x", &x, &y, &z).unwrap(), 0.0);
    }

    #[test]
    fn empty_stratum_is_reported() {
        let x = vec![1, 1, 0, 1];
        let y = vec![1, 0, 0, 1];
        let z = vec![0, 0, 0, 1];
        let err = causal_score_discrete("g", &x, &y, &z).unwrap_err();
        assert_eq!(err, ErcdError::EmptyStratum { x_name: "g".into(), x: 0, stratum: 1 });
    }

    #[test]
    fn quantile_one_is_max() {
        let (x, y, z) = reference_scm(2000, 7);
        let cols = CausalColumns { x_name: "x".into(), x, y, z, n_strata: 2 };
        let rng = RngStream::new(1, 0);
        let t = bootstrap_threshold_discrete(&cols, 100, 1.0, &rng).unwrap();
        let max = (0..100)
            .map(|r| {
                let mut x = cols.x.clone();
                rng.substream("permutation", r).shuffle(&mut x);
                causal_score_discrete("x", &x, &cols.y, &cols.z).unwrap()
            })
            .fold(0.0, f64::max);
        assert_eq!(t, max);
    }

    #[test]
    fn flag_follows_threshold() {
        let z = vec!["traffic_load_pps".to_string()];
        assert!(BiasScore::new("group", "label", &z, 0.24, 0.05).flagged);
        assert!(!BiasScore::new("group", "label", &z, 0.05, 0.05).flagged);
    }
}
