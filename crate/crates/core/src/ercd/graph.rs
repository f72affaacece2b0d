use serde::{Deserialize, Serialize};

use super::discretize::discretize;
use super::independence::g_test;
use super::ErcdError;
use crate::datagen::Dataset;

/// Below this the order-1 tests have too little power to be meaningful.
pub const MIN_GRAPH_SAMPLES: usize = 200;

/// Columns the skeleton is built over: the state features plus the
/// protected attribute and the outcome.
pub const GRAPH_FEATURES: [&str; 7] =
    ["pos_x_m", "pos_y_m", "speed_mps", "traffic_load_pps", "snr_db", "group", "label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    /// Marginal G statistic and p-value for the pair.
    pub statistic: f64,
    pub p_value: f64,
}

/// Undirected skeleton; each edge is stored once with `from` earlier in
/// `vertices` than `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl CausalGraph {
    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.iter().any(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }
}

/// Depth-limited PC skeleton over already-discretized columns: keep (u, v)
/// when marginal independence is rejected at `alpha` and no single other
/// column makes them conditionally independent.
pub fn discover_skeleton(columns: &[(String, Vec<usize>)], alpha: f64) -> Result<CausalGraph, ErcdError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ErcdError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != n) {
        return Err(ErcdError::InvalidArgument("columns differ in length".into()));
    }
    if n < MIN_GRAPH_SAMPLES {
        return Err(ErcdError::TooFewSamples { n, min: MIN_GRAPH_SAMPLES });
    }
    let mut edges = Vec::new();
    for u in 0..columns.len() {
        for v in u + 1..columns.len() {
            let marginal = g_test(&columns[u].1, &columns[v].1, None);
            if marginal.p_value >= alpha {
                continue;
            }
            let separated = (0..columns.len())
                .filter(|&w| w != u && w != v)
                .any(|w| g_test(&columns[u].1, &columns[v].1, Some(&columns[w].1)).p_value >= alpha);
            if !separated {
                edges.push(Edge {
                    from: columns[u].0.clone(),
                    to: columns[v].0.clone(),
                    statistic: marginal.statistic,
                    p_value: marginal.p_value,
                });
            }
        }
    }
    Ok(CausalGraph { vertices: columns.iter().map(|c| c.0.clone()).collect(), edges })
}

/// Skeleton over [`GRAPH_FEATURES`], continuous columns cut into `bins`
/// equal-frequency bins.
pub fn discover_graph(d: &Dataset, alpha: f64, bins: usize) -> Result<CausalGraph, ErcdError> {
    if d.len() < MIN_GRAPH_SAMPLES {
        return Err(ErcdError::TooFewSamples { n: d.len(), min: MIN_GRAPH_SAMPLES });
    }
    let columns = GRAPH_FEATURES
        .iter()
        .map(|&name| {
            let values = d.column(name).map_err(|_| ErcdError::UnknownFeature(name.into()))?;
            Ok((name.to_string(), discretize(&values, bins)))
        })
        .collect::<Result<Vec<_>, ErcdError>>()?;
    discover_skeleton(&columns, alpha)
}
