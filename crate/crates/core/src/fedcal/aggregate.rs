use super::FedcalError;

/// `sum_k (n_k / n_total) * g_k`.
pub fn fedavg(contributions: &[(usize, Vec<f64>)], n_total: usize) -> Result<Vec<f64>, FedcalError> {
    let first = contributions.first().ok_or(FedcalError::NoClients)?;
    let dim = first.1.len();
    let weight_sum: usize = contributions.iter().map(|c| c.0).sum();
    if weight_sum != n_total || n_total == 0 {
        return Err(FedcalError::WeightSumMismatch { expected: n_total, got: weight_sum });
    }
    let mut g = vec![0.0; dim];
    for (n, gk) in contributions {
        if gk.len() != dim {
            return Err(FedcalError::DimensionMismatch { expected: dim, got: gk.len() });
        }
        let w = *n as f64 / n_total as f64;
        for (acc, v) in g.iter_mut().zip(gk) {
            *acc += w * v;
        }
    }
    Ok(g)
}
