use super::{Matrix, NumericsError, RngStream};

/// Column means and unbiased (n - 1) covariance of an n x k sample matrix.
pub fn mean_cov(data: &Matrix) -> Result<(Vec<f64>, Matrix), NumericsError> {
    let n = data.rows();
    if n < 2 {
        return Err(NumericsError::TooFewSamples { n });
    }
    let k = data.cols();
    let mut mu = vec![0.0; k];
    for r in 0..n {
        for (m, v) in mu.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(k, k);
    let mut centered = vec![0.0; k];
    for r in 0..n {
        for ((c, v), m) in centered.iter_mut().zip(data.row(r)).zip(&mu) {
            *c = v - m;
        }
        for i in 0..k {
            for j in i..k {
                cov.set(i, j, cov.get(i, j) + centered[i] * centered[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..k {
        for j in i..k {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok((mu, cov))
}

/// Mean and sample standard deviation (n - 1) of a slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// `n` draws from N(mu, sigma^2).
pub fn gaussian_draw(
    rng: &mut RngStream,
    mu: f64,
    sigma: f64,
    n: usize,
) -> Result<Vec<f64>, NumericsError> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(NumericsError::NegativeSigma { sigma });
    }
    if sigma == 0.0 {
        return Ok(vec![mu; n]);
    }
    Ok((0..n).map(|_| mu + sigma * rng.standard_normal()).collect())
}
