use super::{Matrix, NumericsError};

/// Sweep cap for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues below `-PSD_FLOOR * max(1, |lambda_max|)` are treated as genuine
/// indefiniteness rather than round-off.
const PSD_FLOOR: f64 = 1e-9;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
///
/// Column `j` of `vectors` is the unit eigenvector for `values[j]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEig {
    /// V diag(f(lambda)) V^T.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|v| f(*v)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, lam) in mapped.iter().enumerate() {
                    acc += self.vectors.get(i, k) * lam * self.vectors.get(j, k);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(m: &Matrix, tol: f64) -> Result<SymEig, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let asymmetry = m.max_asymmetry();
    if asymmetry > tol {
        return Err(NumericsError::NotSymmetric { asymmetry, tol });
    }
    let n = m.rows();
    // work on the exactly symmetric part
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m.get(i, j) + m.get(j, i));
        }
    }
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = n < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericsError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        converged = off(&a) <= f64::EPSILON * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|x, y| a[y * n + y].total_cmp(&a[x * n + x]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, dst, v.get(k, src));
        }
    }
    Ok(SymEig { values, vectors })
}

/// Principal square root of a symmetric positive semi-definite matrix.
///
/// Eigenvalues in the round-off band just below zero are clamped to zero.
pub fn sqrtm_psd(m: &Matrix) -> Result<Matrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let tol = 1e-9 * m.frobenius_norm().max(1.0);
    let eig = sym_eig(m, tol)?;
    let top = eig.values.first().map_or(0.0, |v| v.abs()).max(1.0);
    if let Some(&worst) = eig.values.iter().find(|v| **v < -PSD_FLOOR * top) {
        return Err(NumericsError::IndefiniteInput { eigenvalue: worst });
    }
    Ok(eig.reconstruct_with(|lam| lam.max(0.0).sqrt()))
}
