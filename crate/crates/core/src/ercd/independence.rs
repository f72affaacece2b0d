use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Likelihood-ratio test of `x` independent of `y`, optionally given `z`.
///
/// All inputs are small non-negative codes. With a conditioning column the
/// statistic and degrees of freedom are summed over its strata; each
/// stratum contributes `(r - 1)(c - 1)` over the rows and columns it
/// actually observes.
pub fn g_test(x: &[usize], y: &[usize], z: Option<&[usize]>) -> GTest {
    let nx = x.iter().max().map_or(0, |m| m + 1);
    let ny = y.iter().max().map_or(0, |m| m + 1);
    let nz = z.map_or(1, |z| z.iter().max().map_or(0, |m| m + 1)).max(1);
    let mut table = vec![0.0f64; nz * nx * ny];
    for i in 0..x.len() {
        let s = z.map_or(0, |z| z[i]);
        table[(s * nx + x[i]) * ny + y[i]] += 1.0;
    }

    let mut g = 0.0;
    let mut dof = 0usize;
    for s in 0..nz {
        let cell = &table[s * nx * ny..(s + 1) * nx * ny];
        let row: Vec<f64> = (0..nx).map(|a| (0..ny).map(|b| cell[a * ny + b]).sum()).collect();
        let col: Vec<f64> = (0..ny).map(|b| (0..nx).map(|a| cell[a * ny + b]).sum()).collect();
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            continue;
        }
        for a in 0..nx {
            for b in 0..ny {
                let o = cell[a * ny + b];
                if o > 0.0 {
                    g += 2.0 * o * (o * total / (row[a] * col[b])).ln();
                }
            }
        }
        let r = row.iter().filter(|&&v| v > 0.0).count();
        let c = col.iter().filter(|&&v| v > 0.0).count();
        dof += r.saturating_sub(1) * c.saturating_sub(1);
    }
    let g = g.max(0.0);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("dof > 0").sf(g)
    };
    GTest { statistic: g, dof, p_value }
}
