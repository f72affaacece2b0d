use crate::numerics::RngStream;

/// Scales `g` down to L2 norm `clip_norm` when it is longer.
pub fn clip(g: &[f64], clip_norm: f64) -> Vec<f64> {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > clip_norm {
        let s = clip_norm / norm;
        g.iter().map(|v| v * s).collect()
    } else {
        g.to_vec()
    }
}

/// Clip, then add `N(0, sigma^2)` to every coordinate.
pub fn dp_noise(g: &[f64], clip_norm: f64, sigma: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut out = clip(g, clip_norm);
    if sigma > 0.0 {
        for v in &mut out {
            *v += sigma * rng.standard_normal();
        }
    }
    out
}
