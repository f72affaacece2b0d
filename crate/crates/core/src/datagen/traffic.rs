//! Inhomogeneous Poisson packet arrivals.

use std::f64::consts::PI;

use super::TrafficParams;
use crate::numerics::RngStream;

/// Instantaneous arrival rate in packets per second.
pub fn rate_at(traffic: &TrafficParams, t: f64) -> f64 {
    traffic.lambda0
        + traffic
            .harmonics
            .iter()
            .map(|h| h.alpha * (2.0 * PI * h.freq_hz * t + h.phase_rad).sin())
            .sum::<f64>()
}

/// Sorted arrival times on [0, duration_s] for the rate lambda(t).
pub fn sample_arrivals(traffic: &TrafficParams, duration_s: f64, rng: &mut RngStream) -> Vec<f64> {
    thinning(|t| rate_at(traffic, t), traffic.majorant(), duration_s, rng)
}

/// Lewis-Shedler thinning: candidates from a homogeneous process at
/// `majorant`, each kept with probability `rate(t) / majorant`.
///
/// `rate` must satisfy `0 <= rate(t) <= majorant` on [0, duration_s].
pub fn thinning(
    rate: impl Fn(f64) -> f64,
    majorant: f64,
    duration_s: f64,
    rng: &mut RngStream,
) -> Vec<f64> {
    let mut out = Vec::new();
    if !(majorant > 0.0) || !(duration_s > 0.0) {
        return out;
    }
    let mut t = 0.0;
    loop {
        t += rng.exp1() / majorant;
        if t > duration_s {
            break;
        }
        let accept = rng.uniform() * majorant;
        if accept < rate(t) {
            // exponential gaps are a.s. positive, but guard the strict order
            if out.last().is_none_or(|last| t > *last) {
                out.push(t);
            }
        }
    }
    out
}
