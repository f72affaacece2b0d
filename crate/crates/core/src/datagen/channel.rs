//! Log-distance path loss with log-normal shadowing, referenced to the
//! free-space loss at `ref_distance_m`.

use std::f64::consts::PI;

use super::{ChannelParams, DatagenError};
use crate::numerics::RngStream;

pub const SPEED_OF_LIGHT_MPS: f64 = 3e8;

/// Free-space path loss in dB at distance `d` metres.
pub fn fspl_db(freq_hz: f64, d: f64) -> f64 {
    20.0 * (4.0 * PI * d * freq_hz / SPEED_OF_LIGHT_MPS).log10()
}

/// SNR without shadowing; strictly decreasing in distance for n > 0.
pub fn deterministic_snr_db(chan: &ChannelParams, distance_m: f64) -> f64 {
    chan.tx_budget_db
        - fspl_db(chan.freq_hz, chan.ref_distance_m)
        - 10.0 * chan.pathloss_exponent * (distance_m / chan.ref_distance_m).log10()
}

/// SNR for a given standard-normal shadowing draw `z`.
pub fn snr_from_draw(chan: &ChannelParams, distance_m: f64, z: f64) -> f64 {
    deterministic_snr_db(chan, distance_m) - chan.shadowing_sigma_db * z
}

pub fn channel_snr(
    chan: &ChannelParams,
    distance_m: f64,
    rng: &mut RngStream,
) -> Result<f64, DatagenError> {
    if !(distance_m >= chan.ref_distance_m) {
        return Err(DatagenError::DistanceBelowReference {
            distance_m,
            ref_distance_m: chan.ref_distance_m,
        });
    }
    Ok(snr_from_draw(chan, distance_m, rng.standard_normal()))
}
