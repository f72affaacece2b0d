use std::collections::BTreeSet;

use super::channel::snr_from_draw;
use super::dataset::{default_schema, DatasetMetadata, Provenance, GENERATOR_VERSION, SCHEMA_VERSION};
use super::mobility::random_waypoint;
use super::traffic::{rate_at, thinning};
use super::{Dataset, DatagenError, Group, Sample, SimulationParams};
use crate::canonical;
use crate::numerics::RngStream;

/// Features perturbed by anomaly injection.
pub const ANOMALY_FEATURES: [&str; 2] = ["traffic_load_pps", "snr_db"];

/// `d + eps` with `eps ~ N(0, sigma^2)` on the measurement features; marks
/// the sample anomalous.
pub fn inject_anomaly(d: &Sample, sigma: f64, rng: &mut RngStream) -> Result<Sample, DatagenError> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(DatagenError::NegativeSigma(sigma));
    }
    let mut out = d.clone();
    for name in ANOMALY_FEATURES {
        let eps = sigma * rng.standard_normal();
        *out.feature_mut(name).expect("anomaly features are numeric") += eps;
    }
    out.is_anomalous = true;
    Ok(out)
}

/// How `n_samples` are laid out over users and observation windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLayout {
    pub n_samples: usize,
    pub n_users: usize,
    /// Windows on the longest user timeline.
    pub max_windows: usize,
    pub window_s: f64,
}

impl SampleLayout {
    pub fn new(theta: &SimulationParams, n_samples: usize) -> Self {
        let max_windows = n_samples.div_ceil(theta.n_users).max(1);
        Self {
            n_samples,
            n_users: theta.n_users,
            max_windows,
            window_s: theta.duration_s / max_windows as f64,
        }
    }

    /// Samples are dealt round-robin: sample k goes to user k mod n_users.
    pub fn windows_for(&self, user: usize) -> usize {
        let base = self.n_samples / self.n_users;
        base + usize::from(user < self.n_samples % self.n_users)
    }
}

fn run_id(theta: &SimulationParams, rng: &RngStream) -> String {
    let body = canonical::to_canonical_string(theta).expect("theta serializes");
    let tag = format!("{body}|{}|{}", rng.seed(), rng.stream_id());
    canonical::sha256_hex(tag.as_bytes())[..16].to_string()
}

/// Generates the synthetic dataset for `theta`.
///
/// Each user draws from its own substream of `rng`, so the output does not
/// depend on evaluation order and any subset of users can be regenerated
/// in isolation (see [`generate_users`]).
pub fn generate(
    theta: &SimulationParams,
    n_samples: usize,
    rng: &RngStream,
) -> Result<Dataset, DatagenError> {
    let samples = generate_users(theta, n_samples, rng, None)?;
    let run_id = run_id(theta, rng);
    Ok(Dataset {
        schema: default_schema(),
        samples,
        metadata: DatasetMetadata {
            schema_version: SCHEMA_VERSION,
            theta: theta.clone(),
            seed: rng.seed(),
            sample_count: n_samples,
            run_id,
            generator_version: GENERATOR_VERSION.to_string(),
            created_at: 0,
            lineage: Vec::new(),
        },
    })
}

/// Samples for the selected users (all users when `users` is `None`),
/// sorted by `(user_id, window)`.
pub fn generate_users(
    theta: &SimulationParams,
    n_samples: usize,
    rng: &RngStream,
    users: Option<&BTreeSet<u32>>,
) -> Result<Vec<Sample>, DatagenError> {
    if n_samples == 0 {
        return Err(DatagenError::InvalidParams("n_samples must be >= 1".into()));
    }
    theta.validate()?;
    let layout = SampleLayout::new(theta, n_samples);
    let provenance = Provenance {
        run_id: run_id(theta, rng),
        seed: rng.seed(),
        generator_version: GENERATOR_VERSION.to_string(),
        lineage: Vec::new(),
    };
    let mut out = Vec::with_capacity(n_samples);
    for u in 0..theta.n_users.min(n_samples) {
        let uid = u32::try_from(u).map_err(|_| DatagenError::InvalidParams("too many users".into()))?;
        if users.is_some_and(|set| !set.contains(&uid)) {
            continue;
        }
        generate_user(theta, &layout, uid, rng, &provenance, &mut out)?;
    }
    Ok(out)
}

fn generate_user(
    theta: &SimulationParams,
    layout: &SampleLayout,
    uid: u32,
    rng: &RngStream,
    provenance: &Provenance,
    out: &mut Vec<Sample>,
) -> Result<(), DatagenError> {
    let n_win = layout.windows_for(uid as usize);
    let w = layout.window_s;
    let urng = rng.substream("user", u64::from(uid));

    let mut mob_rng = urng.substream("mobility", 0);
    let traj = random_waypoint(&theta.mobility, theta.area_side_m, theta.duration_s, w, &mut mob_rng);
    let centre = 0.5 * theta.area_side_m;

    let mut surge_rng = urng.substream("surge", 0);
    let mut shadow_rng = urng.substream("shadowing", 0);
    let f = theta.surge.surge_fraction;
    let c = theta.label_rule.confound;

    struct Slot {
        x: f64,
        y: f64,
        speed: f64,
        dist: f64,
        group: Group,
        surged: bool,
        z: f64,
    }
    let slots: Vec<Slot> = traj
        .iter()
        .take(n_win)
        .map(|p| {
            let dist = (p.x - centre).hypot(p.y - centre);
            let group = if dist <= theta.urban_radius_m { Group::Urban } else { Group::Rural };
            let p_surge = match group {
                Group::Urban => f * (1.0 + c),
                Group::Rural => f * (1.0 - c),
            }
            .clamp(0.0, 1.0);
            let surged = surge_rng.uniform() < p_surge;
            let z = shadow_rng.standard_normal();
            Slot { x: p.x, y: p.y, speed: p.speed, dist, group, surged, z }
        })
        .collect();

    let mult = theta.surge.surge_multiplier;
    let horizon = n_win as f64 * w;
    let window_of = |t: f64| ((t / w) as usize).min(n_win - 1);
    let mut traffic_rng = urng.substream("traffic", 0);
    let arrivals = thinning(
        |t| {
            let base = rate_at(&theta.traffic, t);
            if slots[window_of(t)].surged {
                base * mult
            } else {
                base
            }
        },
        theta.traffic.majorant() * mult,
        horizon,
        &mut traffic_rng,
    );
    let mut counts = vec![0u32; n_win];
    for t in arrivals {
        counts[window_of(t)] += 1;
    }

    for (j, slot) in slots.iter().enumerate() {
        let distance = slot.dist.max(theta.channel.ref_distance_m);
        let mut sample = Sample {
            timestamp_s: j as f64 * w,
            user_id: uid,
            window: j as u32,
            pos_x_m: slot.x,
            pos_y_m: slot.y,
            speed_mps: slot.speed,
            traffic_load_pps: f64::from(counts[j]) / w,
            snr_db: snr_from_draw(&theta.channel, distance, slot.z),
            group: slot.group,
            label: 0,
            is_anomalous: false,
            provenance: provenance.clone(),
        };
        if slot.surged {
            let mut arng = urng.substream("anomaly", j as u64);
            sample = inject_anomaly(&sample, theta.anomaly_sigma, &mut arng)?;
        }
        sample.label = label_for(theta, &sample, slot.surged);
        out.push(sample);
    }
    Ok(())
}

/// Applies the ground-truth label rule.
pub fn label_for(theta: &SimulationParams, s: &Sample, surged: bool) -> u8 {
    let rule = &theta.label_rule;
    let threshold = match s.group {
        Group::Urban => rule.snr_threshold_db + rule.urban_margin_db,
        Group::Rural => rule.snr_threshold_db,
    };
    u8::from(surged || s.snr_db < threshold)
}

/// Deterministic group assignment from position.
pub fn group_at(theta: &SimulationParams, x: f64, y: f64) -> Group {
    let centre = 0.5 * theta.area_side_m;
    if (x - centre).hypot(y - centre) <= theta.urban_radius_m {
        Group::Urban
    } else {
        Group::Rural
    }
}
