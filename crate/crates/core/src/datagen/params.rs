use serde::{Deserialize, Serialize};

use super::DatagenError;

/// One sinusoidal component of the arrival rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub alpha: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

/// Arrival-rate model `lambda(t) = lambda0 + sum_k alpha_k sin(2 pi f_k t + phi_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficParams {
    pub lambda0: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

impl TrafficParams {
    pub fn constant(lambda0: f64) -> Self {
        Self { lambda0, harmonics: Vec::new() }
    }

    /// Upper bound of lambda(t) over all t.
    pub fn majorant(&self) -> f64 {
        self.lambda0 + self.harmonics.iter().map(|h| h.alpha.abs()).sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let finite = self.lambda0.is_finite()
            && self
                .harmonics
                .iter()
                .all(|h| h.alpha.is_finite() && h.freq_hz.is_finite() && h.phase_rad.is_finite());
        if !finite {
            return Err(DatagenError::InvalidParams("traffic parameters must be finite".into()));
        }
        let amplitude: f64 = self.harmonics.iter().map(|h| h.alpha.abs()).sum();
        if self.lambda0 < 0.0 || self.lambda0 < amplitude {
            return Err(DatagenError::InvalidParams(format!(
                "lambda0 = {} must be >= sum |alpha_k| = {amplitude} and >= 0",
                self.lambda0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityParams {
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub pause_s: f64,
    /// Mobility is simulated this long before t = 0 so samples start near
    /// the model's stationary spatial distribution.
    #[serde(default)]
    pub warmup_s: f64,
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let ok = self.v_min.is_finite()
            && self.v_max.is_finite()
            && self.v_min > 0.0
            && self.v_min <= self.v_max
            && self.pause_s >= 0.0
            && self.warmup_s >= 0.0
            && self.pause_s.is_finite()
            && self.warmup_s.is_finite();
        if !ok {
            return Err(DatagenError::InvalidParams(format!(
                "mobility needs 0 < v_min <= v_max and non-negative pause/warmup, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Log-distance channel with log-normal shadowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub freq_hz: f64,
    pub pathloss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub ref_distance_m: f64,
    /// Transmit power plus antenna gains minus noise floor.
    #[serde(default = "default_tx_budget")]
    pub tx_budget_db: f64,
}

fn default_tx_budget() -> f64 {
    90.0
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let ok = self.freq_hz.is_finite()
            && self.freq_hz > 0.0
            && self.ref_distance_m.is_finite()
            && self.ref_distance_m > 0.0
            && self.pathloss_exponent.is_finite()
            && self.shadowing_sigma_db.is_finite()
            && self.shadowing_sigma_db >= 0.0
            && self.tx_budget_db.is_finite();
        if !ok {
            return Err(DatagenError::InvalidParams(format!("invalid channel parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalySpec {
    /// Expected fraction of samples whose window is a traffic surge.
    pub surge_fraction: f64,
    /// Arrival-rate multiplier inside surge windows.
    pub surge_multiplier: f64,
}

/// Ground-truth label rule.
///
/// `label = 1` when the observed SNR is below the group's threshold or the
/// sample sits in a surge window. Urban samples use
/// `snr_threshold_db + urban_margin_db`. `confound` couples the protected
/// group to surge exposure: a sample enters a surge window when a uniform
/// draw falls below `surge_fraction * (1 + confound)` (urban) or
/// `surge_fraction * (1 - confound)` (rural).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRuleParams {
    pub snr_threshold_db: f64,
    #[serde(default)]
    pub urban_margin_db: f64,
    #[serde(default)]
    pub confound: f64,
}

/// Every tunable knob of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParams {
    pub traffic: TrafficParams,
    pub mobility: MobilityParams,
    pub channel: ChannelParams,
    pub anomaly_sigma: f64,
    pub surge: AnomalySpec,
    pub n_users: usize,
    pub area_side_m: f64,
    pub duration_s: f64,
    /// Radius of the central "urban" disc; everything else is rural.
    pub urban_radius_m: f64,
    pub label_rule: LabelRuleParams,
}

impl Default for SimulationParams {
    /// A 100-user slice on a 1 km square: Poisson traffic at 5 pkt/s,
    /// random-waypoint mobility at 1-10 m/s, a 28 GHz log-distance channel
    /// and surges on 20% of samples at 1.2x load.
    fn default() -> Self {
        Self {
            traffic: TrafficParams::constant(5.0),
            mobility: MobilityParams { v_min: 1.0, v_max: 10.0, pause_s: 0.0, warmup_s: 1000.0 },
            channel: ChannelParams {
                freq_hz: 28e9,
                pathloss_exponent: 2.0,
                shadowing_sigma_db: 4.0,
                ref_distance_m: 1.0,
                tx_budget_db: 90.0,
            },
            anomaly_sigma: 0.5,
            surge: AnomalySpec { surge_fraction: 0.2, surge_multiplier: 1.2 },
            n_users: 100,
            area_side_m: 1000.0,
            duration_s: 6000.0,
            urban_radius_m: 200.0,
            label_rule: LabelRuleParams { snr_threshold_db: -28.0, urban_margin_db: 8.0, confound: 0.0 },
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<(), DatagenError> {
        self.traffic.validate()?;
        self.mobility.validate()?;
        self.channel.validate()?;
        let scalars = [
            self.anomaly_sigma,
            self.surge.surge_fraction,
            self.surge.surge_multiplier,
            self.area_side_m,
            self.duration_s,
            self.urban_radius_m,
            self.label_rule.snr_threshold_db,
            self.label_rule.urban_margin_db,
            self.label_rule.confound,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(DatagenError::InvalidParams("non-finite parameter".into()));
        }
        if self.anomaly_sigma < 0.0 {
            return Err(DatagenError::InvalidParams("anomaly_sigma must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.surge.surge_fraction) || self.surge.surge_multiplier < 1.0 {
            return Err(DatagenError::InvalidParams(
                "surge_fraction must be in [0,1] and surge_multiplier >= 1".into(),
            ));
        }
        if self.n_users == 0 {
            return Err(DatagenError::InvalidParams("n_users must be >= 1".into()));
        }
        if self.area_side_m <= 0.0 || self.duration_s <= 0.0 || self.urban_radius_m < 0.0 {
            return Err(DatagenError::InvalidParams(
                "area_side_m and duration_s must be > 0, urban_radius_m >= 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.label_rule.confound) {
            return Err(DatagenError::InvalidParams("confound must be in [0,1)".into()));
        }
        Ok(())
    }

    pub fn theta_layout(&self) -> ThetaLayout {
        ThetaLayout { n_harmonics: self.traffic.harmonics.len() }
    }

    /// Flat view in the canonical order (see [`ThetaLayout`]).
    pub fn to_flat(&self) -> Vec<f64> {
        let h = &self.traffic.harmonics;
        let mut v = Vec::with_capacity(7 + 3 * h.len());
        v.push(self.traffic.lambda0);
        v.extend(h.iter().map(|x| x.alpha));
        v.extend(h.iter().map(|x| x.freq_hz));
        v.extend(h.iter().map(|x| x.phase_rad));
        v.extend([
            self.mobility.v_min,
            self.mobility.v_max,
            self.channel.pathloss_exponent,
            self.channel.shadowing_sigma_db,
            self.anomaly_sigma,
            self.surge.surge_multiplier,
        ]);
        v
    }

    /// Copy of `self` with the flat coordinates replaced.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self, DatagenError> {
        let layout = self.theta_layout();
        if flat.len() != layout.len() {
            return Err(DatagenError::InvalidParams(format!(
                "flat theta has {} entries, layout needs {}",
                flat.len(),
                layout.len()
            )));
        }
        let k = layout.n_harmonics;
        let mut out = self.clone();
        out.traffic.lambda0 = flat[0];
        for (i, h) in out.traffic.harmonics.iter_mut().enumerate() {
            h.alpha = flat[1 + i];
            h.freq_hz = flat[1 + k + i];
            h.phase_rad = flat[1 + 2 * k + i];
        }
        let tail = &flat[1 + 3 * k..];
        out.mobility.v_min = tail[0];
        out.mobility.v_max = tail[1];
        out.channel.pathloss_exponent = tail[2];
        out.channel.shadowing_sigma_db = tail[3];
        out.anomaly_sigma = tail[4];
        out.surge.surge_multiplier = tail[5];
        Ok(out)
    }
}

/// Canonical ordering of the flat parameter vector (layout version 1):
///
/// `[lambda0, alpha_1..K, f_1..K, phi_1..K, v_min, v_max,
///   pathloss_exponent, shadowing_sigma_db, anomaly_sigma, surge_multiplier]`
///
/// Each coordinate carries an admissible interval used both to normalize
/// it onto [0, 1] and to project updates back into the valid region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaLayout {
    pub n_harmonics: usize,
}

pub const THETA_LAYOUT_VERSION: u32 = 1;

impl ThetaLayout {
    pub fn len(&self) -> usize {
        7 + 3 * self.n_harmonics
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<String> {
        let k = self.n_harmonics;
        let mut names = vec!["lambda0".to_string()];
        names.extend((1..=k).map(|i| format!("alpha_{i}")));
        names.extend((1..=k).map(|i| format!("freq_hz_{i}")));
        names.extend((1..=k).map(|i| format!("phase_rad_{i}")));
        names.extend(
            [
                "v_min",
                "v_max",
                "pathloss_exponent",
                "shadowing_sigma_db",
                "anomaly_sigma",
                "surge_multiplier",
            ]
            .map(String::from),
        );
        names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| n == name)
    }

    /// Admissible `[lo, hi]` per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let k = self.n_harmonics;
        let mut b = vec![(0.0, 100.0)];
        b.extend(std::iter::repeat_n((-50.0, 50.0), k));
        b.extend(std::iter::repeat_n((0.0, 1.0), k));
        b.extend(std::iter::repeat_n((-std::f64::consts::PI, std::f64::consts::PI), k));
        b.extend([(0.1, 50.0), (0.1, 50.0), (1.5, 6.0), (0.0, 20.0), (0.0, 20.0), (1.0, 5.0)]);
        b
    }

    pub fn normalize(&self, flat: &[f64]) -> Vec<f64> {
        flat.iter().zip(self.bounds()).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect()
    }

    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(self.bounds()).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect()
    }

    /// Clamps a raw flat vector into the admissible region, including the
    /// cross-coordinate constraints `lambda0 >= sum |alpha_k|` and
    /// `v_min <= v_max`.
    pub fn project(&self, flat: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = flat
            .iter()
            .zip(self.bounds())
            .map(|(v, (lo, hi))| if v.is_nan() { lo } else { v.clamp(lo, hi) })
            .collect();
        let k = self.n_harmonics;
        let amplitude: f64 = out[1..1 + k].iter().map(|a| a.abs()).sum();
        if out[0] < amplitude {
            out[0] = amplitude;
        }
        let vmin = 1 + 3 * k;
        if out[vmin] > out[vmin + 1] {
            let mid = 0.5 * (out[vmin] + out[vmin + 1]);
            out[vmin] = mid;
            out[vmin + 1] = mid;
        }
        out
    }
}
