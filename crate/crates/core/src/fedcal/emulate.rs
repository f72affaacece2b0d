use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::numerics::RngStream;

/// Interference degrades SNR on a fixed fraction of samples by an offset
/// drawn uniformly from `[offset_min_db, offset_max_db]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSpec {
    pub fraction: f64,
    pub offset_min_db: f64,
    pub offset_max_db: f64,
}

impl Default for InterferenceSpec {
    fn default() -> Self {
        Self { fraction: 0.15, offset_min_db: 2.0, offset_max_db: 6.0 }
    }
}

/// Copy of `base` with `round(fraction * n)` samples, chosen without
/// replacement, losing SNR to interference. Nothing else changes,
/// including labels.
pub fn emulate_real(base: &Dataset, spec: &InterferenceSpec, rng: &mut RngStream) -> Dataset {
    let n = base.len();
    let k = ((spec.fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();

    let mut out = base.clone();
    for i in chosen {
        out.samples[i].snr_db -= rng.uniform_range(spec.offset_min_db, spec.offset_max_db);
    }
    out.note_lineage(&format!("emulate_real:interference={}", spec.fraction));
    out
}
