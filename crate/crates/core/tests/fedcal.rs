#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use seal_core::datagen::{generate, Harmonic, SimulationParams};
use seal_core::fedcal::{
    calibrate, clip, emulate_real, local_gradient, run_round, write_history_jsonl, write_theta_trace, FLConfig,
    FedcalError, InterferenceSpec, Objective, PrivacyLedger, SimClient, Unbounded, UnitRegion,
};
use seal_core::numerics::RngStream;

struct Quadratic {
    c: Vec<f64>,
    n: usize,
}

impl Objective for Quadratic {
    fn n_samples(&self) -> usize {
        self.n
    }
    fn loss(&self, theta: &[f64]) -> Result<f64, FedcalError> {
        Ok(theta.iter().zip(&self.c).map(|(t, c)| (t - c).powi(2)).sum())
    }
}

/// Smooth but not quadratic, so central differences carry an O(h^2) error.
struct Wavy;

impl Objective for Wavy {
    fn n_samples(&self) -> usize {
        1
    }
    fn loss(&self, theta: &[f64]) -> Result<f64, FedcalError> {
        Ok(theta.iter().map(|t| (3.0 * t).sin() + t.exp()).sum())
    }
}

fn exact_gd_cfg(lr: f64) -> FLConfig {
    FLConfig { learning_rate: lr, dp_sigma: 0.0, clip_norm: 1e12, free: Vec::new(), ..FLConfig::default() }
}

#[test]
fn quadratic_gradient_matches_analytic() {
    let q = Quadratic { c: vec![0.1, 0.9, -0.4, 2.5], n: 1 };
    let theta = [0.7, 0.2, 0.3, 0.35];
    let g = local_gradient(&q, &theta, &[0, 1, 2, 3], 1e-3).unwrap();
    for i in 0..4 {
        let exact = 2.0 * (theta[i] - q.c[i]);
        assert!(((g[i] - exact) / exact).abs() < 1e-6, "{i}: {} vs {exact}", g[i]);
    }
}

#[test]
fn central_difference_error_is_second_order() {
    let theta = [0.4f64, -0.2];
    let exact: Vec<f64> = theta.iter().map(|t| 3.0 * (3.0 * t).cos() + t.exp()).collect();
    let g1 = local_gradient(&Wavy, &theta, &[0, 1], 1e-2).unwrap();
    let g2 = local_gradient(&Wavy, &theta, &[0, 1], 5e-3).unwrap();
    for i in 0..2 {
        let ratio = (g1[i] - exact[i]) / (g2[i] - exact[i]);
        assert!((ratio - 4.0).abs() < 0.05, "{i}: error ratio {ratio}");
    }
}

#[test]
fn phase_of_silent_harmonic_has_zero_gradient() {
    let mut theta = SimulationParams::default();
    theta.traffic.harmonics.push(Harmonic { alpha: 0.0, freq_hz: 0.01, phase_rad: 0.5 });
    let rng = RngStream::new(3, 0);
    let real = generate(&theta, 500, &rng).unwrap();
    let clients = SimClient::from_partition(&real, 1, &theta, &rng).unwrap();
    let layout = theta.theta_layout();
    let phase = layout.index_of("phase_rad_1").unwrap();
    let g = local_gradient(&clients[0], &layout.normalize(&theta.to_flat()), &[phase], 1e-3).unwrap();
    assert!(g[phase].abs() < 1e-9, "{}", g[phase]);
}

#[test]
fn single_client_round_is_plain_gradient_descent() {
    let q = Quadratic { c: vec![1.0, -1.0], n: 3 };
    let theta = [0.0, 0.5];
    let cfg = exact_gd_cfg(0.1);
    let mut ledger = PrivacyLedger::new(&cfg);
    let s = run_round(0, &theta, &[q], &[0, 1], &cfg, &Unbounded, &RngStream::new(0, 0), &mut ledger).unwrap();
    let expected = [0.0 - 0.1 * 2.0 * (0.0 - 1.0), 0.5 - 0.1 * 2.0 * (0.5 + 1.0)];
    for i in 0..2 {
        assert!((s.theta_next[i] - expected[i]).abs() < 1e-9);
    }
    assert_eq!(ledger.rounds_applied, 1);
}

#[test]
fn update_identity_holds_before_projection() {
    let clients: Vec<Quadratic> = (0..3).map(|k| Quadratic { c: vec![k as f64, 0.5], n: k + 1 }).collect();
    let cfg = FLConfig { dp_sigma: 0.7, free: Vec::new(), ..FLConfig::default() };
    let mut ledger = PrivacyLedger::new(&cfg);
    let s = run_round(4, &[0.3, 0.6], &clients, &[0, 1], &cfg, &Unbounded, &RngStream::new(1, 0), &mut ledger)
        .unwrap();
    for i in 0..2 {
        let recomputed = s.theta[i] - cfg.learning_rate * s.aggregated_g[i];
        assert_eq!(recomputed.to_bits(), s.theta_next_unprojected[i].to_bits());
    }
}

#[test]
fn quadratic_discrepancy_never_increases() {
    let clients: Vec<Quadratic> = (0..5).map(|_| Quadratic { c: vec![0.2, 0.8, 0.5], n: 10 }).collect();
    let cfg = FLConfig { n_rounds: 15, ..exact_gd_cfg(0.2) };
    let cal = calibrate(&[0.9, 0.1, 0.0], &clients, &[0, 1, 2], &cfg, &Unbounded, &RngStream::new(0, 0)).unwrap();
    let deltas: Vec<f64> = cal.history.iter().map(|s| s.mean_delta()).collect();
    assert!(deltas.windows(2).all(|w| w[1] <= w[0]), "{deltas:?}");
}

#[test]
fn zero_rounds_returns_start() {
    let q = [Quadratic { c: vec![0.0], n: 1 }];
    let cfg = FLConfig { n_rounds: 0, ..exact_gd_cfg(0.1) };
    let cal = calibrate(&[0.42], &q, &[0], &cfg, &Unbounded, &RngStream::new(0, 0)).unwrap();
    assert_eq!(cal.theta_final, vec![0.42]);
    assert!(cal.history.is_empty());
}

#[test]
fn sharded_gradient_equals_pooled_gradient() {
    let mut star = SimulationParams::default();
    star.channel.shadowing_sigma_db = 7.0;
    let theta0 = SimulationParams::default();
    let rng = RngStream::new(12, 0);
    let real = generate(&star, 2000, &rng).unwrap();
    let shards = SimClient::from_partition(&real, 5, &theta0, &rng).unwrap();
    assert!(shards.iter().all(|c| c.n_samples() == 400));
    let pooled = SimClient::from_partition(&real, 1, &theta0, &rng).unwrap();

    let layout = theta0.theta_layout();
    let free: Vec<usize> = ["shadowing_sigma_db", "pathloss_exponent"].iter().map(|n| layout.index_of(n).unwrap()).collect();
    let unit = layout.normalize(&theta0.to_flat());
    let cfg = exact_gd_cfg(0.01);
    let mut ledger = PrivacyLedger::new(&cfg);
    let s = run_round(0, &unit, &shards, &free, &cfg, &UnitRegion(layout), &RngStream::new(0, 0), &mut ledger).unwrap();
    let g_pooled = local_gradient(&pooled[0], &unit, &free, cfg.fd_step).unwrap();
    for i in 0..unit.len() {
        assert!((s.aggregated_g[i] - g_pooled[i]).abs() < 1e-10, "{i}: {} vs {}", s.aggregated_g[i], g_pooled[i]);
    }
}

fn shadowing_setup(seed: u64, n: usize, interference: bool) -> (SimulationParams, Vec<SimClient>) {
    let theta0 = SimulationParams::default();
    let mut star = theta0.clone();
    star.channel.shadowing_sigma_db = 8.0;
    let rng = RngStream::new(seed, 0);
    let mut real = generate(&star, n, &rng).unwrap();
    if interference {
        real = emulate_real(&real, &InterferenceSpec::default(), &mut rng.substream("interference", 0));
    }
    let clients = SimClient::from_partition(&real, 5, &theta0, &rng).unwrap();
    (theta0, clients)
}

#[test]
fn shadowing_moves_toward_truth() {
    for seed in 0..3 {
        let (theta0, clients) = shadowing_setup(seed, 2000, false);
        let layout = theta0.theta_layout();
        let cfg = FLConfig { dp_sigma: 0.0, ..FLConfig::default() };
        let free = cfg.free_indices(&layout).unwrap();
        let cal = calibrate(&layout.normalize(&theta0.to_flat()), &clients, &free, &cfg, &UnitRegion(layout), &RngStream::new(seed, 1))
            .unwrap();
        let idx = free[0];
        let sigma = layout.denormalize(&cal.theta_final)[idx];
        assert!((sigma - 8.0).abs() < (4.0f64 - 8.0).abs(), "seed {seed}: {sigma}");
        // frozen coordinates never move
        for (i, (a, b)) in cal.theta_final.iter().zip(&cal.theta0).enumerate() {
            if i != idx {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn noisy_calibration_reduces_discrepancy_and_replays() {
    let (theta0, clients) = shadowing_setup(5, 3000, true);
    let layout = theta0.theta_layout();
    let cfg = FLConfig::default();
    let free = cfg.free_indices(&layout).unwrap();
    let start = layout.normalize(&theta0.to_flat());
    let run = || calibrate(&start, &clients, &free, &cfg, &UnitRegion(layout), &RngStream::new(5, 1)).unwrap();
    let cal = run();
    assert_eq!(cal.history.len(), 10);
    assert_eq!(cal.ledger.rounds_applied, 10);
    let first = cal.history[0].mean_delta();
    let last = clients.iter().map(|c| c.loss(&cal.theta_final).unwrap() * c.n_samples() as f64).sum::<f64>()
        / clients.iter().map(|c| c.n_samples() as f64).sum::<f64>();
    assert!(last < first, "{last} !< {first}");
    assert_eq!(cal, run());

    let mut jsonl = Vec::new();
    write_history_jsonl(&mut jsonl, &cal.history).unwrap();
    assert_eq!(String::from_utf8(jsonl).unwrap().lines().count(), 10);
    let mut trace = Vec::new();
    write_theta_trace(&mut trace, &layout, &cal).unwrap();
    let text = String::from_utf8(trace).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("round,lambda0,"));
}

proptest! {
    #[test]
    fn clipped_norm_never_exceeds_bound(
        g in proptest::collection::vec(-1e6f64..1e6, 1..12),
        bound in 1e-3f64..100.0,
    ) {
        let c = clip(&g, bound);
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= bound * (1.0 + 1e-12));
    }
}
