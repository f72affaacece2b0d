use proptest::prelude::*;
use seal_core::auditval::{
    adversarial_accuracy, equalized_odds, fid, fid_from_moments, validate, AuditError, Thresholds, ValidationVerdict,
};
use seal_core::datagen::{generate, SimulationParams};
use seal_core::ercd::{
    augment, build_suite, AugmentConfig, PerturbationDistribution, PerturbationSpec, RegulatoryTarget, TestSuite,
};
use seal_core::numerics::{Matrix, RngStream};
use seal_core::taskmodel::{train, MlpModel, TrainConfig, TASK_FEATURES};

fn gaussian_matrix(n: usize, mu: &[f64], sd: &[f64], seed: u64) -> Matrix {
    let mut rng = RngStream::new(seed, 0);
    let k = mu.len();
    let data = (0..n * k).map(|i| mu[i % k] + sd[i % k] * rng.standard_normal()).collect();
    Matrix::new(n, k, data).unwrap()
}

#[test]
fn identical_sets_have_zero_distance() {
    let a = gaussian_matrix(500, &[0.0, 3.0, -1.0], &[1.0, 2.0, 0.5], 1);
    assert!(fid(&a, &a).unwrap() <= 1e-9);
}

#[test]
fn one_dimensional_unit_shift_is_one() {
    let s = Matrix::diag(&[1.0]);
    let v = fid_from_moments(&[0.0], &s, &[1.0], &s).unwrap();
    assert!((v - 1.0).abs() < 1e-8);
    // sample estimate converges to the same value
    let a = gaussian_matrix(200_000, &[0.0], &[1.0], 2);
    let b = gaussian_matrix(200_000, &[1.0], &[1.0], 3);
    assert!((fid(&a, &b).unwrap() - 1.0).abs() < 0.03);
}

#[test]
fn commuting_diagonal_trace_term_is_two() {
    let v = fid_from_moments(&[0.0, 0.0], &Matrix::diag(&[1.0, 4.0]), &[0.0, 0.0], &Matrix::diag(&[4.0, 1.0])).unwrap();
    assert!((v - 2.0).abs() < 1e-8);
}

/// For 2x2 PSD inputs, S1 S2 is similar to a PSD matrix with eigenvalues
/// l1, l2, so Tr((S1 S2)^{1/2}) = sqrt(l1) + sqrt(l2)
///                              = sqrt(tr(S1 S2) + 2 sqrt(det(S1 S2))).
#[test]
fn non_commuting_two_by_two_matches_closed_form() {
    let s1 = Matrix::from_rows(&[vec![2.0, 0.7], vec![0.7, 1.0]]).unwrap();
    let s2 = Matrix::from_rows(&[vec![1.5, -0.4], vec![-0.4, 3.0]]).unwrap();
    let p = s1.matmul(&s2).unwrap();
    let det = p.get(0, 0) * p.get(1, 1) - p.get(0, 1) * p.get(1, 0);
    let cross = (p.trace() + 2.0 * det.sqrt()).sqrt();
    let mu1 = [0.3, -0.2];
    let mu2 = [1.0, 0.5];
    let expected = (0.7f64).powi(2) + (0.7f64).powi(2) + s1.trace() + s2.trace() - 2.0 * cross;
    let v = fid_from_moments(&mu1, &s1, &mu2, &s2).unwrap();
    assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
}

#[test]
fn fid_is_symmetric() {
    let a = gaussian_matrix(400, &[0.0, 1.0, 2.0], &[1.0, 0.5, 2.0], 4);
    let b = gaussian_matrix(300, &[0.5, 1.0, 1.0], &[2.0, 1.0, 1.0], 5);
    assert!((fid(&a, &b).unwrap() - fid(&b, &a).unwrap()).abs() < 1e-8);
}

/// Rows built per (group, label) cell: `n` rows of which `pos` predicted 1.
fn cell_rows(a: u8, y: u8, n: usize, pos: usize, out: &mut (Vec<u8>, Vec<u8>, Vec<u8>)) {
    for i in 0..n {
        out.0.push(u8::from(i < pos));
        out.1.push(y);
        out.2.push(a);
    }
}

#[test]
fn hand_counted_equalized_odds() {
    let mut t = (Vec::new(), Vec::new(), Vec::new());
    cell_rows(0, 1, 20, 18, &mut t); // TPR 0.9
    cell_rows(0, 0, 20, 4, &mut t); // FPR 0.2
    cell_rows(1, 1, 20, 14, &mut t); // TPR 0.7
    cell_rows(1, 0, 20, 2, &mut t); // FPR 0.1
    assert_eq!(t.0.len(), 80);
    let r = equalized_odds(&t.0, &t.1, &t.2).unwrap();
    assert!((r.eo_gap - 0.3).abs() < 1e-12);
    assert!((r.eo_score - 0.7).abs() < 1e-12);
    assert_eq!(r.counts, [[20, 20], [20, 20]]);
}

#[test]
fn identical_rates_and_perfect_predictions_have_no_gap() {
    let mut t = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..2 {
        cell_rows(a, 1, 10, 7, &mut t);
        cell_rows(a, 0, 10, 3, &mut t);
    }
    assert_eq!(t.0.len(), 40);
    assert_eq!(equalized_odds(&t.0, &t.1, &t.2).unwrap().eo_gap, 0.0);
    let labels: Vec<u8> = (0..30).map(|i| (i % 3 == 0) as u8).collect();
    let groups: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
    assert_eq!(equalized_odds(&labels, &labels, &groups).unwrap().eo_gap, 0.0);
}

fn small_dataset(seed: u64, n: usize) -> seal_core::datagen::Dataset {
    generate(&SimulationParams::default(), n, &RngStream::new(seed, 0)).unwrap()
}

fn snr_rule(x: &[f64]) -> u8 {
    u8::from(x[4] < 0.0)
}

#[test]
fn zero_eta_suite_and_constant_classifier_are_fully_robust() {
    let d = small_dataset(1, 300);
    let spec = PerturbationSpec {
        distribution: PerturbationDistribution::Gaussian,
        eta: 0.0,
        target_features: vec!["snr_db".into()],
        sample_fraction: 0.5,
    };
    let suite = build_suite(&d, RegulatoryTarget::Robustness, &spec, &mut RngStream::new(1, 1)).unwrap();
    assert_eq!(adversarial_accuracy(&snr_rule, &TASK_FEATURES, &suite, &d).unwrap(), 1.0);
    let noisy = PerturbationSpec { eta: 50.0, ..spec };
    let suite = build_suite(&d, RegulatoryTarget::Robustness, &noisy, &mut RngStream::new(1, 1)).unwrap();
    let constant = |_: &[f64]| 1u8;
    assert_eq!(adversarial_accuracy(&constant, &TASK_FEATURES, &suite, &d).unwrap(), 1.0);
}

#[test]
fn four_pairs_with_one_flip() {
    let d = small_dataset(2, 50);
    let picks: Vec<usize> = (0..4).collect();
    let mut perturbed: Vec<_> = picks.iter().map(|&i| d.samples[i].clone()).collect();
    let before = snr_rule(&[0.0, 0.0, 0.0, 0.0, perturbed[2].snr_db]);
    perturbed[2].snr_db = if before == 1 { 5.0 } else { -5.0 };
    let suite = TestSuite {
        regulatory_target: RegulatoryTarget::Robustness,
        spec: PerturbationSpec {
            distribution: PerturbationDistribution::Uniform,
            eta: 1.0,
            target_features: vec!["snr_db".into()],
            sample_fraction: 0.1,
        },
        base_digest: d.content_digest(),
        originals: picks.iter().map(|&i| d.samples[i].key()).collect(),
        perturbed,
    };
    assert_eq!(adversarial_accuracy(&snr_rule, &TASK_FEATURES, &suite, &d).unwrap(), 0.75);

    let mut broken = suite.clone();
    broken.originals[0] = (9999, 0);
    let err = adversarial_accuracy(&snr_rule, &TASK_FEATURES, &broken, &d).unwrap_err();
    assert!(matches!(err, AuditError::BrokenLinkage(_)));
}

fn scale_logits(model: &MlpModel, c: f64) -> MlpModel {
    let mut m = model.clone();
    let last_in = m.sizes[m.sizes.len() - 2];
    let n_last = last_in * 2 + 2;
    let len = m.params.len();
    for p in &mut m.params[len - n_last..] {
        *p *= c;
    }
    m
}

#[test]
fn adversarial_accuracy_depends_only_on_decisions() {
    let d = small_dataset(3, 800);
    let cfg = TrainConfig { max_epochs: 3, hidden: vec![16, 16], ..TrainConfig::default() };
    let model = train(&d, &TASK_FEATURES, &cfg).unwrap().model;
    let spec = PerturbationSpec {
        distribution: PerturbationDistribution::Gaussian,
        eta: 3.0,
        target_features: vec!["snr_db".into(), "traffic_load_pps".into()],
        sample_fraction: 0.5,
    };
    let suite = build_suite(&d, RegulatoryTarget::Robustness, &spec, &mut RngStream::new(3, 1)).unwrap();
    let base = adversarial_accuracy(&model, &TASK_FEATURES, &suite, &d).unwrap();
    for c in [0.5, 3.0, 40.0] {
        assert_eq!(adversarial_accuracy(&scale_logits(&model, c), &TASK_FEATURES, &suite, &d).unwrap(), base);
    }
}

#[test]
fn validate_on_real_data_itself_has_zero_fid() {
    let real = small_dataset(4, 1500);
    let dprime = augment(&real, &AugmentConfig::default(), &RngStream::new(4, 1)).unwrap();
    let cfg = TrainConfig { max_epochs: 4, hidden: vec![32, 32], ..TrainConfig::default() };
    let model = train(dprime.training_data(), &TASK_FEATURES, &cfg).unwrap().model;
    let r = validate(&dprime, &real, &model, &Thresholds::default(), 4).unwrap();
    assert!(r.fid <= 1e-9);
    assert!((0.0..=1.0).contains(&r.task_acc) && (0.0..=1.0).contains(&r.adv_acc));
    assert_eq!(r.verdict == ValidationVerdict::Pass, r.fairness.eo_gap < 0.05);
    assert_eq!(r, validate(&dprime, &real, &model, &Thresholds::default(), 4).unwrap());

    let open = validate(&dprime, &real, &model, &Thresholds::open(), 4).unwrap();
    assert_eq!(open.verdict, ValidationVerdict::Pass);

    let mut stale = dprime.clone();
    stale.base.samples[0].snr_db += 1.0;
    assert!(matches!(validate(&stale, &real, &model, &Thresholds::default(), 4), Err(AuditError::DigestMismatch(_))));
}

#[test]
fn validate_flags_shifted_generator() {
    let real = small_dataset(5, 1500);
    let mut shifted = SimulationParams::default();
    shifted.channel.shadowing_sigma_db = 14.0;
    let sim = generate(&shifted, 1500, &RngStream::new(5, 2)).unwrap();
    let dprime = augment(&sim, &AugmentConfig::default(), &RngStream::new(5, 1)).unwrap();
    let cfg = TrainConfig { max_epochs: 2, hidden: vec![8], ..TrainConfig::default() };
    let model = train(dprime.training_data(), &TASK_FEATURES, &cfg).unwrap().model;
    let r = validate(&dprime, &real, &model, &Thresholds::default(), 5).unwrap();
    assert!(r.fid > 0.1, "{}", r.fid);
    assert_eq!(r.verdict, ValidationVerdict::Recalibrate);
    assert_eq!(r.csv_row()[5], "recalibrate");
}

proptest! {
    #[test]
    fn swapping_group_coding_keeps_the_gap(
        rows in proptest::collection::vec((0u8..2, 0u8..2, 0u8..2), 8..200)
    ) {
        let mut rows = rows;
        // guarantee every (label, group) cell is populated
        rows.extend([(0, 0, 0), (0, 0, 1), (1, 1, 0), (1, 1, 1)]);
        let preds: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let groups: Vec<u8> = rows.iter().map(|r| r.2).collect();
        let swapped: Vec<u8> = groups.iter().map(|a| 1 - a).collect();
        let a = equalized_odds(&preds, &labels, &groups).unwrap();
        let b = equalized_odds(&preds, &labels, &swapped).unwrap();
        prop_assert!((a.eo_gap - b.eo_gap).abs() < 1e-15);
        prop_assert!(a.eo_gap >= 0.0 && a.eo_gap <= 2.0);
    }

    #[test]
    fn fid_never_negative(seed in 0u64..1000, shift in -2.0f64..2.0) {
        let a = gaussian_matrix(50, &[0.0, 0.0], &[1.0, 2.0], seed);
        let b = gaussian_matrix(60, &[shift, 0.0], &[1.0, 0.5], seed + 1);
        prop_assert!(fid(&a, &b).unwrap() >= 0.0);
    }
}
