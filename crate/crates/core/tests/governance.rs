use proptest::prelude::*;
use seal_core::datagen::{generate, SimulationParams};
use seal_core::ercd::{augment, AugmentConfig};
use seal_core::governance::{
    authorize, next_state, seal, share, transition, unseal, verify_chain, AccessRequest, DatasetMeta, GovError,
    LifecycleRecord, LifecycleState, Policy, PolicyKind, SealedPackage, UserContext, ACTIONS, ALL_STATES, KEY_LEN,
};
use seal_core::numerics::RngStream;

fn meta(pairs: &[(&str, &str)]) -> DatasetMeta {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn certified(subject: &str) -> LifecycleRecord {
    let mut r = LifecycleRecord::new(subject);
    for (t, a) in ["ercd_complete", "fl_round_complete", "metrics_computed", "audit_pass"].iter().enumerate() {
        r = transition(&r, a, "loop", t as u64).unwrap();
    }
    r
}

#[test]
fn empty_policy_list_grants() {
    let a = authorize(&UserContext::new("alice", &[], &[]), &DatasetMeta::new(), &[]).unwrap();
    assert!(a.granted);
    assert!(a.verdicts.is_empty());
}

#[test]
fn missing_role_denies_with_one_failure() {
    let user = UserContext::new("bob", &["operator"], &["research"]);
    let policies = [Policy::role("need-auditor", "auditor"), Policy::consent("need-research", "research")];
    let a = authorize(&user, &DatasetMeta::new(), &policies).unwrap();
    assert!(!a.granted);
    let failed: Vec<_> = a.verdicts.iter().filter(|v| !v.passed).map(|v| v.policy_id.as_str()).collect();
    assert_eq!(failed, ["need-auditor"]);
}

#[test]
fn role_and_certification_grant() {
    let user = UserContext::new("carol", &["auditor"], &[]);
    let policies = [Policy::role("r", "auditor"), Policy::certification("c")];
    assert!(authorize(&user, &meta(&[("validation_verdict", "pass")]), &policies).unwrap().granted);
    assert!(!authorize(&user, &meta(&[("validation_verdict", "recalibrate")]), &policies).unwrap().granted);
    assert!(!authorize(&user, &DatasetMeta::new(), &policies).unwrap().granted);
}

#[test]
fn metadata_predicate() {
    let p = Policy::new("fid-gate", PolicyKind::MetadataPredicate, &[("key", "fid"), ("op", "lt"), ("value", "0.1")]);
    let user = UserContext::new("dan", &[], &[]);
    assert!(authorize(&user, &meta(&[("fid", "0.09")]), std::slice::from_ref(&p)).unwrap().granted);
    assert!(!authorize(&user, &meta(&[("fid", "0.2")]), std::slice::from_ref(&p)).unwrap().granted);
    assert!(!authorize(&user, &DatasetMeta::new(), &[p]).unwrap().granted);
    assert_eq!(authorize(&UserContext::new("", &[], &[]), &DatasetMeta::new(), &[]).unwrap_err(), GovError::InvalidUser);
}

#[test]
fn named_transitions() {
    use LifecycleState::*;
    assert_eq!(next_state(Generated, "ercd_complete"), Some(Augmented));
    assert_eq!(next_state(Validated, "audit_pass"), Some(Certified));
    assert_eq!(next_state(Validated, "audit_fail"), Some(Rejected));
    assert_eq!(next_state(Rejected, "recalibrate"), Some(Calibrated));
    assert_eq!(next_state(Calibrated, "fl_round_complete"), Some(Calibrated));
    for a in ACTIONS {
        let err = transition(&LifecycleRecord { state: Archived, ..certified("s") }, a, "x", 9);
        assert!(err.is_err());
    }
}

#[test]
fn every_illegal_pair_is_rejected() {
    use LifecycleState::*;
    let legal = [
        (Generated, "ercd_complete"),
        (Augmented, "fl_round_complete"),
        (Calibrated, "fl_round_complete"),
        (Calibrated, "metrics_computed"),
        (Validated, "audit_pass"),
        (Validated, "audit_fail"),
        (Rejected, "recalibrate"),
        (Certified, "archive"),
        (Certified, "share"),
    ];
    // reach each state through legal moves, then try every action
    let paths: [(LifecycleState, &[&str]); 7] = [
        (Generated, &[]),
        (Augmented, &["ercd_complete"]),
        (Calibrated, &["ercd_complete", "fl_round_complete"]),
        (Validated, &["ercd_complete", "fl_round_complete", "metrics_computed"]),
        (Certified, &["ercd_complete", "fl_round_complete", "metrics_computed", "audit_pass"]),
        (Rejected, &["ercd_complete", "fl_round_complete", "metrics_computed", "audit_fail"]),
        (Archived, &["ercd_complete", "fl_round_complete", "metrics_computed", "audit_pass", "archive"]),
    ];
    let mut checked = 0;
    for (state, path) in paths {
        let mut r = LifecycleRecord::new("s");
        for (t, a) in path.iter().enumerate() {
            r = transition(&r, a, "x", t as u64).unwrap();
        }
        assert_eq!(r.state, state);
        for action in ACTIONS.iter().copied().chain(["bogus", ""]) {
            let res = transition(&r, action, "x", 99);
            if legal.contains(&(state, action)) {
                assert!(res.is_ok());
            } else {
                assert_eq!(res.unwrap_err(), GovError::IllegalTransition { state, action: action.into() });
                checked += 1;
            }
        }
    }
    assert_eq!(ALL_STATES.len() * (ACTIONS.len() + 2) - legal.len(), checked);
}

#[test]
fn every_single_field_mutation_breaks_the_chain() {
    let base = {
        let mut r = certified("subject-digest");
        r = transition(&r, "share", "eve", 10).unwrap();
        transition(&r, "archive", "ops", 11).unwrap()
    };
    assert!(verify_chain(&base));
    let mut rng = RngStream::new(77, 0);
    let mut detected = 0;
    for _ in 0..1000 {
        let mut r = base.clone();
        let i = rng.below(r.history.len());
        let e = &mut r.history[i];
        match rng.below(7) {
            0 => e.timestamp ^= 1 << rng.below(64),
            1 => e.seq ^= 1 << rng.below(8),
            2 => flip_char(&mut e.actor, &mut rng),
            3 => flip_char(&mut e.action, &mut rng),
            4 => flip_char(&mut e.prev_hash, &mut rng),
            5 => flip_char(&mut e.entry_hash, &mut rng),
            _ => flip_char(&mut r.subject, &mut rng),
        }
        detected += usize::from(!verify_chain(&r));
    }
    assert_eq!(detected, 1000);
}

fn flip_char(s: &mut String, rng: &mut RngStream) {
    let mut bytes = s.clone().into_bytes();
    let i = rng.below(bytes.len());
    // stays printable ASCII, always differs
    bytes[i] = if bytes[i] == b'a' { b'b' } else { b'a' };
    *s = String::from_utf8(bytes).unwrap();
}

#[test]
fn corrupt_chain_blocks_transitions() {
    let mut r = certified("s");
    r.history[1].actor = "mallory".into();
    assert_eq!(transition(&r, "archive", "x", 5).unwrap_err(), GovError::ChainCorrupt);
    let mut r = certified("s");
    r.state = LifecycleState::Archived;
    assert!(!verify_chain(&r));
}

#[test]
fn seal_round_trip_and_tamper_rejection() {
    let mut rng = RngStream::new(5, 0);
    let mut tamper = RngStream::new(6, 0);
    for i in 0..1000 {
        let mut key = [0u8; KEY_LEN];
        rng.fill_bytes(&mut key);
        let mut payload = vec![0u8; rng.below(300)];
        rng.fill_bytes(&mut payload);
        let pkg = seal(&payload, &key, "run-key", &mut rng).unwrap();
        assert_eq!(unseal(&pkg, &key).unwrap(), payload, "case {i}");
        let mut bytes = pkg.to_bytes();
        let pos = tamper.below(bytes.len());
        bytes[pos] ^= 1 << tamper.below(8);
        let rejected = match SealedPackage::from_bytes(&bytes) {
            Err(_) => true,
            Ok(p) => unseal(&p, &key) == Err(GovError::AuthFailure),
        };
        assert!(rejected, "case {i}: flip at byte {pos} accepted");
    }
}

#[test]
fn wrong_key_fails_and_nonces_are_fresh() {
    let mut rng = RngStream::new(8, 0);
    let key = [3u8; KEY_LEN];
    let a = seal(b"same payload", &key, "k", &mut rng).unwrap();
    let b = seal(b"same payload", &key, "k", &mut rng).unwrap();
    assert_ne!(a.nonce, b.nonce);
    assert_ne!(a.ciphertext, b.ciphertext);
    assert_eq!(unseal(&a, &[4u8; KEY_LEN]).unwrap_err(), GovError::AuthFailure);
    assert_eq!(unseal(&a, &[4u8; 31]).unwrap_err(), GovError::WrongKeyLength(31));
}

#[test]
fn share_requires_certification_and_authorization() {
    let d = generate(&SimulationParams::default(), 300, &RngStream::new(1, 0)).unwrap();
    let dprime = augment(&d, &AugmentConfig::default(), &RngStream::new(1, 1)).unwrap();
    let key = [9u8; KEY_LEN];
    let req = AccessRequest {
        user: UserContext::new("researcher", &["auditor"], &["research"]),
        meta: meta(&[("validation_verdict", "pass")]),
        policies: vec![Policy::role("r", "auditor"), Policy::consent("c", "research"), Policy::certification("v")],
    };
    let mut rng = RngStream::new(1, 2);

    let rec = certified(&dprime.digest());
    let (pkg, next) = share(&dprime, &rec, &req, &key, "k", &mut rng, 20).unwrap();
    let opened = unseal(&pkg, &key).unwrap();
    assert_eq!(seal_core::canonical::sha256_hex(&opened), dprime.digest());
    assert_eq!(next.history.len(), rec.history.len() + 1);
    assert_eq!(next.history.last().unwrap().action, "share");
    assert!(verify_chain(&next));

    let mut validated = LifecycleRecord::new("s");
    for (t, a) in ["ercd_complete", "fl_round_complete", "metrics_computed"].iter().enumerate() {
        validated = transition(&validated, a, "loop", t as u64).unwrap();
    }
    assert_eq!(
        share(&dprime, &validated, &req, &key, "k", &mut rng, 21).unwrap_err(),
        GovError::NotCertified(LifecycleState::Validated)
    );

    let no_consent = AccessRequest { user: UserContext::new("researcher", &["auditor"], &[]), ..req.clone() };
    let before = rec.clone();
    match share(&dprime, &rec, &no_consent, &key, "k", &mut rng, 22) {
        Err(GovError::Denied(v)) => assert_eq!(v.iter().filter(|v| !v.passed).count(), 1),
        other => panic!("{other:?}"),
    }
    assert_eq!(rec, before);
}

proptest! {
    #[test]
    fn removing_a_policy_never_revokes_a_grant(
        roles in proptest::collection::btree_set("[a-c]", 0..3),
        wanted in proptest::collection::vec("[a-c]", 0..5),
        drop in 0usize..5,
    ) {
        let user = UserContext { user_id: "u".into(), roles, consents: Default::default() };
        let policies: Vec<Policy> = wanted.iter().enumerate().map(|(i, r)| Policy::role(&i.to_string(), r)).collect();
        let full = authorize(&user, &DatasetMeta::new(), &policies).unwrap().granted;
        if full && !policies.is_empty() {
            let mut fewer = policies.clone();
            fewer.remove(drop % policies.len());
            prop_assert!(authorize(&user, &DatasetMeta::new(), &fewer).unwrap().granted);
        }
    }

    #[test]
    fn replayed_state_equals_recorded_state(steps in proptest::collection::vec(0usize..8, 0..30)) {
        let mut r = LifecycleRecord::new("p");
        for (t, s) in steps.iter().enumerate() {
            if let Ok(next) = transition(&r, ACTIONS[*s], "a", t as u64) {
                r = next;
            }
        }
        prop_assert!(verify_chain(&r));
    }
}
