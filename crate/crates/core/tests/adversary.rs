mod common;

use common::{dropout_spec, small_spec};
use persec_core::adversary::{AdversaryConfig, AdversaryError, Behavior, Forgery};
use persec_core::cost::Phase;
use persec_core::harness::{run_round, HarnessError, RunSpec, Simulation};
use persec_core::protocol::{AbortCause, Refusal};
use persec_core::ring::RingVector;

/// D=12 with three colluding decryptors (positions 0..3).
fn collusion_spec(seed: u64) -> RunSpec {
    let mut s = dropout_spec(seed, 0.0);
    s.params.eta_d = 0.25;
    s.adversary.colluding_decryptors = vec![0, 1, 2];
    s
}

#[test]
fn inflated_indices_leave_a_residual() {
    for seed in 0..4 {
        let mut s = small_spec(seed);
        s.adversary.behavior = Behavior::InflateToThreshold { max_targets: 16 };
        let out = Simulation::run(&s).unwrap();
        let agg = out.outcome().expect("forging does not abort");
        let p = s.derive().unwrap();
        let targets: Vec<&_> = out.result.attack.rows.iter().filter(|r| {
            let pos = out.result.oracle.scope.binary_search(&r.index).unwrap();
            let c = out.result.oracle.counts[pos];
            c < p.t_prime && agg.is_revealed(r.index as usize)
        }).collect();
        assert!(!targets.is_empty(), "seed {seed}: attack found no targets");
        for r in &targets {
            assert!(r.honest_contributors >= 1 && r.honest_contributors < p.t);
            assert!(!r.leaked, "index {} leaked", r.index);
            assert_ne!(agg.get(r.index as usize), Some(r.true_sum));
        }
        assert_eq!(out.result.attack.violations(), 0);
    }
}

#[test]
fn empty_forgery_is_an_honest_run() {
    let honest = Simulation::run(&small_spec(2)).unwrap();
    let mut s = small_spec(2);
    s.adversary.behavior = Behavior::ForgeIndicators { targets: vec![], fake_clients: vec![1, 2] };
    let forged = Simulation::run(&s).unwrap();
    assert_eq!(honest.result.records, forged.result.records);
    assert_eq!(honest.result.outcome, forged.result.outcome);
}

/// C=32, η_C=0.1 (colluders 0,1,2 → t′ = 6), t=3. Scope index 768 gets
/// 2 honest + 3 colluding contributors, 769 gets 3 + 3, 770 none.
fn crafted(spec: &RunSpec) -> Vec<RingVector> {
    let p = spec.derive().unwrap();
    let ring = p.ring();
    (0..p.clients)
        .map(|i| {
            let mut x = vec![0u64; p.vector_len];
            x[i] = 1 + i as u64;
            if i < 5 {
                x[768] = 10 + i as u64;
            }
            if i < 6 {
                x[769] = ring.from_signed(-(i as i64) - 1);
            }
            RingVector::from_elems(ring, x)
        })
        .collect()
}

fn threshold_spec() -> RunSpec {
    let mut s = small_spec(8);
    s.params.eta_c = 0.1;
    s.adversary.colluding_clients = vec![0, 1, 2];
    s
}

#[test]
fn leakage_oracle_examples() {
    let s = threshold_spec();
    let setup = s.setup().unwrap();
    assert_eq!(setup.params.t_prime, 6);
    let out = run_round(&setup, &crafted(&s)).unwrap();
    let agg = out.outcome.as_ref().unwrap();
    let row = |k: u32| out.attack.rows.iter().find(|r| r.index == k).unwrap().clone();

    // t−1 honest + ⌊η_C·C⌋ colluding: below t′, hidden.
    let r = row(768);
    assert_eq!((r.honest_contributors, r.colluding_contributors), (2, 3));
    assert!(!r.leaked && !r.violation);
    assert!(!agg.is_revealed(768));

    // t honest: permitted disclosure of the honest sum.
    let r = row(769);
    assert_eq!(r.honest_contributors, 3);
    assert!(r.leaked && !r.violation);
    let ring = setup.params.ring();
    assert_eq!(r.true_sum, ring.from_signed(-4 - 5 - 6));
    assert_eq!(r.server_view, Some(r.true_sum));

    // No contributors: ⊥.
    assert_eq!(row(770).server_view, None);
    assert!(!row(770).leaked);
}

#[test]
fn forging_on_top_of_genuine_colluder_contributions_still_fails() {
    let mut s = threshold_spec();
    // One honest non-contributor pushes 768 to exactly t′.
    s.adversary.behavior = Behavior::ForgeEach { forgeries: vec![Forgery { index: 768, fake_clients: vec![20] }] };
    let setup = s.setup().unwrap();
    let updates = crafted(&s);
    let out = run_round(&setup, &updates).unwrap();
    let agg = out.outcome.as_ref().unwrap();
    let r = out.attack.rows.iter().find(|r| r.index == 768).unwrap();
    assert!(agg.is_revealed(768), "decryptors release masks at the forged index");
    assert_ne!(agg.get(768), Some(out.oracle.sums.get(768)));
    assert!(r.server_view.is_some());
    assert!(!r.leaked);

    // Crediting a colluder instead cannot reach t′ without an honest id.
    s.adversary.behavior = Behavior::InflateToThreshold { max_targets: 4 };
    let out = run_round(&s.setup().unwrap(), &updates).unwrap();
    assert_eq!(out.attack.violations(), 0);
}

#[test]
fn oversized_disguise_aborts_with_no_shares_released() {
    for extra in [6usize, 7, 9] {
        let mut s = collusion_spec(3);
        s.adversary.behavior = Behavior::DisguiseDropouts { victims: (3..3 + extra).collect() };
        let out = Simulation::run(&s).unwrap();
        let abort = out.outcome().unwrap_err();
        assert_eq!(abort.phase, Phase::DropRcv);
        assert!(matches!(
            abort.cause,
            AbortCause::Refused { reason: Refusal::TooManyDropouts { .. }, .. }
        ));
        assert_eq!(out.result.attack.recovery_shares_released, 0);
        assert_eq!(out.result.attack.violations(), 0);
    }
}

#[test]
fn bounded_disguise_exposes_a_minority_of_honest_decryptors() {
    let p = collusion_spec(0).derive().unwrap();
    assert_eq!((p.ell, p.delta_max), (9, 5));
    for size in 1..=p.delta_max {
        let mut s = collusion_spec(size as u64);
        s.adversary.behavior = Behavior::DisguiseDropouts { victims: (3..3 + size).collect() };
        let out = Simulation::run(&s).unwrap();
        let a = &out.result.attack;
        assert_eq!(a.honest_decryptors, 9);
        assert!(a.honest_decryptors_exposed < a.honest_decryptors);
        let expected = if 12 - size >= p.ell { size } else { 0 };
        assert_eq!(a.honest_decryptors_exposed, expected, "|V| = {size}");
        assert_eq!(a.violations(), 0);
        if size <= 12 - p.ell {
            assert!(out.result.oracle.matches(out.outcome().unwrap()));
        }
    }
}

#[test]
fn withheld_masks_are_recovered() {
    let mut s = collusion_spec(4);
    s.adversary.behavior = Behavior::WithholdEmk { decryptors: vec![0, 1] };
    let out = Simulation::run(&s).unwrap();
    assert!(out.result.entered_recovery);
    assert!(out.result.oracle.matches(out.outcome().unwrap()));
    assert_eq!(out.result.attack.violations(), 0);
}

#[test]
fn maximal_collusion_reveals_only_the_threshold_set() {
    let mut s = collusion_spec(5);
    s.params.eta_c = 0.1;
    s.adversary.colluding_clients = vec![0, 1, 2];
    let p = s.derive().unwrap();
    let out = Simulation::run(&s).unwrap();
    let agg = out.outcome().unwrap();
    let o = &out.result.oracle;
    for (pos, &k) in o.scope.iter().enumerate() {
        let colluding = o.counts[pos] - o.honest_counts[pos];
        assert_eq!(agg.is_revealed(k as usize), o.honest_counts[pos] + colluding >= p.t_prime);
    }
    for r in &out.result.attack.rows {
        if r.leaked && r.honest_contributors > 0 {
            assert!(r.honest_contributors >= p.t, "index {}", r.index);
        }
    }
}

#[test]
fn config_validation() {
    let p = collusion_spec(0).derive().unwrap();
    let scope = persec_core::ring::MaskScope::last(p.vector_len, p.scope_len);
    let cfg = AdversaryConfig { colluding_decryptors: vec![0, 1, 2, 3], ..Default::default() };
    assert!(matches!(cfg.validate(&p, &scope), Err(AdversaryError::TooMany { .. })));
    let cfg = AdversaryConfig {
        behavior: Behavior::WithholdEmk { decryptors: vec![5] },
        colluding_decryptors: vec![0],
        ..Default::default()
    };
    assert_eq!(cfg.validate(&p, &scope), Err(AdversaryError::WithholderNotColluding(5)));
    let cfg = AdversaryConfig {
        behavior: Behavior::ForgeIndicators { targets: vec![3], fake_clients: vec![0] },
        ..Default::default()
    };
    assert_eq!(cfg.validate(&p, &scope), Err(AdversaryError::TargetOutsideScope(3)));

    let mut s = dropout_spec(0, 0.1);
    s.params.eta_d = 0.2;
    s.adversary.dropouts = vec![4];
    s.adversary.colluding_decryptors = vec![4];
    assert!(matches!(
        Simulation::run(&s),
        Err(HarnessError::Adversary(AdversaryError::DroppedAndColluding(4)))
    ));
}
