mod common;

use common::dropout_spec;
use persec_core::cost::{Phase, Role};
use persec_core::harness::{GroupChoice, RunSpec, Schedule, Simulation};
use proptest::prelude::*;

fn compact(seed: u64) -> RunSpec {
    let mut s = dropout_spec(seed, 0.3);
    s.params.clients = 12;
    s.params.neighbors = 4;
    s.params.vector_len = 128;
    s.params.scope_len = 64;
    s.workload.sparsity = 0.7;
    s.group = GroupChoice::Modp64;
    s
}

/// Up to ⌊0.3·12⌋ = 3 distinct decryptors, each dropping early or late.
fn schedule() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (prop::sample::subsequence((0..12).collect::<Vec<_>>(), 0..=3), prop::collection::vec(any::<bool>(), 3))
        .prop_map(|(who, late)| {
            let (l, e): (Vec<_>, Vec<_>) = who.into_iter().zip(late).partition(|(_, late)| *late);
            (e.into_iter().map(|(d, _)| d).collect(), l.into_iter().map(|(d, _)| d).collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bounded_dropout_schedules_preserve_the_output(seed in 0u64..4, (early, late) in schedule()) {
        let base = Simulation::run(&compact(seed)).unwrap();
        let mut s = compact(seed);
        s.adversary.dropouts = early.clone();
        s.adversary.late_dropouts = late;
        let out = Simulation::run(&s).unwrap();
        prop_assert_eq!(out.outcome().unwrap(), base.outcome().unwrap());
        prop_assert_eq!(out.result.entered_recovery, !early.is_empty());
        if early.is_empty() {
            prop_assert!(out.result.ledger.cell(Role::Server, Phase::DropRcv).is_zero());
        }
    }

    #[test]
    fn transcripts_do_not_depend_on_party_order(seed in 0u64..1000, order in any::<u64>()) {
        let mut s = compact(seed);
        s.adversary.dropouts = vec![(seed % 12) as usize];
        s.schedule = Schedule::Canonical;
        let a = Simulation::run(&s).unwrap();
        s.schedule = Schedule::Shuffled { seed: order };
        let b = Simulation::run(&s).unwrap();
        prop_assert_eq!(&a.result.records, &b.result.records);
        prop_assert_eq!(&a.result.ledger, &b.result.ledger);
        prop_assert_eq!(&a.result.outcome, &b.result.outcome);
    }

    #[test]
    fn every_delivered_byte_is_ledgered_once(seed in 0u64..1000, (early, late) in schedule()) {
        let mut s = compact(seed);
        s.adversary.dropouts = early;
        s.adversary.late_dropouts = late;
        let out = Simulation::run(&s).unwrap();
        let total = out.transcript().total_bytes();
        let sent: u64 = Role::ALL.iter().flat_map(|&r| Phase::ALL.map(|p| out.result.ledger.cell(r, p).bytes_sent)).sum();
        let received: u64 =
            Role::ALL.iter().flat_map(|&r| Phase::ALL.map(|p| out.result.ledger.cell(r, p).bytes_received)).sum();
        prop_assert_eq!(sent, total);
        prop_assert_eq!(received, total);
    }
}
