use std::sync::Arc;

use persec_core::cost::{Counters, Phase};
use persec_core::crypto::{Group, ModPrimeGroup};
use persec_core::params::{derive_params, ParamsInput, ProtocolParams};
use persec_core::protocol::{
    select_roles, AbortCause, Client, ClientReport, Decryptor, HonestServer, Pki, PublicRandomness, RecoveryRequest,
    Refusal, Selection, Server, ServerBehavior, UnmaskOutcome, UnmaskRequest, UserId, UserKeys,
};
use persec_core::ring::{IndicatorSet, MaskScope, RingVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

struct Round {
    params: Arc<ProtocolParams>,
    scope: Arc<MaskScope>,
    sel: Selection,
    decryptors: Vec<Decryptor>,
    reports: Vec<ClientReport>,
    updates: Vec<RingVector>,
}

/// C clients, D decryptors, K=64 with the last 32 indices in scope; client
/// `i` is non-zero at scope index `32 + j` for every `j ≤ i`.
fn round(c: usize, d: usize) -> Round {
    let params = Arc::new(
        derive_params(&ParamsInput {
            clients: c,
            decryptors: d,
            neighbors: 2,
            vector_len: 64,
            scope_len: 32,
            t: 2,
            ..ParamsInput::default()
        })
        .unwrap(),
    );
    let scope = Arc::new(MaskScope::last(64, 32));
    let group: Arc<dyn Group> = Arc::new(ModPrimeGroup::safe_prime_64());
    let users: Vec<UserId> = (100..100 + (c + d) as u32).collect();
    let sel = select_roles(&users, &PublicRandomness::from_u64(9), d, c, 0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut pki = Pki::new();
    let mut keys = std::collections::BTreeMap::new();
    for &u in &users {
        let k = UserKeys::generate(group.as_ref(), &mut rng);
        pki.register(u, k.public()).unwrap();
        keys.insert(u, k);
    }
    let mut cost = Counters::default();
    let graph = persec_core::protocol::neighbor_graph(&PublicRandomness::from_u64(9), 0, &sel.clients, 2);
    let ring = params.ring();
    let mut reports = Vec::new();
    let mut updates = Vec::new();
    for (n, &i) in sel.clients.iter().enumerate() {
        let mut client = Client::new(i, keys[&i].clone(), params.clone(), group.clone(), 0);
        client.derive_round_keys(&pki, &graph[&i], &sel.decryptors, &mut cost).unwrap();
        let mut x = vec![0u64; 64];
        x[0] = n as u64 + 1;
        for v in x.iter_mut().skip(32).take(n + 1) {
            *v = ring.from_signed(-(n as i64) - 1);
        }
        let x = RingVector::from_elems(ring, x);
        reports.push(client.report(&x, &scope, &mut rng, &mut cost).unwrap().0);
        updates.push(x);
    }
    let decryptors = sel
        .decryptors
        .iter()
        .map(|&u| {
            let mut d = Decryptor::new(u, keys[&u].clone(), params.clone(), group.clone(), scope.clone(), 0);
            d.derive_round_keys(&pki, &sel.clients, &sel.decryptors, &mut cost).unwrap();
            d
        })
        .collect();
    Round { params, scope, sel, decryptors, reports, updates }
}

impl Round {
    fn server(&self, behavior: Box<dyn ServerBehavior>) -> (Server, Vec<(UserId, UnmaskRequest)>) {
        let mut s = Server::new(self.params.clone(), self.scope.clone(), self.sel.clone(), behavior, 0);
        for (&i, r) in self.sel.clients.iter().zip(&self.reports) {
            s.receive_report(i, r.clone()).unwrap();
        }
        let reqs = s.close_report(&mut Counters::default()).unwrap();
        (s, reqs)
    }

    fn answer(&self, s: &mut Server, reqs: &[(UserId, UnmaskRequest)], skip: &[usize]) {
        for (q, (u, req)) in reqs.iter().enumerate() {
            if !skip.contains(&q) {
                s.receive_unmask(*u, self.decryptors[q].unmask(req, &mut Counters::default()).unwrap()).unwrap();
            }
        }
    }

    fn plain_sum(&self, k: usize) -> u64 {
        let ring = self.params.ring();
        self.updates.iter().fold(0, |a, x| ring.add(a, x.get(k)))
    }
}

#[test]
fn reports_carry_one_plus_d_share_sets() {
    let r = round(5, 4);
    for rep in &r.reports {
        assert_eq!(rep.individual_shares.len(), 4);
        assert_eq!(rep.decryptor_shares.len(), 16);
    }
    // Client n contributes to scope indices 32..=32+n.
    assert_eq!(r.reports[2].indicator.indices(), &[32, 33, 34]);
}

#[test]
fn honest_round_reveals_exactly_the_threshold_indices() {
    let r = round(5, 4);
    let (mut s, reqs) = r.server(Box::new(HonestServer));
    r.answer(&mut s, &reqs, &[]);
    let UnmaskOutcome::Revealed(out) = s.close_unmask(&mut Counters::default()).unwrap() else {
        panic!("no dropouts")
    };
    // |C[32 + j]| = 5 − j; t′ = 2.
    for j in 0..32 {
        let k = 32 + j;
        let count = 5usize.saturating_sub(j);
        assert_eq!(out.is_revealed(k), count >= 2, "index {k}");
        if count >= 2 {
            assert_eq!(out.get(k), Some(r.plain_sum(k)));
        }
    }
    assert_eq!(out.get(0), Some(r.plain_sum(0)));
}

#[test]
fn fewer_than_ell_responses_abort_in_unmask() {
    let r = round(4, 9);
    let ell = r.params.ell;
    let (mut s, reqs) = r.server(Box::new(HonestServer));
    let skip: Vec<usize> = (0..9 - (ell - 1)).collect();
    r.answer(&mut s, &reqs, &skip);
    let Err(abort) = s.close_unmask(&mut Counters::default()) else { panic!("must abort") };
    assert_eq!(abort.phase, Phase::Unmask);
    assert_eq!(abort.cause, AbortCause::TooFewResponses { have: ell - 1, need: ell });
}

struct Disguise(Vec<UserId>);

impl ServerBehavior for Disguise {
    fn dropout_list(&self, missing: &[UserId]) -> Vec<UserId> {
        persec_core::adversary::disguise_dropouts(missing, &self.0)
    }
}

fn recovery_requests(r: &Round, missing: &[usize], extra: &[usize]) -> Vec<(UserId, RecoveryRequest)> {
    let victims = extra.iter().map(|&q| r.sel.decryptors[q]).collect();
    let (mut s, reqs) = r.server(Box::new(Disguise(victims)));
    r.answer(&mut s, &reqs, missing);
    match s.close_unmask(&mut Counters::default()).unwrap() {
        UnmaskOutcome::Recovery(reqs) => reqs,
        UnmaskOutcome::Revealed(_) => panic!("expected recovery"),
    }
}

#[test]
fn dropout_list_at_delta_max_is_served_and_one_more_is_refused() {
    let r = round(4, 9);
    let dmax = r.params.delta_max;
    assert_eq!((r.params.ell, dmax), (7, 4));
    let reqs = recovery_requests(&r, &[0], &[1, 2, 3]);
    assert_eq!(reqs.len(), 9 - dmax);
    for (u, req) in &reqs {
        assert_eq!(req.dropped.len(), dmax);
        let q = r.sel.decryptors.binary_search(u).unwrap();
        let resp = r.decryptors[q].recover(req, &mut Counters::default()).unwrap();
        assert_eq!(resp.shares.len(), 4 * dmax);
        assert!(resp.failed.is_empty());
    }
    let reqs = recovery_requests(&r, &[0], &[1, 2, 3, 4]);
    for (u, req) in &reqs {
        let q = r.sel.decryptors.binary_search(u).unwrap();
        assert_eq!(
            r.decryptors[q].recover(req, &mut Counters::default()),
            Err(Refusal::TooManyDropouts { claimed: dmax + 1, max: dmax })
        );
    }
}

#[test]
fn malformed_dropout_lists_are_refused() {
    let r = round(4, 9);
    let reqs = recovery_requests(&r, &[0], &[]);
    let (u, req) = &reqs[0];
    let q = r.sel.decryptors.binary_search(u).unwrap();
    let d = &r.decryptors[q];
    let client = r.sel.clients[0];
    let with = |dropped: Vec<UserId>| RecoveryRequest { dropped, shares: req.shares.clone() };
    let mut c = Counters::default();
    assert_eq!(d.recover(&with(vec![client]), &mut c), Err(Refusal::UnknownDecryptor(client)));
    assert_eq!(d.recover(&with(vec![*u]), &mut c), Err(Refusal::SelfListed));
    let v = req.dropped[0];
    assert_eq!(d.recover(&with(vec![v, v]), &mut c), Err(Refusal::DuplicateEntry(v)));
    assert!(d.recover(req, &mut c).is_ok());
}

#[test]
fn a_refusal_aborts_the_round_without_output() {
    let r = round(4, 9);
    let (mut s, reqs) = r.server(Box::new(Disguise(vec![])));
    r.answer(&mut s, &reqs, &[0]);
    let UnmaskOutcome::Recovery(reqs) = s.close_unmask(&mut Counters::default()).unwrap() else { panic!() };
    let (u, _) = &reqs[0];
    s.receive_refusal(*u, Refusal::SelfListed);
    for (v, req2) in reqs.iter().skip(1) {
        let q = r.sel.decryptors.binary_search(v).unwrap();
        s.receive_recovery(*v, r.decryptors[q].recover(req2, &mut Counters::default()).unwrap()).unwrap();
    }
    let Err(abort) = s.close_recovery(&mut Counters::default()) else { panic!("must abort") };
    assert_eq!(abort.phase, Phase::DropRcv);
    assert!(matches!(abort.cause, AbortCause::Refused { decryptor, .. } if decryptor == *u));
}

#[test]
fn unmask_requests_with_unknown_or_repeated_clients_are_refused() {
    let r = round(4, 4);
    let (_, reqs) = r.server(Box::new(HonestServer));
    let mut req = reqs[0].1.clone();
    let mut c = Counters::default();
    req.indicators.push((999, IndicatorSet::empty()));
    assert_eq!(r.decryptors[0].unmask(&req, &mut c).unwrap_err(), Refusal::UnknownClient(999));
    let mut req = reqs[0].1.clone();
    let first = req.indicators[0].clone();
    req.indicators.push(first.clone());
    assert_eq!(r.decryptors[0].unmask(&req, &mut c).unwrap_err(), Refusal::DuplicateEntry(first.0));
}

#[test]
fn swapped_ciphertexts_fail_authentication() {
    let r = round(4, 4);
    let (_, reqs) = r.server(Box::new(HonestServer));
    let mut req = reqs[0].1.clone();
    let (a, b) = (req.shares[0].1.clone(), req.shares[1].1.clone());
    req.shares[0].1 = b;
    req.shares[1].1 = a;
    let resp = r.decryptors[0].unmask(&req, &mut Counters::default()).unwrap();
    assert_eq!(resp.failed, vec![req.shares[0].0, req.shares[1].0]);
    // Shares meant for another decryptor do not open either.
    let mut req = reqs[0].1.clone();
    req.shares = reqs[1].1.shares.clone();
    let resp = r.decryptors[0].unmask(&req, &mut Counters::default()).unwrap();
    assert_eq!(resp.failed.len(), 4);
}

/// Forges only towards the first decryptor.
struct SplitView(UserId, Vec<u32>);

impl ServerBehavior for SplitView {
    fn forward_indicators(&self, decryptor: UserId, honest: &[(UserId, IndicatorSet)]) -> Vec<(UserId, IndicatorSet)> {
        if decryptor != self.0 {
            return honest.to_vec();
        }
        honest.iter().map(|(i, _)| (*i, IndicatorSet::new(self.1.clone()).unwrap())).collect()
    }
}

#[test]
fn disagreeing_indicator_views_yield_bottom() {
    let r = round(5, 4);
    // Index 36 has one contributor; the first decryptor is told it has five.
    let (mut s, reqs) = r.server(Box::new(SplitView(r.sel.decryptors[0], vec![36])));
    r.answer(&mut s, &reqs, &[]);
    let UnmaskOutcome::Revealed(out) = s.close_unmask(&mut Counters::default()).unwrap() else { panic!() };
    assert!(!out.is_revealed(36));
    // The forged view drops 32..=35 for that decryptor, so they turn ⊥ too.
    assert!((32..36).all(|k| !out.is_revealed(k)));
    assert_eq!(out.get(0), Some(r.plain_sum(0)));
}

#[test]
fn unmask_work_is_charged_only_above_threshold() {
    let r = round(5, 4);
    let (_, reqs) = r.server(Box::new(HonestServer));
    let mut c = Counters::default();
    r.decryptors[0].unmask(&reqs[0].1, &mut c).unwrap();
    // Indices 32..=35 have 5,4,3,2 contributors (≥ t′ = 2).
    assert_eq!(c.prg_elements, 5 + 4 + 3 + 2);
    assert_eq!(c.sym_ops, 5);
}
