use std::collections::BTreeSet;
use std::sync::Arc;

use super::{compute_oracle, party_rng, HarnessError, OracleResult, Record, Schedule};
use crate::adversary::{measure_leakage, AdversarialServer, AdversaryConfig, AttackOutcome, Behavior, GroundTruth};
use crate::cost::{CostLedger, Counters, Phase, Role};
use crate::crypto::{field_for_kappa, Group, Seed};
use crate::params::ProtocolParams;
use crate::protocol::{
    neighbor_graph, select_roles, Abort, Body, Client, Codec, Decryptor, Message, Pki, ProtocolError,
    PublicRandomness, Selection, Server, UnmaskOutcome, UserId, UserKeys, SERVER_ID,
};
use crate::ring::{MaskScope, RevealedAggregate, RingError, RingVector};

/// Resolved inputs of one round.
pub struct RoundSetup {
    pub params: Arc<ProtocolParams>,
    pub scope: Arc<MaskScope>,
    pub group: Arc<dyn Group>,
    pub randomness: PublicRandomness,
    pub round: u64,
    pub master_seed: u64,
    pub schedule: Schedule,
    pub adversary: AdversaryConfig,
    pub users: Vec<UserId>,
}

pub struct RoundResult {
    pub selection: Selection,
    pub outcome: Result<RevealedAggregate, Abort>,
    pub ledger: CostLedger,
    /// Every delivered message, in delivery order.
    pub records: Vec<Record>,
    pub attack: AttackOutcome,
    pub oracle: OracleResult,
    pub entered_recovery: bool,
    pub claimed_dropouts: Vec<UserId>,
}

/// Star-topology message bus: encodes, ledgers and records every message,
/// and hands the receiver the decoded copy.
struct Bus<'a> {
    codec: Codec,
    round: u64,
    records: Vec<Record>,
    ledger: &'a mut CostLedger,
}

impl Bus<'_> {
    fn deliver(
        &mut self,
        phase: Phase,
        (sender, sender_role): (UserId, Role),
        (receiver, receiver_role): (UserId, Role),
        body: Body,
    ) -> Result<Message, ProtocolError> {
        let bytes = Message { round: self.round, sender, body }.encode(&self.codec);
        let n = bytes.len() as u64;
        self.ledger.cell_mut(sender_role, phase).bytes_sent += n;
        self.ledger.cell_mut(receiver_role, phase).bytes_received += n;
        let msg = Message::decode(&self.codec, &bytes)?;
        self.records.push(Record { phase, sender_role, receiver_role, receiver, bytes });
        Ok(msg)
    }
}

fn collect<T, E>(v: Vec<Result<T, E>>) -> Result<Vec<T>, E> {
    v.into_iter().collect()
}

/// Executes Setup, Report, Unmask and (if needed) Dropout Recovery with
/// phase barriers. Deterministic in `(setup, updates)`.
pub fn run_round(setup: &RoundSetup, updates: &[RingVector]) -> Result<RoundResult, HarnessError> {
    let p = setup.params.clone();
    let scope = setup.scope.clone();
    let adv = &setup.adversary;
    adv.validate(&p, &scope)?;
    if updates.len() != p.clients {
        return Err(HarnessError::UpdateCount { expected: p.clients, got: updates.len() });
    }
    if let Some(x) = updates.iter().find(|x| x.len() != p.vector_len || x.ring() != p.ring()) {
        return Err(RingError::LengthMismatch { expected: p.vector_len, got: x.len() }.into());
    }
    let sched = setup.schedule;
    let (round, master) = (setup.round, setup.master_seed);
    let sel = select_roles(&setup.users, &setup.randomness, p.decryptors, p.clients, round)?;
    let group = setup.group.clone();

    let parties: Vec<UserId> = sel.decryptors.iter().chain(&sel.clients).copied().collect();
    let keys: Vec<UserKeys> = sched.map(parties.len(), |n| {
        UserKeys::generate(group.as_ref(), &mut party_rng(master, "keys", parties[n], 0))
    });
    let mut pki = Pki::new();
    for (&u, k) in parties.iter().zip(&keys) {
        pki.register(u, k.public())?;
    }
    let (dec_keys, client_keys) = keys.split_at(p.decryptors);

    let mut ledger = CostLedger::new();
    let codec = Codec { ring: p.ring(), field: field_for_kappa(p.kappa).map_err(ProtocolError::from)? };
    let mut bus = Bus { codec, round, records: Vec::new(), ledger: &mut ledger };

    // Setup.
    let graph = neighbor_graph(&setup.randomness, round, &sel.clients, p.neighbors);
    let clients = collect(sched.map(p.clients, |n| {
        let id = sel.clients[n];
        let mut c = Counters::default();
        let mut client = Client::new(id, client_keys[n].clone(), p.clone(), group.clone(), round);
        client.derive_round_keys(&pki, &graph[&id], &sel.decryptors, &mut c).map(|_| (client, c))
    }))?;
    let decryptors = collect(sched.map(p.decryptors, |n| {
        let mut c = Counters::default();
        let mut d = Decryptor::new(sel.decryptors[n], dec_keys[n].clone(), p.clone(), group.clone(), scope.clone(), round);
        d.derive_round_keys(&pki, &sel.clients, &sel.decryptors, &mut c).map(|_| (d, c))
    }))?;
    for (_, c) in &clients {
        bus.ledger.add(Role::Client, Phase::Setup, *c);
    }
    for (_, c) in &decryptors {
        bus.ledger.add(Role::Decryptor, Phase::Setup, *c);
    }

    // Report.
    let reports = collect(sched.map(p.clients, |n| {
        let (client, _) = &clients[n];
        let mut c = Counters::default();
        let mut rng = party_rng(master, "report", client.id(), round);
        client.report(&updates[n], &scope, &mut rng, &mut c).map(|(r, s)| (r, s, c))
    }))?;
    let indicators: Vec<_> = reports.iter().map(|(r, _, _)| r.indicator.clone()).collect();
    let forgeries = adv.forgeries(&p, &scope, &indicators);
    let behavior = AdversarialServer::new(adv, &sel, &forgeries);
    let mut server = Server::new(p.clone(), scope.clone(), sel.clone(), Box::new(behavior), round);
    let mut individual_seeds: Vec<Seed> = Vec::with_capacity(p.clients);
    for (n, (report, seed, c)) in reports.into_iter().enumerate() {
        bus.ledger.add(Role::Client, Phase::Report, c);
        individual_seeds.push(seed);
        let msg = bus.deliver(Phase::Report, (sel.clients[n], Role::Client), (SERVER_ID, Role::Server), Body::Report(report))?;
        match msg.body {
            Body::Report(r) => server.receive_report(msg.sender, r)?,
            b => return Err(ProtocolError::Unexpected { kind: b.kind(), sender: msg.sender }.into()),
        }
    }

    let pos = |ids: &[usize]| -> BTreeSet<UserId> { ids.iter().map(|&q| sel.decryptors[q]).collect() };
    let mut silent = pos(&adv.dropouts);
    if let Behavior::WithholdEmk { decryptors } = &adv.behavior {
        silent.extend(pos(decryptors));
    }
    let silent_late: BTreeSet<UserId> = silent.union(&pos(&adv.late_dropouts)).copied().collect();
    let u_pos = |u: UserId| sel.point_of(u).expect("request addressed to a decryptor") as usize - 1;
    let mut entered_recovery = false;

    let outcome: Result<RevealedAggregate, Abort> = 'round: {
        let mut sc = Counters::default();
        let requests = server.close_report(&mut sc);
        bus.ledger.add(Role::Server, Phase::Report, sc);
        let requests = match requests {
            Ok(r) => r,
            Err(a) => break 'round Err(a),
        };

        // Unmask.
        let mut live = Vec::new();
        for (u, req) in requests {
            let msg = bus.deliver(Phase::Unmask, (SERVER_ID, Role::Server), (u, Role::Decryptor), Body::UnmaskRequest(req))?;
            if let (false, Body::UnmaskRequest(req)) = (silent.contains(&u), msg.body) {
                live.push((u_pos(u), req));
            }
        }
        let answers = sched.map(live.len(), |n| {
            let (q, req) = &live[n];
            let mut c = Counters::default();
            (decryptors[*q].0.unmask(req, &mut c), c)
        });
        for ((q, _), (answer, c)) in live.iter().zip(answers) {
            bus.ledger.add(Role::Decryptor, Phase::Unmask, c);
            let body = answer.map_or_else(Body::Refusal, Body::UnmaskResponse);
            let msg = bus.deliver(Phase::Unmask, (sel.decryptors[*q], Role::Decryptor), (SERVER_ID, Role::Server), body)?;
            match msg.body {
                Body::UnmaskResponse(r) => server.receive_unmask(msg.sender, r)?,
                Body::Refusal(r) => server.receive_refusal(msg.sender, r),
                b => return Err(ProtocolError::Unexpected { kind: b.kind(), sender: msg.sender }.into()),
            }
        }
        let mut sc = Counters::default();
        let out = server.close_unmask(&mut sc);
        bus.ledger.add(Role::Server, Phase::Unmask, sc);
        let requests = match out {
            Err(a) => break 'round Err(a),
            Ok(UnmaskOutcome::Revealed(r)) => break 'round Ok(r),
            Ok(UnmaskOutcome::Recovery(reqs)) => reqs,
        };

        // Dropout Recovery.
        entered_recovery = true;
        let mut live = Vec::new();
        for (u, req) in requests {
            let msg =
                bus.deliver(Phase::DropRcv, (SERVER_ID, Role::Server), (u, Role::Decryptor), Body::RecoveryRequest(req))?;
            if let (false, Body::RecoveryRequest(req)) = (silent_late.contains(&u), msg.body) {
                live.push((u_pos(u), req));
            }
        }
        let answers = sched.map(live.len(), |n| {
            let (q, req) = &live[n];
            let mut c = Counters::default();
            (decryptors[*q].0.recover(req, &mut c), c)
        });
        for ((q, _), (answer, c)) in live.iter().zip(answers) {
            bus.ledger.add(Role::Decryptor, Phase::DropRcv, c);
            let body = answer.map_or_else(Body::Refusal, Body::RecoveryResponse);
            let msg = bus.deliver(Phase::DropRcv, (sel.decryptors[*q], Role::Decryptor), (SERVER_ID, Role::Server), body)?;
            match msg.body {
                Body::RecoveryResponse(r) => server.receive_recovery(msg.sender, r)?,
                Body::Refusal(r) => server.receive_refusal(msg.sender, r),
                b => return Err(ProtocolError::Unexpected { kind: b.kind(), sender: msg.sender }.into()),
            }
        }
        let mut sc = Counters::default();
        let out = server.close_recovery(&mut sc);
        bus.ledger.add(Role::Server, Phase::DropRcv, sc);
        out
    };
    let records = std::mem::take(&mut bus.records);

    let decryptor_seeds: Vec<Vec<Seed>> = clients
        .iter()
        .map(|(c, _)| (0..p.decryptors).map(|q| c.decryptor_seed(q).expect("keys derived").clone()).collect())
        .collect();
    let truth = GroundTruth { selection: &sel, updates, individual_seeds: &individual_seeds, decryptor_seeds: &decryptor_seeds };
    let view = server.view();
    let attack = measure_leakage(&view, &truth, &p, &scope, adv, scope.indices());
    let claimed_dropouts = view.claimed_dropouts.to_vec();
    let oracle = compute_oracle(updates, &scope, &p, &adv.colluding_clients);

    Ok(RoundResult { selection: sel, outcome, ledger, records, attack, oracle, entered_recovery, claimed_dropouts })
}
