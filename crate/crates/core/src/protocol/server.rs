use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{
    Abort, AbortCause, ClientReport, ProtocolError, RecoveryRequest, RecoveryResponse, Refusal, Selection,
    UnmaskRequest, UnmaskResponse, UserId,
};
use crate::cost::{Counters, Phase};
use crate::crypto::{field_for_kappa, LagrangeBasis, PrimeField, SecretShare, Seed};
use crate::params::ProtocolParams;
use crate::ring::{
    dropout_masks, unmask, ContributorIndex, IndicatorSet, MaskScope, RevealedAggregate, RingVector, UnmaskInputs,
};

/// Interception points of a (possibly malicious) server.
pub trait ServerBehavior: Send + Sync {
    /// Indicator sets forwarded to `decryptor`; honest servers forward the
    /// reported sets unchanged.
    fn forward_indicators(&self, _decryptor: UserId, honest: &[(UserId, IndicatorSet)]) -> Vec<(UserId, IndicatorSet)> {
        honest.to_vec()
    }

    /// The dropout list `V` announced for the given non-responders; an
    /// empty list skips Dropout Recovery.
    fn dropout_list(&self, missing: &[UserId]) -> Vec<UserId> {
        missing.to_vec()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HonestServer;

impl ServerBehavior for HonestServer {}

pub enum UnmaskOutcome {
    Revealed(RevealedAggregate),
    /// Recovery requests for the surviving decryptors.
    Recovery(Vec<(UserId, RecoveryRequest)>),
}

/// Everything the server has seen, for leakage accounting.
pub struct ServerView<'a> {
    pub reports: &'a BTreeMap<UserId, ClientReport>,
    pub forwarded: &'a BTreeMap<UserId, Vec<(UserId, IndicatorSet)>>,
    pub unmask_responses: &'a BTreeMap<UserId, UnmaskResponse>,
    pub recovery_responses: &'a BTreeMap<UserId, RecoveryResponse>,
    pub claimed_dropouts: &'a [UserId],
    pub aggregate: Option<&'a RingVector>,
}

pub struct Server {
    round: u64,
    params: Arc<ProtocolParams>,
    scope: Arc<MaskScope>,
    selection: Selection,
    behavior: Box<dyn ServerBehavior>,
    field: PrimeField,
    reports: BTreeMap<UserId, ClientReport>,
    aggregate: Option<RingVector>,
    index: Option<ContributorIndex>,
    forwarded: BTreeMap<UserId, Vec<(UserId, IndicatorSet)>>,
    unmask_responses: BTreeMap<UserId, UnmaskResponse>,
    individual_seeds: Vec<Seed>,
    missing: Vec<UserId>,
    claimed: Vec<UserId>,
    recovery_responses: BTreeMap<UserId, RecoveryResponse>,
    refusals: BTreeMap<UserId, Refusal>,
    bases: HashMap<Vec<u32>, LagrangeBasis>,
}

impl Server {
    pub fn new(
        params: Arc<ProtocolParams>,
        scope: Arc<MaskScope>,
        selection: Selection,
        behavior: Box<dyn ServerBehavior>,
        round: u64,
    ) -> Self {
        let field = field_for_kappa(params.kappa).expect("kappa validated with the parameters");
        Self {
            round,
            params,
            scope,
            selection,
            behavior,
            field,
            reports: BTreeMap::new(),
            aggregate: None,
            index: None,
            forwarded: BTreeMap::new(),
            unmask_responses: BTreeMap::new(),
            individual_seeds: Vec::new(),
            missing: Vec::new(),
            claimed: Vec::new(),
            recovery_responses: BTreeMap::new(),
            refusals: BTreeMap::new(),
            bases: HashMap::new(),
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn view(&self) -> ServerView<'_> {
        ServerView {
            reports: &self.reports,
            forwarded: &self.forwarded,
            unmask_responses: &self.unmask_responses,
            recovery_responses: &self.recovery_responses,
            claimed_dropouts: &self.claimed,
            aggregate: self.aggregate.as_ref(),
        }
    }

    pub fn receive_report(&mut self, sender: UserId, report: ClientReport) -> Result<(), ProtocolError> {
        if self.selection.clients.binary_search(&sender).is_err() || self.reports.contains_key(&sender) {
            return Err(ProtocolError::Unexpected { kind: "report", sender });
        }
        self.reports.insert(sender, report);
        Ok(())
    }

    /// Aggregates the reports and prepares one Unmask request per decryptor.
    pub fn close_report(&mut self, cost: &mut Counters) -> Result<Vec<(UserId, UnmaskRequest)>, Abort> {
        let need = self.selection.clients.len();
        if self.reports.len() != need {
            return Err(Abort::new(Phase::Report, AbortCause::MissingReports { have: self.reports.len(), need }));
        }
        let ring = self.params.ring();
        let mut agg = RingVector::zeros(ring, self.params.vector_len);
        for rep in self.reports.values() {
            agg.add_assign(&rep.masked).map_err(|e| Abort::protocol(Phase::Report, e))?;
        }
        cost.ring_ops += (self.reports.len() * self.params.vector_len) as u64;
        self.aggregate = Some(agg);

        let honest: Vec<(UserId, IndicatorSet)> =
            self.reports.iter().map(|(&i, r)| (i, r.indicator.clone())).collect();
        let refs: Vec<&IndicatorSet> = honest.iter().map(|(_, b)| b).collect();
        self.index =
            Some(ContributorIndex::new(&self.scope, &refs).map_err(|e| Abort::protocol(Phase::Report, e))?);

        let mut out = Vec::with_capacity(self.selection.decryptors.len());
        for (u_pos, &u) in self.selection.decryptors.iter().enumerate() {
            let indicators = self.behavior.forward_indicators(u, &honest);
            let shares = self.reports.iter().map(|(&i, r)| (i, r.individual_shares[u_pos].clone())).collect();
            self.forwarded.insert(u, indicators.clone());
            out.push((u, UnmaskRequest { indicators, shares }));
        }
        Ok(out)
    }

    pub fn receive_unmask(&mut self, sender: UserId, resp: UnmaskResponse) -> Result<(), ProtocolError> {
        if self.selection.point_of(sender).is_none() || self.unmask_responses.contains_key(&sender) {
            return Err(ProtocolError::Unexpected { kind: "unmask-response", sender });
        }
        self.unmask_responses.insert(sender, resp);
        Ok(())
    }

    pub fn receive_refusal(&mut self, sender: UserId, reason: Refusal) {
        self.refusals.entry(sender).or_insert(reason);
    }

    fn refused(&self, phase: Phase) -> Result<(), Abort> {
        match self.refusals.iter().next() {
            Some((&decryptor, reason)) => {
                Err(Abort::new(phase, AbortCause::Refused { decryptor, reason: reason.clone() }))
            }
            None => Ok(()),
        }
    }

    /// Interpolates one secret per owner from shares keyed by holder.
    fn reconstruct<F>(&mut self, phase: Phase, owner: UserId, mut share_of: F) -> Result<Seed, Abort>
    where
        F: FnMut(UserId) -> Option<SecretShare>,
    {
        let ell = self.params.ell;
        let mut picked: Vec<SecretShare> = Vec::with_capacity(ell);
        for &u in &self.selection.decryptors {
            if picked.len() == ell {
                break;
            }
            if let Some(s) = share_of(u) {
                if Some(s.point) == self.selection.point_of(u) {
                    picked.push(s);
                }
            }
        }
        if picked.len() < ell {
            return Err(Abort::new(
                phase,
                AbortCause::UnrecoverableSeed { client: owner, have: picked.len(), need: ell },
            ));
        }
        let points: Vec<u32> = picked.iter().map(|s| s.point).collect();
        let field = &self.field;
        let basis = match self.bases.get(&points) {
            Some(b) => b,
            None => {
                let b = LagrangeBasis::at_zero(field, &points).map_err(|e| Abort::protocol(phase, e))?;
                self.bases.entry(points).or_insert(b)
            }
        };
        let value = basis.combine(field, picked.iter().map(|s| &s.value));
        crate::crypto::seed_from_value(&value, self.params.kappa).map_err(|e| Abort::protocol(phase, e))
    }

    /// Reconstructs every `r_i`; reveals the aggregate if the dropout list
    /// is empty, otherwise requests recovery of the listed decryptors' seeds
    /// from the responders not on the list.
    pub fn close_unmask(&mut self, cost: &mut Counters) -> Result<UnmaskOutcome, Abort> {
        self.refused(Phase::Unmask)?;
        let ell = self.params.ell;
        let d = self.selection.decryptors.len();
        if self.unmask_responses.len() < ell {
            return Err(Abort::new(
                Phase::Unmask,
                AbortCause::TooFewResponses { have: self.unmask_responses.len(), need: ell },
            ));
        }
        let clients = self.selection.clients.clone();
        let mut seeds = Vec::with_capacity(clients.len());
        for &i in &clients {
            let responses = &self.unmask_responses;
            let lookup: HashMap<UserId, SecretShare> = responses
                .iter()
                .filter_map(|(&u, r)| r.shares.iter().find(|(c, _)| *c == i).map(|(_, s)| (u, s.clone())))
                .collect();
            seeds.push(self.reconstruct(Phase::Unmask, i, |u| lookup.get(&u).cloned())?);
        }
        cost.share_ops += (clients.len() * d * d) as u64;
        // Removing the individual masks: one PRG stream of length K per client.
        let stream = (clients.len() * self.params.vector_len) as u64;
        cost.prg_elements += stream;
        cost.ring_ops += stream;
        self.individual_seeds = seeds;
        self.missing = self
            .selection
            .decryptors
            .iter()
            .copied()
            .filter(|u| !self.unmask_responses.contains_key(u))
            .collect();
        self.claimed = self.behavior.dropout_list(&self.missing);
        if self.claimed.is_empty() {
            return self.finish(cost, None, Phase::Unmask).map(UnmaskOutcome::Revealed);
        }
        let mut out = Vec::new();
        for (&u, _) in self.unmask_responses.iter() {
            if self.claimed.contains(&u) {
                continue;
            }
            let u_pos = self.selection.point_of(u).unwrap() as usize - 1;
            let mut shares = Vec::new();
            for (&i, rep) in &self.reports {
                for &v in &self.claimed {
                    if let Some(vp) = self.selection.point_of(v) {
                        shares.push((i, v, rep.decryptor_share(d, vp as usize - 1, u_pos).clone()));
                    }
                }
            }
            out.push((u, RecoveryRequest { dropped: self.claimed.clone(), shares }));
        }
        Ok(UnmaskOutcome::Recovery(out))
    }

    pub fn receive_recovery(&mut self, sender: UserId, resp: RecoveryResponse) -> Result<(), ProtocolError> {
        if !self.unmask_responses.contains_key(&sender) || self.recovery_responses.contains_key(&sender) {
            return Err(ProtocolError::Unexpected { kind: "recovery-response", sender });
        }
        self.recovery_responses.insert(sender, resp);
        Ok(())
    }

    /// Reconstructs `r_{i,v}` for each listed decryptor `v` and reveals.
    pub fn close_recovery(&mut self, cost: &mut Counters) -> Result<RevealedAggregate, Abort> {
        self.refused(Phase::DropRcv)?;
        let ell = self.params.ell;
        let d = self.selection.decryptors.len();
        if self.recovery_responses.len() < ell {
            return Err(Abort::new(
                Phase::DropRcv,
                AbortCause::TooFewResponses { have: self.recovery_responses.len(), need: ell },
            ));
        }
        let clients = self.selection.clients.clone();
        let mut by_dropped = Vec::with_capacity(self.claimed.len());
        for v in self.claimed.clone() {
            let mut seeds = Vec::with_capacity(clients.len());
            for &i in &clients {
                let lookup: HashMap<UserId, SecretShare> = self
                    .recovery_responses
                    .iter()
                    .filter_map(|(&u, r)| {
                        r.shares.iter().find(|(c, w, _)| *c == i && *w == v).map(|(_, _, s)| (u, s.clone()))
                    })
                    .collect();
                seeds.push(self.reconstruct(Phase::DropRcv, i, |u| lookup.get(&u).cloned())?);
            }
            by_dropped.push(seeds);
        }
        cost.share_ops += (clients.len() * self.claimed.len() * d * d) as u64;
        self.finish(cost, Some(by_dropped), Phase::DropRcv)
    }

    fn finish(
        &mut self,
        cost: &mut Counters,
        recovered: Option<Vec<Vec<Seed>>>,
        phase: Phase,
    ) -> Result<RevealedAggregate, Abort> {
        let ring = self.params.ring();
        let t_prime = self.params.t_prime;
        let index = self.index.as_ref().expect("set in close_report");
        let dm = match &recovered {
            Some(seeds) => {
                let work = (index.mask_work(t_prime) * seeds.len()) as u64;
                cost.prg_elements += work;
                cost.ring_ops += work;
                Some(dropout_masks(index, seeds, t_prime, ring).map_err(|e| Abort::protocol(phase, e))?)
            }
            None => None,
        };
        let emks: Vec<_> = self
            .unmask_responses
            .iter()
            .filter(|(u, _)| !self.claimed.contains(u))
            .map(|(_, r)| r.emk.clone())
            .collect();
        cost.ring_ops += (emks.len() + dm.is_some() as usize) as u64 * self.scope.len() as u64;
        unmask(
            self.aggregate.as_ref().expect("set in close_report"),
            UnmaskInputs {
                scope: &self.scope,
                individual_seeds: &self.individual_seeds,
                emks: &emks,
                dropout_mask: dm.as_ref(),
                missing_decryptors: self.claimed.len(),
            },
        )
        .map_err(|e| Abort::protocol(phase, e))
    }
}
