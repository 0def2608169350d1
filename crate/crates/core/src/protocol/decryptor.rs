use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{
    share_context, Pki, ProtocolError, RecoveryRequest, RecoveryResponse, Refusal, ShareLabel, UnmaskRequest,
    UnmaskResponse, UserId, UserKeys,
};
use crate::cost::Counters;
use crate::crypto::{
    field_for_kappa, key_agree, prf, sym_decrypt, Ciphertext, Group, PrimeField, SecretShare, Seed, SharedSecret,
};
use crate::params::ProtocolParams;
use crate::ring::{element_masks, ContributorIndex, IndicatorSet, MaskScope};

struct ClientKeys {
    /// `r_{i,u}`.
    seed: Seed,
    /// `k_{i,u}`.
    enc: SharedSecret,
}

/// A decryptor: holds seed shares and answers with element-wise masks.
pub struct Decryptor {
    id: UserId,
    round: u64,
    params: Arc<ProtocolParams>,
    group: Arc<dyn Group>,
    keys: UserKeys,
    field: PrimeField,
    scope: Arc<MaskScope>,
    decryptors: BTreeSet<UserId>,
    clients: BTreeMap<UserId, ClientKeys>,
}

impl Decryptor {
    pub fn new(
        id: UserId,
        keys: UserKeys,
        params: Arc<ProtocolParams>,
        group: Arc<dyn Group>,
        scope: Arc<MaskScope>,
        round: u64,
    ) -> Self {
        let field = field_for_kappa(params.kappa).expect("kappa validated with the parameters");
        Self {
            id,
            round,
            params,
            group,
            keys,
            field,
            scope,
            decryptors: BTreeSet::new(),
            clients: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> UserId {
        self.id
    }

    pub fn keys(&self) -> &UserKeys {
        &self.keys
    }

    /// Setup phase: derives `r_{i,u}` and `k_{i,u}` for every client.
    pub fn derive_round_keys(
        &mut self,
        pki: &Pki,
        clients: &[UserId],
        decryptors: &[UserId],
        cost: &mut Counters,
    ) -> Result<(), ProtocolError> {
        let kappa = self.params.kappa;
        let group = self.group.as_ref();
        self.clients.clear();
        for &i in clients {
            let pk = pki.get(i)?;
            let s = key_agree(group, self.keys.mask.private(), &pk.mask, kappa)?;
            let enc = key_agree(group, self.keys.enc.private(), &pk.enc, kappa)?;
            self.clients.insert(i, ClientKeys { seed: prf(&s, self.round), enc });
        }
        self.decryptors = decryptors.iter().copied().collect();
        cost.key_agreements += 2 * clients.len() as u64;
        cost.prf_evals += clients.len() as u64;
        Ok(())
    }

    /// `r_{i,u}`; exposed so the adversary can model colluding decryptors.
    pub fn client_seed(&self, client: UserId) -> Option<&Seed> {
        self.clients.get(&client).map(|c| &c.seed)
    }

    fn open(&self, owner: UserId, label: ShareLabel, ct: &Ciphertext) -> Option<SecretShare> {
        let keys = self.clients.get(&owner)?;
        let (_, aad) = share_context(self.round, owner, self.id, label);
        let plain = sym_decrypt(&keys.enc, ct, &aad).ok()?;
        SecretShare::decode(&self.field, &plain).ok()
    }

    /// Unmask phase: builds `C[k]` from the forwarded indicator sets,
    /// returns `emk_u` and the decrypted shares of every `r_i`.
    pub fn unmask(&self, req: &UnmaskRequest, cost: &mut Counters) -> Result<UnmaskResponse, Refusal> {
        let mut seen = BTreeSet::new();
        for (i, _) in &req.indicators {
            if !self.clients.contains_key(i) {
                return Err(Refusal::UnknownClient(*i));
            }
            if !seen.insert(*i) {
                return Err(Refusal::DuplicateEntry(*i));
            }
        }
        // Out-of-scope indices are ignored rather than trusted.
        let sets: Vec<IndicatorSet> = req
            .indicators
            .iter()
            .map(|(_, b)| {
                let kept: Vec<u32> = b.indices().iter().copied().filter(|&k| self.scope.contains(k)).collect();
                IndicatorSet::new(kept).expect("subsequence of a sorted set")
            })
            .collect();
        let refs: Vec<&IndicatorSet> = sets.iter().collect();
        let index = ContributorIndex::new(&self.scope, &refs).expect("filtered to scope");
        let seeds: Vec<Seed> = req.indicators.iter().map(|(i, _)| self.clients[i].seed.clone()).collect();
        let ring = self.params.ring();
        let emk = element_masks(&index, &seeds, self.params.t_prime, ring).expect("one seed per client");
        let work = index.mask_work(self.params.t_prime) as u64;
        cost.prg_elements += work;
        cost.ring_ops += work;

        let mut shares = Vec::with_capacity(req.shares.len());
        let mut failed = Vec::new();
        for (i, ct) in &req.shares {
            cost.sym_ops += 1;
            match self.open(*i, ShareLabel::Individual, ct) {
                Some(s) => shares.push((*i, s)),
                None => failed.push(*i),
            }
        }
        Ok(UnmaskResponse { emk, shares, failed })
    }

    /// Dropout Recovery phase: releases shares of `r_{i,v}` for the listed
    /// `v` only if `|V| ≤ Δ_max`, `V ⊆ D` and the recipient is not listed.
    pub fn recover(&self, req: &RecoveryRequest, cost: &mut Counters) -> Result<RecoveryResponse, Refusal> {
        let max = self.params.delta_max;
        let listed: BTreeSet<UserId> = req.dropped.iter().copied().collect();
        if listed.len() != req.dropped.len() {
            let dup = req.dropped.iter().find(|v| req.dropped.iter().filter(|w| w == v).count() > 1).unwrap();
            return Err(Refusal::DuplicateEntry(*dup));
        }
        if listed.len() > max {
            return Err(Refusal::TooManyDropouts { claimed: listed.len(), max });
        }
        if let Some(&v) = listed.iter().find(|v| !self.decryptors.contains(v)) {
            return Err(Refusal::UnknownDecryptor(v));
        }
        if listed.contains(&self.id) {
            return Err(Refusal::SelfListed);
        }
        let mut shares = Vec::new();
        let mut failed = Vec::new();
        for (i, v, ct) in &req.shares {
            if !listed.contains(v) {
                continue;
            }
            cost.sym_ops += 1;
            match self.open(*i, ShareLabel::DecryptorSeed(*v), ct) {
                Some(s) => shares.push((*i, *v, s)),
                None => failed.push((*i, *v)),
            }
        }
        Ok(RecoveryResponse { shares, failed })
    }
}
