use std::sync::Arc;

use rand::RngCore;

use super::{share_context, ClientReport, Pki, ProtocolError, ShareLabel, UserId, UserKeys};
use crate::cost::Counters;
use crate::crypto::{field_for_kappa, key_agree, prf, ss_share, sym_encrypt, Group, PrimeField, Seed, SharedSecret};
use crate::params::ProtocolParams;
use crate::ring::{flamingo_mask, indicator, per_element_mask, MaskScope, RingVector, Sign};

struct RoundKeys {
    /// `(j, r_{i,j})` for every neighbor.
    pairwise: Vec<(UserId, Seed)>,
    /// `r_{i,u}` in `D` order.
    decryptor_seeds: Vec<Seed>,
    /// `k_{i,u}` in `D` order.
    enc_keys: Vec<SharedSecret>,
    decryptors: Vec<UserId>,
}

/// A training client.
pub struct Client {
    id: UserId,
    round: u64,
    params: Arc<ProtocolParams>,
    group: Arc<dyn Group>,
    keys: UserKeys,
    field: PrimeField,
    round_keys: Option<RoundKeys>,
}

impl Client {
    pub fn new(id: UserId, keys: UserKeys, params: Arc<ProtocolParams>, group: Arc<dyn Group>, round: u64) -> Self {
        let field = field_for_kappa(params.kappa).expect("kappa validated with the parameters");
        Self { id, round, params, group, keys, field, round_keys: None }
    }

    pub fn id(&self) -> UserId {
        self.id
    }

    pub fn keys(&self) -> &UserKeys {
        &self.keys
    }

    /// Setup phase: agrees keys with neighbors and decryptors and derives
    /// `r_{i,j} = PRF(s_{i,j}, τ)` and `r_{i,u} = PRF(s_{i,u}, τ)`.
    pub fn derive_round_keys(
        &mut self,
        pki: &Pki,
        neighbors: &[UserId],
        decryptors: &[UserId],
        cost: &mut Counters,
    ) -> Result<(), ProtocolError> {
        let kappa = self.params.kappa;
        let group = self.group.as_ref();
        let mut pairwise = Vec::with_capacity(neighbors.len());
        for &j in neighbors {
            let s = key_agree(group, self.keys.mask.private(), &pki.get(j)?.mask, kappa)?;
            pairwise.push((j, prf(&s, self.round)));
        }
        let mut decryptor_seeds = Vec::with_capacity(decryptors.len());
        let mut enc_keys = Vec::with_capacity(decryptors.len());
        for &u in decryptors {
            let pk = pki.get(u)?;
            let s = key_agree(group, self.keys.mask.private(), &pk.mask, kappa)?;
            decryptor_seeds.push(prf(&s, self.round));
            enc_keys.push(key_agree(group, self.keys.enc.private(), &pk.enc, kappa)?);
        }
        cost.key_agreements += (neighbors.len() + 2 * decryptors.len()) as u64;
        cost.prf_evals += (neighbors.len() + decryptors.len()) as u64;
        self.round_keys = Some(RoundKeys { pairwise, decryptor_seeds, enc_keys, decryptors: decryptors.to_vec() });
        Ok(())
    }

    /// `r_{i,u}` for decryptor position `u_pos` (known to colluders).
    pub fn decryptor_seed(&self, u_pos: usize) -> Option<&Seed> {
        self.round_keys.as_ref()?.decryptor_seeds.get(u_pos)
    }

    /// Report phase: masks `x` and secret-shares `r_i` and every `r_{i,v}`.
    pub fn report(
        &self,
        x: &RingVector,
        scope: &MaskScope,
        rng: &mut dyn RngCore,
        cost: &mut Counters,
    ) -> Result<(ClientReport, Seed), ProtocolError> {
        let rk = self.round_keys.as_ref().ok_or(ProtocolError::NotReady)?;
        let p = &self.params;
        let d = rk.decryptors.len();
        let k = x.len();

        let b = indicator(x, scope);
        let inner = per_element_mask(x, &b, &rk.decryptor_seeds, true)?;
        let individual = Seed::random(p.kappa, rng)?;
        let pw: Vec<(Seed, Sign)> =
            rk.pairwise.iter().map(|(j, s)| (s.clone(), Sign::for_pair(self.id, *j))).collect();
        let masked = flamingo_mask(&inner, &individual, &pw);
        let stream_elems = (k * (1 + pw.len()) + d * b.len()) as u64;
        cost.prg_elements += stream_elems;
        cost.ring_ops += stream_elems;

        let mut individual_shares = Vec::with_capacity(d);
        let shares = ss_share(&self.field, &individual, p.ell, d, rng)?;
        for (u_pos, sh) in shares.iter().enumerate() {
            let holder = rk.decryptors[u_pos];
            let (nonce, aad) = share_context(self.round, self.id, holder, ShareLabel::Individual);
            individual_shares.push(sym_encrypt(&rk.enc_keys[u_pos], &sh.encode(&self.field), &nonce, &aad));
        }
        let mut decryptor_shares = Vec::with_capacity(d * d);
        for (v_pos, seed) in rk.decryptor_seeds.iter().enumerate() {
            let v = rk.decryptors[v_pos];
            let shares = ss_share(&self.field, seed, p.ell, d, rng)?;
            for (u_pos, sh) in shares.iter().enumerate() {
                let holder = rk.decryptors[u_pos];
                let (nonce, aad) = share_context(self.round, self.id, holder, ShareLabel::DecryptorSeed(v));
                decryptor_shares.push(sym_encrypt(&rk.enc_keys[u_pos], &sh.encode(&self.field), &nonce, &aad));
            }
        }
        cost.share_ops += ((1 + d) * d * d) as u64;
        cost.sym_ops += (d + d * d) as u64;

        Ok((ClientReport { masked, indicator: b, individual_shares, decryptor_shares }, individual))
    }
}
