use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProtocolError, UserId};
use crate::crypto::{Group, GroupElement, KeyPair};

/// Public randomness `R` shared by all parties (a beacon stand-in).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicRandomness(#[serde(with = "hex_bytes")] pub [u8; 32]);

mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(D::Error::custom)?;
        v.try_into().map_err(|_| D::Error::custom("public randomness must be 32 bytes"))
    }
}

impl PublicRandomness {
    pub fn from_u64(v: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"persec/beacon");
        h.update(v.to_be_bytes());
        Self(h.finalize().into())
    }

    /// Domain-separated hash of `(R, purpose, τ, data)`.
    pub fn hash(&self, purpose: &str, round: u64, data: &[u8]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"persec/R");
        h.update(self.0);
        h.update((purpose.len() as u32).to_be_bytes());
        h.update(purpose.as_bytes());
        h.update(round.to_be_bytes());
        h.update(data);
        h.finalize().into()
    }
}

/// The two long-term key pairs of a user: one for mask seeds, one for
/// share encryption.
#[derive(Clone, Debug)]
pub struct UserKeys {
    pub mask: KeyPair,
    pub enc: KeyPair,
}

impl UserKeys {
    pub fn generate(group: &dyn Group, rng: &mut dyn RngCore) -> Self {
        Self { mask: group.generate(rng), enc: group.generate(rng) }
    }

    pub fn public(&self) -> PublicKeys {
        PublicKeys { mask: self.mask.public().clone(), enc: self.enc.public().clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKeys {
    pub mask: GroupElement,
    pub enc: GroupElement,
}

/// Trusted public-key directory.
#[derive(Clone, Debug, Default)]
pub struct Pki {
    keys: BTreeMap<UserId, PublicKeys>,
}

impl Pki {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: UserId, keys: PublicKeys) -> Result<(), ProtocolError> {
        if self.keys.insert(id, keys).is_some() {
            return Err(ProtocolError::DuplicateUser(id));
        }
        Ok(())
    }

    pub fn get(&self, id: UserId) -> Result<&PublicKeys, ProtocolError> {
        self.keys.get(&id).ok_or(ProtocolError::MissingPublicKey(id))
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Role assignment for one round; both lists ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub decryptors: Vec<UserId>,
    pub clients: Vec<UserId>,
}

impl Selection {
    /// Shamir evaluation point of a decryptor (1-based position in `D`).
    pub fn point_of(&self, decryptor: UserId) -> Option<u32> {
        self.decryptors.binary_search(&decryptor).ok().map(|p| p as u32 + 1)
    }
}

fn ranked(users: &[UserId], r: &PublicRandomness, purpose: &str, round: u64) -> Vec<UserId> {
    let mut keyed: Vec<([u8; 32], UserId)> =
        users.iter().map(|&u| (r.hash(purpose, round, &u.to_be_bytes()), u)).collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, u)| u).collect()
}

/// Picks `decryptors` users as `D` by ranking hashes of `R`, then
/// `clients` of the remaining users as `C` for round `round`.
pub fn select_roles(
    users: &[UserId],
    r: &PublicRandomness,
    decryptors: usize,
    clients: usize,
    round: u64,
) -> Result<Selection, ProtocolError> {
    let mut seen = BTreeSet::new();
    for &u in users {
        if u == super::SERVER_ID {
            return Err(ProtocolError::ReservedId(u));
        }
        if !seen.insert(u) {
            return Err(ProtocolError::DuplicateUser(u));
        }
    }
    if decryptors + clients > users.len() {
        return Err(ProtocolError::NotEnoughUsers { have: users.len(), need: decryptors + clients });
    }
    let mut d: Vec<UserId> = ranked(users, r, "decryptors", 0).into_iter().take(decryptors).collect();
    d.sort_unstable();
    let rest: Vec<UserId> = users.iter().copied().filter(|u| d.binary_search(u).is_err()).collect();
    let mut c: Vec<UserId> = ranked(&rest, r, "clients", round).into_iter().take(clients).collect();
    c.sort_unstable();
    Ok(Selection { decryptors: d, clients: c })
}

/// Symmetric neighbor graph: each client keeps the `a` peers whose unordered
/// pair hash is lowest, then every edge is mirrored.
pub fn neighbor_graph(
    r: &PublicRandomness,
    round: u64,
    clients: &[UserId],
    a: usize,
) -> BTreeMap<UserId, Vec<UserId>> {
    let pair_hash = |i: UserId, j: UserId| {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let mut data = [0u8; 8];
        data[..4].copy_from_slice(&lo.to_be_bytes());
        data[4..].copy_from_slice(&hi.to_be_bytes());
        r.hash("neighbors", round, &data)
    };
    let mut graph: BTreeMap<UserId, BTreeSet<UserId>> = clients.iter().map(|&c| (c, BTreeSet::new())).collect();
    for &i in clients {
        let mut peers: Vec<([u8; 32], UserId)> =
            clients.iter().filter(|&&j| j != i).map(|&j| (pair_hash(i, j), j)).collect();
        peers.sort_unstable();
        for &(_, j) in peers.iter().take(a) {
            graph.get_mut(&i).unwrap().insert(j);
            graph.get_mut(&j).unwrap().insert(i);
        }
    }
    graph.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
}
