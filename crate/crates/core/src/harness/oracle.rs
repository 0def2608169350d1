use crate::params::ProtocolParams;
use crate::ring::{MaskScope, RevealedAggregate, RingVector};

/// Plaintext reference computed directly from the client updates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub sums: RingVector,
    pub scope: Vec<u32>,
    /// `|C[k]|` per scope position.
    pub counts: Vec<usize>,
    /// Contributors outside the colluding set, per scope position.
    pub honest_counts: Vec<usize>,
    pub t_prime: usize,
}

impl OracleResult {
    /// Expected output at `k`: the plaintext sum, or `None` (⊥).
    pub fn expected(&self, k: usize) -> Option<u64> {
        match self.scope.binary_search(&(k as u32)) {
            Ok(p) if self.counts[p] < self.t_prime => None,
            _ => Some(self.sums.get(k)),
        }
    }

    pub fn expected_revealed_in_scope(&self) -> usize {
        self.counts.iter().filter(|&&c| c >= self.t_prime).count()
    }

    /// Indices whose value or ⊥ pattern differs from the oracle.
    pub fn mismatches(&self, out: &RevealedAggregate) -> Vec<u32> {
        (0..self.sums.len()).filter(|&k| out.get(k) != self.expected(k)).map(|k| k as u32).collect()
    }

    pub fn matches(&self, out: &RevealedAggregate) -> bool {
        out.len() == self.sums.len() && self.mismatches(out).is_empty()
    }
}

pub fn compute_oracle(
    updates: &[RingVector],
    scope: &MaskScope,
    params: &ProtocolParams,
    colluding_clients: &[usize],
) -> OracleResult {
    let ring = params.ring();
    let mut sums = vec![0u64; params.vector_len];
    for x in updates {
        for (s, &v) in sums.iter_mut().zip(x.elems()) {
            *s = ring.add(*s, v);
        }
    }
    let mut counts = vec![0; scope.len()];
    let mut honest_counts = vec![0; scope.len()];
    for (i, x) in updates.iter().enumerate() {
        let honest = !colluding_clients.contains(&i);
        for (p, &k) in scope.indices().iter().enumerate() {
            if x.get(k as usize) != 0 {
                counts[p] += 1;
                honest_counts[p] += honest as usize;
            }
        }
    }
    OracleResult {
        sums: RingVector::from_elems(ring, sums),
        scope: scope.indices().to_vec(),
        counts,
        honest_counts,
        t_prime: params.t_prime,
    }
}
