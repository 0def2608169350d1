use serde::{Deserialize, Serialize};

use super::{RingError, RingVector};

/// The protected index set `K′ ⊆ K` to which per-element masking applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskScope {
    vector_len: usize,
    indices: Vec<u32>,
}

impl MaskScope {
    pub fn new(vector_len: usize, indices: Vec<u32>) -> Result<Self, RingError> {
        check_ascending(&indices)?;
        if let Some(&last) = indices.last() {
            if last as usize >= vector_len {
                return Err(RingError::IndexOutOfRange { index: last as usize, len: vector_len });
            }
        }
        Ok(Self { vector_len, indices })
    }

    /// The trailing `protected` indices, mirroring a final dense layer.
    pub fn last(vector_len: usize, protected: usize) -> Self {
        let protected = protected.min(vector_len);
        let start = (vector_len - protected) as u32;
        Self { vector_len, indices: (start..vector_len as u32).collect() }
    }

    /// The whole vector.
    pub fn full(vector_len: usize) -> Self {
        Self::last(vector_len, vector_len)
    }

    pub fn vector_len(&self) -> usize {
        self.vector_len
    }

    /// `|K′|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Position of global index `k` inside the scope.
    pub fn position(&self, k: u32) -> Option<usize> {
        let first = *self.indices.first()?;
        // Contiguous scopes (the common case) resolve without a search.
        if k >= first {
            let off = (k - first) as usize;
            if self.indices.get(off) == Some(&k) {
                return Some(off);
            }
        }
        self.indices.binary_search(&k).ok()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.position(k).is_some()
    }
}

/// Sorted indices `B_i` of the non-zero, in-scope elements of one update.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndicatorSet {
    indices: Vec<u32>,
}

impl IndicatorSet {
    pub fn new(indices: Vec<u32>) -> Result<Self, RingError> {
        check_ascending(&indices)?;
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    pub fn check_within(&self, scope: &MaskScope) -> Result<(), RingError> {
        match self.indices.iter().find(|&&k| !scope.contains(k)) {
            Some(&k) => Err(RingError::OutsideScope(k)),
            None => Ok(()),
        }
    }

    /// LEB128 count followed by LEB128 gaps between consecutive indices.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.indices.len() + 4);
        leb128::write::unsigned(&mut out, self.indices.len() as u64).unwrap();
        let mut prev = 0u32;
        for (n, &k) in self.indices.iter().enumerate() {
            let gap = if n == 0 { k } else { k - prev - 1 };
            leb128::write::unsigned(&mut out, gap as u64).unwrap();
            prev = k;
        }
        out
    }

    /// Decodes from the front of `bytes`, returning the set and the bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize), RingError> {
        let mut cur = bytes;
        let read = |cur: &mut &[u8]| {
            leb128::read::unsigned(cur).map_err(|_| RingError::Decode("bad varint in indicator set"))
        };
        let count = read(&mut cur)?;
        if count > bytes.len() as u64 {
            return Err(RingError::Decode("indicator count exceeds input"));
        }
        let mut indices = Vec::with_capacity(count as usize);
        let mut next = 0u64;
        for _ in 0..count {
            let k = next + read(&mut cur)?;
            if k > u32::MAX as u64 {
                return Err(RingError::Decode("indicator index overflows u32"));
            }
            indices.push(k as u32);
            next = k + 1;
        }
        Ok((Self { indices }, bytes.len() - cur.len()))
    }
}

/// `{k ∈ K′ : x[k] ≠ 0}`.
pub fn indicator(x: &RingVector, scope: &MaskScope) -> IndicatorSet {
    let indices = scope
        .indices()
        .iter()
        .copied()
        .filter(|&k| (k as usize) < x.len() && x.get(k as usize) != 0)
        .collect();
    IndicatorSet { indices }
}

fn check_ascending(indices: &[u32]) -> Result<(), RingError> {
    if indices.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(RingError::NotAscending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Ring;
    use proptest::prelude::*;

    fn r32(v: Vec<u64>) -> RingVector {
        RingVector::from_elems(Ring::new(32).unwrap(), v)
    }

    #[test]
    fn indicator_examples() {
        let minus_one = (1u64 << 32) - 1;
        let x = r32(vec![0, 3, 0, minus_one]);
        assert_eq!(indicator(&x, &MaskScope::full(4)).indices(), &[1, 3]);
        assert!(indicator(&r32(vec![0; 4]), &MaskScope::full(4)).is_empty());
        let scope = MaskScope::new(4, vec![0, 1]).unwrap();
        assert!(indicator(&r32(vec![0, 0, 9, 9]), &scope).is_empty());
    }

    #[test]
    fn scope_positions() {
        let s = MaskScope::last(10, 3);
        assert_eq!(s.indices(), &[7, 8, 9]);
        assert_eq!(s.position(8), Some(1));
        assert_eq!(s.position(6), None);
        let sparse = MaskScope::new(10, vec![1, 4, 5]).unwrap();
        assert_eq!(sparse.position(4), Some(1));
        assert_eq!(sparse.position(2), None);
        assert!(MaskScope::new(3, vec![2, 1]).is_err());
        assert!(MaskScope::new(3, vec![3]).is_err());
    }

    #[test]
    fn unsorted_indicator_rejected() {
        assert_eq!(IndicatorSet::new(vec![3, 3]), Err(RingError::NotAscending));
    }

    #[test]
    fn dense_runs_cost_one_byte_each() {
        let set = IndicatorSet::new((1000..1100).collect()).unwrap();
        // count (1 byte) + first index (2 bytes) + 99 zero gaps.
        assert_eq!(set.encode().len(), 1 + 2 + 99);
    }

    proptest! {
        #[test]
        fn encoding_round_trips(mut v in proptest::collection::vec(any::<u32>(), 0..200)) {
            v.sort_unstable();
            v.dedup();
            let set = IndicatorSet::new(v).unwrap();
            let mut wire = set.encode();
            wire.extend_from_slice(b"tail");
            let (back, used) = IndicatorSet::decode(&wire).unwrap();
            prop_assert_eq!(back, set);
            prop_assert_eq!(used, wire.len() - 4);
        }

        #[test]
        fn indicator_is_subset_of_scope(x in proptest::collection::vec(0u64..3, 64), start in 0usize..64) {
            let scope = MaskScope::last(64, 64 - start);
            let b = indicator(&r32(x.clone()), &scope);
            b.check_within(&scope).unwrap();
            for k in scope.indices() {
                prop_assert_eq!(b.contains(*k), x[*k as usize] != 0);
            }
        }
    }
}
