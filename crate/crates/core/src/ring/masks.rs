use serde::{Deserialize, Serialize};

use super::{IndicatorSet, MaskScope, Ring, RingError, RingVector};
use crate::crypto::{Prg, Seed};

/// Sign of a pairwise mask: `+` for the lower id of the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn for_pair(own: u32, peer: u32) -> Sign {
        if own < peer {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// `±PRG(seed)` as a ring vector of length `len`.
pub fn pairwise_mask(seed: &Seed, sign: Sign, ring: Ring, len: usize) -> RingVector {
    let mut out = RingVector::zeros(ring, len);
    add_stream(out.elems_mut(), seed, sign, ring);
    out
}

fn add_stream(acc: &mut [u64], seed: &Seed, sign: Sign, ring: Ring) {
    const CHUNK: usize = 4096;
    let mut prg = Prg::new(seed, acc.len());
    let mut buf = [0u64; CHUNK];
    let mut start = 0;
    while start < acc.len() {
        let n = CHUNK.min(acc.len() - start);
        prg.fill(start, &mut buf[..n]).expect("chunk lies inside the stream");
        for (a, &p) in acc[start..start + n].iter_mut().zip(&buf[..n]) {
            *a = match sign {
                Sign::Plus => ring.add(*a, p),
                Sign::Minus => ring.sub(*a, p),
            };
        }
        start += n;
    }
}

/// `x + PRG(r_i) + Σ_j ±PRG(r_{i,j})` over the whole vector.
pub fn flamingo_mask(x: &RingVector, individual: &Seed, pairwise: &[(Seed, Sign)]) -> RingVector {
    let ring = x.ring();
    let mut out = x.clone();
    add_stream(out.elems_mut(), individual, Sign::Plus, ring);
    for (seed, sign) in pairwise {
        add_stream(out.elems_mut(), seed, *sign, ring);
    }
    out
}

/// `x + b ⊙ Σ_u PRG(r_{i,u})`: masks only the flagged elements.
///
/// In strict mode a flagged index holding zero is rejected.
pub fn per_element_mask(
    x: &RingVector,
    b: &IndicatorSet,
    decryptor_seeds: &[Seed],
    strict: bool,
) -> Result<RingVector, RingError> {
    let ring = x.ring();
    let len = x.len();
    if let Some(&k) = b.indices().last() {
        if k as usize >= len {
            return Err(RingError::IndexOutOfRange { index: k as usize, len });
        }
    }
    if strict {
        if let Some(&k) = b.indices().iter().find(|&&k| x.get(k as usize) == 0) {
            return Err(RingError::InconsistentIndicator(k));
        }
    }
    let mut out = x.clone();
    let elems = out.elems_mut();
    for seed in decryptor_seeds {
        let mut prg = Prg::new(seed, len);
        for &k in b.indices() {
            let k = k as usize;
            elems[k] = ring.add(elems[k], prg.element(k)?);
        }
    }
    Ok(out)
}

/// Per-index contributor sets `C[k]` over the scope, plus the transpose.
#[derive(Clone, Debug)]
pub struct ContributorIndex {
    scope: MaskScope,
    offsets: Vec<usize>,
    contributors: Vec<u32>,
    by_client: Vec<Vec<u32>>,
}

impl ContributorIndex {
    /// Client `n` of the result is `indicators[n]`.
    pub fn new(scope: &MaskScope, indicators: &[&IndicatorSet]) -> Result<Self, RingError> {
        let mut counts = vec![0usize; scope.len()];
        let mut by_client = Vec::with_capacity(indicators.len());
        for b in indicators {
            let mut positions = Vec::with_capacity(b.len());
            for &k in b.indices() {
                let p = scope.position(k).ok_or(RingError::OutsideScope(k))?;
                counts[p] += 1;
                positions.push(p as u32);
            }
            by_client.push(positions);
        }
        let mut offsets = Vec::with_capacity(scope.len() + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut fill = offsets.clone();
        let mut contributors = vec![0u32; *offsets.last().unwrap()];
        for (n, positions) in by_client.iter().enumerate() {
            for &p in positions {
                contributors[fill[p as usize]] = n as u32;
                fill[p as usize] += 1;
            }
        }
        Ok(Self { scope: scope.clone(), offsets, contributors, by_client })
    }

    pub fn scope(&self) -> &MaskScope {
        &self.scope
    }

    pub fn clients(&self) -> usize {
        self.by_client.len()
    }

    /// `|C[k]|` for scope position `p`.
    pub fn count(&self, p: usize) -> usize {
        self.offsets[p + 1] - self.offsets[p]
    }

    pub fn contributors(&self, p: usize) -> &[u32] {
        &self.contributors[self.offsets[p]..self.offsets[p + 1]]
    }

    /// Scope positions flagged by client `n`.
    pub fn positions_of(&self, n: usize) -> &[u32] {
        &self.by_client[n]
    }

    pub fn above_threshold(&self, p: usize, t_prime: usize) -> bool {
        self.count(p) >= t_prime
    }

    /// Number of scope positions with `|C[k]| ≥ t′`.
    pub fn revealed_positions(&self, t_prime: usize) -> usize {
        (0..self.scope.len()).filter(|&p| self.above_threshold(p, t_prime)).count()
    }

    /// PRG evaluations one decryptor spends: `Σ |C[k]|` over above-threshold positions.
    pub fn mask_work(&self, t_prime: usize) -> usize {
        (0..self.scope.len()).map(|p| self.count(p)).filter(|&c| c >= t_prime).sum()
    }
}

/// Optional ring values over the scope positions; `None` is ⊥.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementMaskVector {
    ring: Ring,
    values: Vec<u64>,
    present: Vec<bool>,
}

impl ElementMaskVector {
    pub fn absent(ring: Ring, len: usize) -> Self {
        Self { ring, values: vec![0; len], present: vec![false; len] }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, p: usize) -> Option<u64> {
        self.present[p].then(|| self.values[p])
    }

    pub fn set(&mut self, p: usize, value: Option<u64>) {
        self.present[p] = value.is_some();
        self.values[p] = self.ring.reduce(value.unwrap_or(0));
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    /// Elementwise sum; ⊥ wherever either side is ⊥.
    pub fn combine(&self, other: &Self) -> Result<Self, RingError> {
        if self.len() != other.len() {
            return Err(RingError::LengthMismatch { expected: self.len(), got: other.len() });
        }
        let mut out = self.clone();
        for p in 0..self.len() {
            out.present[p] = self.present[p] && other.present[p];
            out.values[p] = if out.present[p] { self.ring.add(self.values[p], other.values[p]) } else { 0 };
        }
        Ok(out)
    }

    /// `len: u32 LE || presence bitmap || present values (w/8 bytes LE each)`.
    pub fn encode(&self) -> Vec<u8> {
        let n = self.ring.bytes();
        let mut out = Vec::with_capacity(4 + self.len().div_ceil(8) + self.present_count() * n);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        let mut bitmap = vec![0u8; self.len().div_ceil(8)];
        for (p, _) in self.present.iter().enumerate().filter(|(_, &b)| b) {
            bitmap[p / 8] |= 1 << (p % 8);
        }
        out.extend_from_slice(&bitmap);
        for (v, _) in self.values.iter().zip(&self.present).filter(|(_, &b)| b) {
            out.extend_from_slice(&v.to_le_bytes()[..n]);
        }
        out
    }

    pub fn decode(ring: Ring, bytes: &[u8]) -> Result<Self, RingError> {
        let bad = RingError::Decode("truncated element mask vector");
        let len = u32::from_le_bytes(bytes.get(..4).ok_or(bad.clone())?.try_into().unwrap()) as usize;
        let bitmap = bytes.get(4..4 + len.div_ceil(8)).ok_or(bad.clone())?;
        let mut out = Self::absent(ring, len);
        let n = ring.bytes();
        let mut cur = 4 + bitmap.len();
        for p in 0..len {
            if bitmap[p / 8] >> (p % 8) & 1 == 1 {
                let chunk = bytes.get(cur..cur + n).ok_or(bad.clone())?;
                let mut buf = [0u8; 8];
                buf[..n].copy_from_slice(chunk);
                out.set(p, Some(u64::from_le_bytes(buf)));
                cur += n;
            }
        }
        if cur != bytes.len() {
            return Err(RingError::Decode("trailing bytes after element mask vector"));
        }
        Ok(out)
    }
}

/// `emk_u[k] = Σ_{i∈C[k]} PRG(r_{i,u})[k]` if `|C[k]| ≥ t′`, else ⊥.
///
/// `seeds[n]` is `r_{n,u}` for client `n` of the index.
pub fn element_masks(
    index: &ContributorIndex,
    seeds: &[Seed],
    t_prime: usize,
    ring: Ring,
) -> Result<ElementMaskVector, RingError> {
    if seeds.len() != index.clients() {
        return Err(RingError::LengthMismatch { expected: index.clients(), got: seeds.len() });
    }
    let scope = index.scope();
    let mut out = ElementMaskVector::absent(ring, scope.len());
    for p in 0..scope.len() {
        if index.above_threshold(p, t_prime) {
            out.set(p, Some(0));
        }
    }
    for (n, seed) in seeds.iter().enumerate() {
        let mut prg = Prg::new(seed, scope.vector_len());
        for &p in index.positions_of(n) {
            let p = p as usize;
            if out.present[p] {
                let k = scope.indices()[p] as usize;
                out.values[p] = ring.add(out.values[p], prg.element(k)?);
            }
        }
    }
    Ok(out)
}

/// `Σ_{v∈V} Σ_i b_i ⊙ PRG(r_{i,v})` at above-threshold positions, from
/// reconstructed seeds; `seeds_by_dropped[v][n]` is `r_{n,v}`.
pub fn dropout_masks(
    index: &ContributorIndex,
    seeds_by_dropped: &[Vec<Seed>],
    t_prime: usize,
    ring: Ring,
) -> Result<ElementMaskVector, RingError> {
    let mut acc: Option<ElementMaskVector> = None;
    for seeds in seeds_by_dropped {
        let emk = element_masks(index, seeds, t_prime, ring)?;
        acc = Some(match acc {
            None => emk,
            Some(a) => a.combine(&emk)?,
        });
    }
    Ok(acc.unwrap_or_else(|| {
        let mut empty = ElementMaskVector::absent(ring, index.scope().len());
        for p in 0..index.scope().len() {
            if index.above_threshold(p, t_prime) {
                empty.set(p, Some(0));
            }
        }
        empty
    }))
}

/// Aggregate values over the whole vector with ⊥ at withheld indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedAggregate {
    ring: Ring,
    values: Vec<u64>,
    present: Vec<bool>,
}

impl RevealedAggregate {
    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<u64> {
        self.present[k].then(|| self.values[k])
    }

    pub fn is_revealed(&self, k: usize) -> bool {
        self.present[k]
    }

    pub fn revealed_count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

pub struct UnmaskInputs<'a> {
    pub scope: &'a MaskScope,
    /// Reconstructed `r_i` of every aggregated client.
    pub individual_seeds: &'a [Seed],
    /// Element masks returned by the responding decryptors.
    pub emks: &'a [ElementMaskVector],
    /// Recovered masks of the decryptors that did not respond.
    pub dropout_mask: Option<&'a ElementMaskVector>,
    pub missing_decryptors: usize,
}

/// `y = agg − Σ PRG(r_i) − Σ emk_u − Σ recovered`, revealing a scope index
/// only when every mask term is present there.
pub fn unmask(aggregate: &RingVector, inputs: UnmaskInputs<'_>) -> Result<RevealedAggregate, RingError> {
    let ring = aggregate.ring();
    let scope = inputs.scope;
    if scope.vector_len() != aggregate.len() {
        return Err(RingError::LengthMismatch { expected: scope.vector_len(), got: aggregate.len() });
    }
    if inputs.missing_decryptors > 0 && inputs.dropout_mask.is_none() {
        return Err(RingError::IncompleteMasks(inputs.missing_decryptors));
    }
    let mut emks: Vec<&ElementMaskVector> = inputs.emks.iter().collect();
    if inputs.missing_decryptors > 0 {
        emks.extend(inputs.dropout_mask);
    }
    for e in &emks {
        if e.len() != scope.len() {
            return Err(RingError::LengthMismatch { expected: scope.len(), got: e.len() });
        }
    }

    let mut y = aggregate.clone();
    for seed in inputs.individual_seeds {
        add_stream(y.elems_mut(), seed, Sign::Minus, ring);
    }
    let mut present = vec![true; y.len()];
    let values = y.elems_mut();
    for (p, &k) in scope.indices().iter().enumerate() {
        let k = k as usize;
        let mut total = 0u64;
        let mut all = true;
        for e in &emks {
            match e.get(p) {
                Some(v) => total = ring.add(total, v),
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            values[k] = ring.sub(values[k], total);
        } else {
            values[k] = 0;
            present[k] = false;
        }
    }
    Ok(RevealedAggregate { ring, values: y.elems().to_vec(), present })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::prg_element;
    use crate::ring::indicator;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const K: usize = 48;

    fn ring() -> Ring {
        Ring::new(32).unwrap()
    }

    fn seed(rng: &mut ChaCha20Rng) -> Seed {
        Seed::random(128, rng).unwrap()
    }

    /// A full masking round computed with the kernels; the oracle is the
    /// plaintext ring sum.
    struct Fixture {
        xs: Vec<RingVector>,
        scope: MaskScope,
        individual: Vec<Seed>,
        pair: Vec<Vec<Seed>>,
        // shared[i][u] = r_{i,u}
        shared: Vec<Vec<Seed>>,
        indicators: Vec<IndicatorSet>,
    }

    impl Fixture {
        fn new(rng_seed: u64, clients: usize, decryptors: usize, density: f64, scope: MaskScope) -> Self {
            let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
            let xs: Vec<RingVector> = (0..clients)
                .map(|_| {
                    let v = (0..K)
                        .map(|_| if rng.gen_bool(density) { rng.gen_range(1..1000) } else { 0 })
                        .collect();
                    RingVector::from_elems(ring(), v)
                })
                .collect();
            let individual = (0..clients).map(|_| seed(&mut rng)).collect();
            let mut pair: Vec<Vec<Seed>> = vec![vec![]; clients];
            for i in 0..clients {
                for j in 0..clients {
                    let s = if j < i { pair[j][i].clone() } else { seed(&mut rng) };
                    pair[i].push(s);
                }
            }
            let shared = (0..clients).map(|_| (0..decryptors).map(|_| seed(&mut rng)).collect()).collect();
            let indicators = xs.iter().map(|x| indicator(x, &scope)).collect();
            Self { xs, scope, individual, pair, shared, indicators }
        }

        fn masked_sum(&self) -> RingVector {
            let n = self.xs.len();
            let mut agg = RingVector::zeros(ring(), K);
            for i in 0..n {
                let pe = per_element_mask(&self.xs[i], &self.indicators[i], &self.shared[i], true).unwrap();
                let pw: Vec<(Seed, Sign)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (self.pair[i][j].clone(), Sign::for_pair(i as u32, j as u32)))
                    .collect();
                agg.add_assign(&flamingo_mask(&pe, &self.individual[i], &pw)).unwrap();
            }
            agg
        }

        fn index(&self) -> ContributorIndex {
            let refs: Vec<&IndicatorSet> = self.indicators.iter().collect();
            ContributorIndex::new(&self.scope, &refs).unwrap()
        }

        fn seeds_for(&self, u: usize) -> Vec<Seed> {
            self.shared.iter().map(|s| s[u].clone()).collect()
        }

        fn plain_sum(&self) -> RingVector {
            let mut s = RingVector::zeros(ring(), K);
            for x in &self.xs {
                s.add_assign(x).unwrap();
            }
            s
        }

        fn run(&self, t_prime: usize, dropped: &[usize]) -> RevealedAggregate {
            let index = self.index();
            let d = self.shared[0].len();
            let emks: Vec<ElementMaskVector> = (0..d)
                .filter(|u| !dropped.contains(u))
                .map(|u| element_masks(&index, &self.seeds_for(u), t_prime, ring()).unwrap())
                .collect();
            let rec: Vec<Vec<Seed>> = dropped.iter().map(|&v| self.seeds_for(v)).collect();
            let dm = dropout_masks(&index, &rec, t_prime, ring()).unwrap();
            unmask(
                &self.masked_sum(),
                UnmaskInputs {
                    scope: &self.scope,
                    individual_seeds: &self.individual,
                    emks: &emks,
                    dropout_mask: (!dropped.is_empty()).then_some(&dm),
                    missing_decryptors: dropped.len(),
                },
            )
            .unwrap()
        }
    }

    #[test]
    fn pairwise_masks_cancel() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = seed(&mut rng);
        let mut a = pairwise_mask(&s, Sign::for_pair(3, 9), ring(), 100);
        a.add_assign(&pairwise_mask(&s, Sign::for_pair(9, 3), ring(), 100)).unwrap();
        assert_eq!(a, RingVector::zeros(ring(), 100));
    }

    #[test]
    fn zero_input_yields_individual_stream() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = seed(&mut rng);
        let out = flamingo_mask(&RingVector::zeros(ring(), 20), &s, &[]);
        for k in 0..20 {
            assert_eq!(out.get(k), ring().reduce(prg_element(&s, k, 20).unwrap()));
        }
    }

    #[test]
    fn four_clients_flamingo_only() {
        let f = Fixture::new(3, 4, 1, 0.5, MaskScope::new(K, vec![]).unwrap());
        let mut agg = f.masked_sum();
        for s in &f.individual {
            agg.sub_assign(&pairwise_mask(s, Sign::Plus, ring(), K)).unwrap();
        }
        assert_eq!(agg, f.plain_sum());
    }

    #[test]
    fn per_element_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let s = seed(&mut rng);
        let x = RingVector::from_elems(ring(), vec![0, 5, 0, 7]);
        assert_eq!(per_element_mask(&x, &IndicatorSet::empty(), &[s.clone()], true).unwrap(), x);
        let b = IndicatorSet::new(vec![3]).unwrap();
        let out = per_element_mask(&x, &b, &[s.clone()], true).unwrap();
        assert_eq!(out.get(3), ring().add(7, prg_element(&s, 3, 4).unwrap()));
        assert_eq!(&out.elems()[..3], &x.elems()[..3]);
        let bad = IndicatorSet::new(vec![2]).unwrap();
        assert_eq!(per_element_mask(&x, &bad, &[s.clone()], true), Err(RingError::InconsistentIndicator(2)));
        assert!(per_element_mask(&x, &bad, &[s], false).is_ok());
    }

    #[test]
    fn element_mask_threshold_and_singleton() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let scope = MaskScope::full(4);
        let b0 = IndicatorSet::new(vec![1, 2]).unwrap();
        let b1 = IndicatorSet::new(vec![2]).unwrap();
        let idx = ContributorIndex::new(&scope, &[&b0, &b1]).unwrap();
        let seeds = vec![seed(&mut rng), seed(&mut rng)];
        let emk = element_masks(&idx, &seeds, 2, ring()).unwrap();
        assert_eq!(emk.get(1), None, "|C[1]| = t' - 1");
        assert_eq!(emk.get(0), None);
        let expect = ring().add(prg_element(&seeds[0], 2, 4).unwrap(), prg_element(&seeds[1], 2, 4).unwrap());
        assert_eq!(emk.get(2), Some(expect));
        let emk1 = element_masks(&idx, &seeds, 1, ring()).unwrap();
        assert_eq!(emk1.get(1), Some(ring().reduce(prg_element(&seeds[0], 1, 4).unwrap())));
        assert_eq!(idx.mask_work(1), 3);
    }

    #[test]
    fn emks_sum_to_total_client_masks() {
        let f = Fixture::new(6, 5, 3, 0.6, MaskScope::full(K));
        let idx = f.index();
        let mut total = ElementMaskVector::absent(ring(), K);
        for p in 0..K {
            total.set(p, Some(0));
        }
        for u in 0..3 {
            total = total.combine(&element_masks(&idx, &f.seeds_for(u), 1, ring()).unwrap()).unwrap();
        }
        for k in 0..K {
            let mut expect = 0u64;
            for i in 0..5 {
                let masked = per_element_mask(&f.xs[i], &f.indicators[i], &f.shared[i], true).unwrap();
                expect = ring().add(expect, ring().sub(masked.get(k), f.xs[i].get(k)));
            }
            assert_eq!(total.get(k).is_some(), idx.count(k) >= 1);
            assert_eq!(total.get(k).unwrap_or(0), expect);
        }
    }

    #[test]
    fn all_below_threshold() {
        let scope = MaskScope::last(K, 16);
        let f = Fixture::new(7, 3, 2, 0.3, scope.clone());
        let out = f.run(4, &[]);
        let plain = f.plain_sum();
        for k in 0..K {
            if scope.contains(k as u32) {
                assert_eq!(out.get(k), None);
            } else {
                assert_eq!(out.get(k), Some(plain.get(k)));
            }
        }
    }

    #[test]
    fn three_clients_two_decryptors_threshold_met() {
        let f = Fixture::new(8, 3, 2, 1.0, MaskScope::full(K));
        let out = f.run(3, &[]);
        assert_eq!(out.revealed_count(), K);
        assert_eq!(out.values(), f.plain_sum().elems());
    }

    #[test]
    fn dropout_recovery_matches_no_dropout() {
        let f = Fixture::new(9, 6, 4, 0.5, MaskScope::last(K, 32));
        assert_eq!(f.run(2, &[]), f.run(2, &[1]));
        assert_eq!(f.run(2, &[]), f.run(2, &[0, 3]));
    }

    #[test]
    fn missing_emk_without_recovery_is_an_error() {
        let f = Fixture::new(10, 2, 2, 0.5, MaskScope::full(K));
        let err = unmask(
            &f.masked_sum(),
            UnmaskInputs {
                scope: &f.scope,
                individual_seeds: &f.individual,
                emks: &[],
                dropout_mask: None,
                missing_decryptors: 2,
            },
        );
        assert_eq!(err, Err(RingError::IncompleteMasks(2)));
    }

    #[test]
    fn element_mask_encoding_round_trips() {
        let mut e = ElementMaskVector::absent(ring(), 11);
        e.set(0, Some(7));
        e.set(9, Some(u32::MAX as u64));
        let wire = e.encode();
        assert_eq!(wire.len(), 4 + 2 + 2 * 4);
        assert_eq!(ElementMaskVector::decode(ring(), &wire).unwrap(), e);
        assert!(ElementMaskVector::decode(ring(), &wire[..wire.len() - 1]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn honest_rounds_cancel_exactly(rs in any::<u64>(), n in 2usize..6, d in 1usize..4,
                                        density in 0.1f64..0.9, t_prime in 1usize..4, kp in 0usize..=K) {
            let f = Fixture::new(rs, n, d, density, MaskScope::last(K, kp));
            let out = f.run(t_prime, &[]);
            let plain = f.plain_sum();
            let idx = f.index();
            for k in 0..K {
                match f.scope.position(k as u32) {
                    Some(p) => {
                        prop_assert_eq!(out.is_revealed(k), idx.count(p) >= t_prime);
                        if out.is_revealed(k) {
                            prop_assert_eq!(out.get(k), Some(plain.get(k)));
                        }
                    }
                    None => prop_assert_eq!(out.get(k), Some(plain.get(k))),
                }
            }
        }

        #[test]
        fn per_element_mask_respects_scope(rs in any::<u64>(), kp in 0usize..=K) {
            let f = Fixture::new(rs, 1, 2, 0.5, MaskScope::last(K, kp));
            let pe = per_element_mask(&f.xs[0], &f.indicators[0], &f.shared[0], true).unwrap();
            for k in 0..K {
                if !f.scope.contains(k as u32) {
                    prop_assert_eq!(pe.get(k), f.xs[0].get(k));
                }
            }
        }

        #[test]
        fn forged_contributor_set_leaves_residual(rs in any::<u64>()) {
            // Client 0 masks index k; the decryptors are told only client 1 did.
            let f = Fixture::new(rs, 3, 2, 1.0, MaskScope::full(K));
            let forged_b0 = IndicatorSet::new((1..K as u32).collect()).unwrap();
            let refs = [&forged_b0, &f.indicators[1], &f.indicators[2]];
            let idx = ContributorIndex::new(&f.scope, &refs).unwrap();
            let emks: Vec<_> = (0..2)
                .map(|u| element_masks(&idx, &f.seeds_for(u), 1, ring()).unwrap())
                .collect();
            let out = unmask(&f.masked_sum(), UnmaskInputs {
                scope: &f.scope,
                individual_seeds: &f.individual,
                emks: &emks,
                dropout_mask: None,
                missing_decryptors: 0,
            }).unwrap();
            prop_assert!(out.get(0).is_some());
            prop_assert_ne!(out.get(0), Some(f.plain_sum().get(0)));
            prop_assert_eq!(out.get(1), Some(f.plain_sum().get(1)));
        }
    }
}
