use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::{CryptoError, Seed};

/// Random-access pseudorandom generator over a vector of `len` 64-bit words.
///
/// Element `k` is ChaCha20 keystream words `2k` and `2k+1`, so any index can
/// be produced without generating the prefix. Callers reduce to their ring.
pub struct Prg {
    stream: ChaCha20Rng,
    len: usize,
    cursor: Option<usize>,
}

impl Prg {
    pub fn new(seed: &Seed, len: usize) -> Self {
        let mut h = Sha256::new();
        h.update(b"persec/prg");
        h.update(seed.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        Self { stream: ChaCha20Rng::from_seed(key), len, cursor: None }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn element(&mut self, index: usize) -> Result<u64, CryptoError> {
        if index >= self.len {
            return Err(CryptoError::IndexOutOfRange { index, len: self.len });
        }
        if self.cursor != Some(index) {
            self.stream.set_word_pos(2 * index as u128);
        }
        self.cursor = Some(index + 1);
        Ok(self.stream.next_u64())
    }

    /// Fills `out` with elements `start..start + out.len()`.
    pub fn fill(&mut self, start: usize, out: &mut [u64]) -> Result<(), CryptoError> {
        let end = start + out.len();
        if end > self.len {
            return Err(CryptoError::IndexOutOfRange { index: end.saturating_sub(1), len: self.len });
        }
        if out.is_empty() {
            return Ok(());
        }
        self.stream.set_word_pos(2 * start as u128);
        for slot in out.iter_mut() {
            *slot = self.stream.next_u64();
        }
        self.cursor = Some(end);
        Ok(())
    }
}

/// One-shot `PRG(seed)[index]` for a vector of length `len`.
pub fn prg_element(seed: &Seed, index: usize, len: usize) -> Result<u64, CryptoError> {
    Prg::new(seed, len).element(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(b: u8) -> Seed {
        Seed::from_bytes(vec![b; 16]).unwrap()
    }

    #[test]
    fn random_access_matches_sequential() {
        let s = seed(1);
        let mut seq = vec![0u64; 300];
        Prg::new(&s, 300).fill(0, &mut seq).unwrap();
        let mut prg = Prg::new(&s, 300);
        for k in [299usize, 0, 5, 6, 7, 128, 17, 16, 15] {
            assert_eq!(prg.element(k).unwrap(), seq[k]);
        }
        let mut mid = vec![0u64; 10];
        prg.fill(33, &mut mid).unwrap();
        assert_eq!(&mid[..], &seq[33..43]);
        assert_eq!(prg_element(&s, 5, 300).unwrap(), prg_element(&s, 5, 300).unwrap());
    }

    #[test]
    fn out_of_range_index() {
        assert_eq!(
            prg_element(&seed(2), 10, 10),
            Err(CryptoError::IndexOutOfRange { index: 10, len: 10 })
        );
    }

    #[test]
    fn low_32_bits_are_uniform_on_average() {
        let mut vals = vec![0u64; 100_000];
        Prg::new(&seed(3), vals.len()).fill(0, &mut vals).unwrap();
        let mean = vals.iter().map(|v| (v & 0xffff_ffff) as f64).sum::<f64>() / vals.len() as f64;
        let target = 2f64.powi(31);
        assert!((mean - target).abs() / target < 0.01, "mean = {mean}");
    }
}
