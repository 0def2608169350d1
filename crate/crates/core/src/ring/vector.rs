use serde::{Deserialize, Serialize};

use super::RingError;

/// The ring `Z_{2^w}` for `w ∈ {8, 16, 32, 64}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Ring {
    bits: u32,
}

impl Ring {
    pub fn new(bits: u32) -> Result<Self, RingError> {
        match bits {
            8 | 16 | 32 | 64 => Ok(Self { bits }),
            _ => Err(RingError::UnsupportedWidth(bits)),
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn bytes(self) -> usize {
        self.bits as usize / 8
    }

    #[inline]
    pub fn mask(self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u64 {
        v & self.mask()
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask()
    }

    /// Two's-complement signed interpretation.
    pub fn to_signed(self, v: u64) -> i64 {
        let shift = 64 - self.bits;
        ((v << shift) as i64) >> shift
    }

    pub fn from_signed(self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }
}

impl TryFrom<u32> for Ring {
    type Error = RingError;
    fn try_from(bits: u32) -> Result<Self, RingError> {
        Ring::new(bits)
    }
}

impl From<Ring> for u32 {
    fn from(r: Ring) -> u32 {
        r.bits
    }
}

impl Default for Ring {
    fn default() -> Self {
        Ring { bits: 32 }
    }
}

/// A fixed-length vector over `Z_{2^w}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingVector {
    ring: Ring,
    elems: Vec<u64>,
}

impl RingVector {
    pub fn zeros(ring: Ring, len: usize) -> Self {
        Self { ring, elems: vec![0; len] }
    }

    /// Reduces every element into the ring.
    pub fn from_elems(ring: Ring, mut elems: Vec<u64>) -> Self {
        for e in elems.iter_mut() {
            *e = ring.reduce(*e);
        }
        Self { ring, elems }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[u64] {
        &self.elems
    }

    pub fn get(&self, k: usize) -> u64 {
        self.elems[k]
    }

    pub(crate) fn elems_mut(&mut self) -> &mut [u64] {
        &mut self.elems
    }

    fn check(&self, other: &RingVector) -> Result<(), RingError> {
        if self.ring != other.ring || self.len() != other.len() {
            return Err(RingError::LengthMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &RingVector) -> Result<(), RingError> {
        self.check(other)?;
        let r = self.ring;
        for (a, b) in self.elems.iter_mut().zip(&other.elems) {
            *a = r.add(*a, *b);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &RingVector) -> Result<(), RingError> {
        self.check(other)?;
        let r = self.ring;
        for (a, b) in self.elems.iter_mut().zip(&other.elems) {
            *a = r.sub(*a, *b);
        }
        Ok(())
    }

    pub fn count_nonzero(&self) -> usize {
        self.elems.iter().filter(|&&v| v != 0).count()
    }

    /// `w/8` little-endian bytes per element.
    pub fn encode(&self) -> Vec<u8> {
        let n = self.ring.bytes();
        let mut out = Vec::with_capacity(self.elems.len() * n);
        for e in &self.elems {
            out.extend_from_slice(&e.to_le_bytes()[..n]);
        }
        out
    }

    pub fn decode(ring: Ring, bytes: &[u8]) -> Result<Self, RingError> {
        let n = ring.bytes();
        if bytes.len() % n != 0 {
            return Err(RingError::Decode("ring vector length not a multiple of element width"));
        }
        let elems = bytes
            .chunks_exact(n)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..n].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        Ok(Self { ring, elems })
    }
}

/// Fixed-point embedding of real vectors into the ring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    ring: Ring,
    frac_bits: u32,
    max_contributors: usize,
}

impl Quantizer {
    pub fn new(ring: Ring, frac_bits: u32, max_contributors: usize) -> Self {
        Self { ring, frac_bits, max_contributors: max_contributors.max(1) }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.frac_bits as i32)
    }

    /// Rejects any element for which `|x|·2^f·|C| ≥ 2^{w-1}`, so that sums of
    /// up to `max_contributors` vectors never wrap.
    pub fn quantize(&self, x: &[f64]) -> Result<RingVector, RingError> {
        let scale = self.scale();
        let limit = 2f64.powi(self.ring.bits() as i32 - 1);
        let mut elems = Vec::with_capacity(x.len());
        for (index, &v) in x.iter().enumerate() {
            if !v.is_finite() || v.abs() * scale * self.max_contributors as f64 >= limit {
                return Err(RingError::QuantizationOverflow { index, value: v });
            }
            elems.push(self.ring.from_signed((v * scale).round() as i64));
        }
        Ok(RingVector { ring: self.ring, elems })
    }

    pub fn dequantize(&self, v: &RingVector) -> Vec<f64> {
        let scale = self.scale();
        v.elems().iter().map(|&e| self.ring.to_signed(e) as f64 / scale).collect()
    }

    pub fn dequantize_value(&self, v: u64) -> f64 {
        self.ring.to_signed(v) as f64 / self.scale()
    }
}
