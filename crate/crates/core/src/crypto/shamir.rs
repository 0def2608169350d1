//! Shamir `(ℓ, L)` secret sharing over a prime field `F_p`.
//!
//! Share `l` is the evaluation of a random degree-`ℓ-1` polynomial with
//! constant term equal to the secret at the nonzero point `x_l`.
//! Reconstruction is Lagrange interpolation at `x = 0`.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use super::seed::check_kappa;
use super::{CryptoError, Seed};

/// Offsets `c` such that `2^κ + c` is the smallest prime above `2^κ`,
/// for κ = 8, 16, ..., 256.
const NEXT_PRIME_OFFSETS: [u32; 32] = [
    1, 1, 43, 15, 15, 21, 81, 13, 15, 13, 7, 61, 111, 25, 451, 51, 85, 175, 253, 7, 87, 427, 27,
    133, 235, 375, 423, 735, 357, 115, 81, 297,
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    modulus: BigUint,
    byte_len: usize,
}

impl PrimeField {
    /// `modulus` must be prime; this is not checked.
    pub fn new(modulus: BigUint) -> Self {
        assert!(modulus > BigUint::from(2u32), "field modulus must exceed 2");
        let byte_len = ((modulus.bits() + 7) / 8) as usize;
        Self { modulus, byte_len }
    }

    pub fn from_u64(modulus: u64) -> Self {
        Self::new(BigUint::from(modulus))
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// Width in bytes of an encoded field element.
    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    pub fn reduce(&self, v: &BigUint) -> BigUint {
        v % &self.modulus
    }

    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.modulus
    }

    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        ((a + &self.modulus) - b) % &self.modulus
    }

    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.modulus
    }

    fn inv(&self, a: &BigUint) -> BigUint {
        let e = &self.modulus - BigUint::from(2u32);
        a.modpow(&e, &self.modulus)
    }

    /// Uniform element by rejection sampling.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let bits = self.modulus.bits();
        let mut buf = vec![0u8; self.byte_len];
        loop {
            rng.fill_bytes(&mut buf);
            let excess = (self.byte_len as u64 * 8 - bits) as u32;
            buf[0] &= 0xffu8 >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if v < self.modulus {
                return v;
            }
        }
    }

    pub fn encode(&self, v: &BigUint) -> Vec<u8> {
        let raw = v.to_bytes_be();
        let mut out = vec![0u8; self.byte_len - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<BigUint, CryptoError> {
        if bytes.len() != self.byte_len {
            return Err(CryptoError::Malformed("field element width"));
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.modulus {
            return Err(CryptoError::Malformed("field element not reduced"));
        }
        Ok(v)
    }
}

/// The smallest prime field strictly larger than `2^κ`.
pub fn field_for_kappa(kappa_bits: u32) -> Result<PrimeField, CryptoError> {
    check_kappa(kappa_bits)?;
    let offset = NEXT_PRIME_OFFSETS[(kappa_bits / 8 - 1) as usize];
    Ok(PrimeField::new((BigUint::one() << kappa_bits) + BigUint::from(offset)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretShare {
    /// Evaluation point; the holder's 1-based position.
    pub point: u32,
    pub value: BigUint,
}

impl SecretShare {
    /// `point (u32 BE) || value (p-width BE)`.
    pub fn encode(&self, field: &PrimeField) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + field.byte_len());
        out.extend_from_slice(&self.point.to_be_bytes());
        out.extend_from_slice(&field.encode(&self.value));
        out
    }

    pub fn decode(field: &PrimeField, bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != 4 + field.byte_len() {
            return Err(CryptoError::Malformed("share length"));
        }
        let point = u32::from_be_bytes(bytes[..4].try_into().unwrap());
        if point == 0 {
            return Err(CryptoError::ZeroPoint);
        }
        Ok(Self { point, value: field.decode(&bytes[4..])? })
    }

    pub fn encoded_len(field: &PrimeField) -> usize {
        4 + field.byte_len()
    }
}

fn check_params(threshold: usize, shares: usize) -> Result<(), CryptoError> {
    if threshold < 1 || threshold > shares || shares > u32::MAX as usize {
        return Err(CryptoError::InvalidSharing { threshold, shares });
    }
    Ok(())
}

/// Shares `secret` with explicit higher-order coefficients
/// (`coefficients[j]` multiplies `x^{j+1}`). Threshold is `coefficients.len() + 1`.
pub fn ss_share_with_coefficients(
    field: &PrimeField,
    secret: &BigUint,
    coefficients: &[BigUint],
    shares: usize,
) -> Result<Vec<SecretShare>, CryptoError> {
    check_params(coefficients.len() + 1, shares)?;
    if secret >= field.modulus() {
        return Err(CryptoError::SecretTooLarge);
    }
    let shares = (1..=shares as u32)
        .map(|point| {
            let x = BigUint::from(point);
            // Horner from the top coefficient down to the secret.
            let mut acc = BigUint::zero();
            for c in coefficients.iter().rev() {
                acc = field.add(&field.mul(&acc, &x), c);
            }
            acc = field.add(&field.mul(&acc, &x), secret);
            SecretShare { point, value: acc }
        })
        .collect();
    Ok(shares)
}

/// Splits a seed into `shares` shares, any `threshold` of which reconstruct it.
pub fn ss_share<R: RngCore + ?Sized>(
    field: &PrimeField,
    secret: &Seed,
    threshold: usize,
    shares: usize,
    rng: &mut R,
) -> Result<Vec<SecretShare>, CryptoError> {
    check_params(threshold, shares)?;
    let s = BigUint::from_bytes_be(secret.as_bytes());
    let coefficients: Vec<BigUint> = (1..threshold).map(|_| field.random(rng)).collect();
    ss_share_with_coefficients(field, &s, &coefficients, shares)
}

/// Lagrange coefficients for interpolation at zero over a fixed point set.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    points: Vec<u32>,
    coefficients: Vec<BigUint>,
}

impl LagrangeBasis {
    pub fn at_zero(field: &PrimeField, points: &[u32]) -> Result<Self, CryptoError> {
        let mut seen = BTreeSet::new();
        for &p in points {
            if p == 0 {
                return Err(CryptoError::ZeroPoint);
            }
            if !seen.insert(p) {
                return Err(CryptoError::DuplicatePoint(p));
            }
        }
        let xs: Vec<BigUint> = points.iter().map(|&p| field.reduce(&BigUint::from(p))).collect();
        let mut coefficients = Vec::with_capacity(xs.len());
        for (j, xj) in xs.iter().enumerate() {
            let mut num = BigUint::one();
            let mut den = BigUint::one();
            for (m, xm) in xs.iter().enumerate() {
                if m == j {
                    continue;
                }
                // l_j(0) = Π x_m / (x_m - x_j)
                num = field.mul(&num, xm);
                den = field.mul(&den, &field.sub(xm, xj));
            }
            if den.is_zero() {
                // Points collide modulo p.
                return Err(CryptoError::DuplicatePoint(points[j]));
            }
            coefficients.push(field.mul(&num, &field.inv(&den)));
        }
        Ok(Self { points: points.to_vec(), coefficients })
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    /// Interpolates values given in the same order as the basis points.
    pub fn combine<'a, I>(&self, field: &PrimeField, values: I) -> BigUint
    where
        I: IntoIterator<Item = &'a BigUint>,
    {
        values
            .into_iter()
            .zip(&self.coefficients)
            .fold(BigUint::zero(), |acc, (v, c)| field.add(&acc, &field.mul(v, c)))
    }
}

/// Reconstructs the field secret from at least `threshold` shares.
pub fn recon_value(
    field: &PrimeField,
    shares: &[SecretShare],
    threshold: usize,
) -> Result<BigUint, CryptoError> {
    if shares.len() < threshold {
        return Err(CryptoError::InsufficientShares { have: shares.len(), need: threshold });
    }
    let points: Vec<u32> = shares.iter().map(|s| s.point).collect();
    let basis = LagrangeBasis::at_zero(field, &points)?;
    Ok(basis.combine(field, shares.iter().map(|s| &s.value)))
}

/// Reconstructs a κ-bit seed.
pub fn ss_recon(
    field: &PrimeField,
    shares: &[SecretShare],
    threshold: usize,
    kappa_bits: u32,
) -> Result<Seed, CryptoError> {
    let value = recon_value(field, shares, threshold)?;
    seed_from_value(&value, kappa_bits)
}

pub(crate) fn seed_from_value(value: &BigUint, kappa_bits: u32) -> Result<Seed, CryptoError> {
    let len = check_kappa(kappa_bits)?;
    let raw = value.to_bytes_be();
    let raw: &[u8] = if value.is_zero() { &[] } else { &raw };
    if raw.len() > len {
        return Err(CryptoError::SecretTooLarge);
    }
    let mut bytes = vec![0u8; len - raw.len()];
    bytes.extend_from_slice(raw);
    Seed::from_bytes(bytes)
}
