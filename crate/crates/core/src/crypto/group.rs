use std::fmt;

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::CompressedRistretto;
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::Identity;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::seed::check_kappa;
use super::CryptoError;

/// Encoded private exponent. Never part of a protocol message.
#[derive(Clone, PartialEq, Eq)]
pub struct Scalar(Vec<u8>);

impl Scalar {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Scalar(bytes)
    }

    pub fn from_u64(value: u64) -> Self {
        Scalar(value.to_be_bytes().to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scalar(..)")
    }
}

/// Encoded group element (public key or DH output).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(Vec<u8>);

impl GroupElement {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        GroupElement(bytes)
    }

    pub fn from_u64(value: u64) -> Self {
        GroupElement(value.to_be_bytes().to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Interprets an 8-byte element as an integer (mod-prime backend).
    pub fn as_u64(&self) -> Option<u64> {
        let arr: [u8; 8] = self.0.as_slice().try_into().ok()?;
        Some(u64::from_be_bytes(arr))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", hex::encode(&self.0))
    }
}

#[derive(Clone, Debug)]
pub struct KeyPair {
    private: Scalar,
    public: GroupElement,
}

impl KeyPair {
    pub fn private(&self) -> &Scalar {
        &self.private
    }

    pub fn public(&self) -> &GroupElement {
        &self.public
    }
}

/// A cyclic group in which Diffie-Hellman is computed.
pub trait Group: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn random_private(&self, rng: &mut dyn RngCore) -> Scalar;

    /// `base^scalar`; rejects zero scalars and elements outside the group.
    fn exp(&self, base: &GroupElement, scalar: &Scalar) -> Result<GroupElement, CryptoError>;

    fn generator(&self) -> GroupElement;

    fn validate(&self, element: &GroupElement) -> Result<(), CryptoError>;

    fn keypair_from_private(&self, private: Scalar) -> Result<KeyPair, CryptoError> {
        let public = self.exp(&self.generator(), &private)?;
        Ok(KeyPair { private, public })
    }

    fn generate(&self, rng: &mut dyn RngCore) -> KeyPair {
        loop {
            if let Ok(kp) = self.keypair_from_private(self.random_private(rng)) {
                return kp;
            }
        }
    }
}

/// Output of a key agreement: the raw group element plus its κ-bit key.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret {
    element: GroupElement,
    key: Vec<u8>,
}

impl SharedSecret {
    pub fn element(&self) -> &GroupElement {
        &self.element
    }

    /// κ-bit key derived from the element (PRF key).
    pub fn key(&self) -> &[u8] {
        &self.key
    }

    /// 256-bit key for the AEAD.
    pub fn aead_key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"persec/aead-key");
        h.update(self.element.as_bytes());
        h.finalize().into()
    }
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

/// Computes `peer^private` and derives a κ-bit key from it.
pub fn key_agree(
    group: &dyn Group,
    private: &Scalar,
    peer_public: &GroupElement,
    kappa_bits: u32,
) -> Result<SharedSecret, CryptoError> {
    let len = check_kappa(kappa_bits)?;
    let element = group.exp(peer_public, private)?;
    let mut h = Sha256::new();
    h.update(b"persec/shared-secret");
    h.update(element.as_bytes());
    let digest = h.finalize();
    Ok(SharedSecret { element, key: digest[..len].to_vec() })
}

/// Multiplicative group generated by `generator` modulo a prime below 2^64.
///
/// `order` is the order of the generator. The production-size instance uses a
/// safe prime and a generator of the prime-order subgroup of quadratic residues;
/// the tiny instance exists for exhaustive tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPrimeGroup {
    modulus: u64,
    generator: u64,
    order: u64,
}

const SAFE_PRIME_64: u64 = 18_446_744_073_709_550_147;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

impl ModPrimeGroup {
    /// Panics if `generator^order != 1`.
    pub fn new(modulus: u64, generator: u64, order: u64) -> Self {
        assert!(modulus > 2 && generator > 1 && generator < modulus);
        assert_eq!(pow_mod(generator, order, modulus), 1, "order does not annihilate the generator");
        Self { modulus, generator, order }
    }

    /// `Z_23^*` generated by 5 (order 22).
    pub fn tiny_test() -> Self {
        Self::new(23, 5, 22)
    }

    /// Quadratic residues modulo the largest 64-bit safe prime; prime order.
    pub fn safe_prime_64() -> Self {
        Self::new(SAFE_PRIME_64, 4, (SAFE_PRIME_64 - 1) / 2)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    fn scalar_value(&self, s: &Scalar) -> Result<u64, CryptoError> {
        let arr: [u8; 8] = s.0.as_slice().try_into().map_err(|_| CryptoError::InvalidScalar)?;
        let v = u64::from_be_bytes(arr);
        if v == 0 || v >= self.order {
            return Err(CryptoError::InvalidScalar);
        }
        Ok(v)
    }
}

impl Group for ModPrimeGroup {
    fn name(&self) -> &'static str {
        "modp"
    }

    fn random_private(&self, rng: &mut dyn RngCore) -> Scalar {
        let v = 1 + rng.next_u64() % (self.order - 1);
        Scalar::from_u64(v)
    }

    fn exp(&self, base: &GroupElement, scalar: &Scalar) -> Result<GroupElement, CryptoError> {
        self.validate(base)?;
        let s = self.scalar_value(scalar)?;
        let b = base.as_u64().ok_or(CryptoError::InvalidGroupElement)?;
        Ok(GroupElement::from_u64(pow_mod(b, s, self.modulus)))
    }

    fn generator(&self) -> GroupElement {
        GroupElement::from_u64(self.generator)
    }

    fn validate(&self, element: &GroupElement) -> Result<(), CryptoError> {
        let v = element.as_u64().ok_or(CryptoError::InvalidGroupElement)?;
        if v == 0 || v >= self.modulus || pow_mod(v, self.order, self.modulus) != 1 {
            return Err(CryptoError::InvalidGroupElement);
        }
        Ok(())
    }
}

/// The Ristretto255 prime-order group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ristretto;

impl Ristretto {
    fn scalar(s: &Scalar) -> Result<DalekScalar, CryptoError> {
        let arr: [u8; 32] = s.0.as_slice().try_into().map_err(|_| CryptoError::InvalidScalar)?;
        let scalar = Option::<DalekScalar>::from(DalekScalar::from_canonical_bytes(arr))
            .ok_or(CryptoError::InvalidScalar)?;
        if scalar == DalekScalar::ZERO {
            return Err(CryptoError::InvalidScalar);
        }
        Ok(scalar)
    }
}

impl Group for Ristretto {
    fn name(&self) -> &'static str {
        "ristretto255"
    }

    fn random_private(&self, rng: &mut dyn RngCore) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar(DalekScalar::from_bytes_mod_order_wide(&wide).to_bytes().to_vec())
    }

    fn exp(&self, base: &GroupElement, scalar: &Scalar) -> Result<GroupElement, CryptoError> {
        let s = Self::scalar(scalar)?;
        let arr: [u8; 32] =
            base.0.as_slice().try_into().map_err(|_| CryptoError::InvalidGroupElement)?;
        let point = CompressedRistretto(arr).decompress().ok_or(CryptoError::InvalidGroupElement)?;
        if point == curve25519_dalek::RistrettoPoint::identity() {
            return Err(CryptoError::InvalidGroupElement);
        }
        Ok(GroupElement((point * s).compress().to_bytes().to_vec()))
    }

    fn generator(&self) -> GroupElement {
        GroupElement(RISTRETTO_BASEPOINT_POINT.compress().to_bytes().to_vec())
    }

    fn validate(&self, element: &GroupElement) -> Result<(), CryptoError> {
        let arr: [u8; 32] =
            element.0.as_slice().try_into().map_err(|_| CryptoError::InvalidGroupElement)?;
        match CompressedRistretto(arr).decompress() {
            Some(p) if p != curve25519_dalek::RistrettoPoint::identity() => Ok(()),
            _ => Err(CryptoError::InvalidGroupElement),
        }
    }
}
