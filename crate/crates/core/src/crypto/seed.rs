use std::fmt;

use rand::RngCore;

use super::CryptoError;

/// A κ-bit seed. Stored big-endian, `κ/8` bytes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed {
    bytes: Vec<u8>,
}

pub(crate) fn check_kappa(kappa_bits: u32) -> Result<usize, CryptoError> {
    if kappa_bits == 0 || kappa_bits % 8 != 0 || kappa_bits > 256 {
        return Err(CryptoError::UnsupportedKappa(kappa_bits));
    }
    Ok(kappa_bits as usize / 8)
}

impl Seed {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CryptoError> {
        check_kappa(bytes.len() as u32 * 8)?;
        Ok(Self { bytes })
    }

    pub fn random<R: RngCore + ?Sized>(kappa_bits: u32, rng: &mut R) -> Result<Self, CryptoError> {
        let len = check_kappa(kappa_bits)?;
        let mut bytes = vec![0u8; len];
        rng.fill_bytes(&mut bytes);
        Ok(Self { bytes })
    }

    /// Validates a security parameter: a multiple of 8 in `8..=256`.
    pub fn check_kappa_bits(kappa_bits: u32) -> Result<(), CryptoError> {
        check_kappa(kappa_bits).map(|_| ())
    }

    pub fn kappa_bits(&self) -> u32 {
        self.bytes.len() as u32 * 8
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Wire form: the raw big-endian bytes.
    pub fn encode(&self) -> Vec<u8> {
        self.bytes.clone()
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", hex::encode(&self.bytes))
    }
}
