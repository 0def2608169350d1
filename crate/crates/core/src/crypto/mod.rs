//! Cryptographic building blocks: Diffie-Hellman key agreement over a
//! pluggable prime-order group, a PRF, a random-access PRG, Shamir secret
//! sharing over a prime field and authenticated symmetric encryption.

mod aead;
mod group;
mod prf;
mod prg;
mod seed;
mod shamir;

pub use aead::{sym_decrypt, sym_encrypt, Ciphertext, Nonce, AEAD_OVERHEAD, NONCE_LEN, TAG_LEN};
pub use group::{key_agree, Group, GroupElement, KeyPair, ModPrimeGroup, Ristretto, Scalar, SharedSecret};
pub use prf::{prf, prf_bytes};
pub use prg::{prg_element, Prg};
pub use seed::Seed;
pub(crate) use shamir::seed_from_value;
pub use shamir::{
    field_for_kappa, recon_value, ss_recon, ss_share, ss_share_with_coefficients, LagrangeBasis,
    PrimeField,
    SecretShare,
};

use thiserror::Error;

/// Errors raised by the primitives.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("invalid group element")]
    InvalidGroupElement,
    #[error("private scalar is zero or out of range")]
    InvalidScalar,
    #[error("prg index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid sharing parameters: threshold {threshold}, shares {shares}")]
    InvalidSharing { threshold: usize, shares: usize },
    #[error("secret does not fit in the field")]
    SecretTooLarge,
    #[error("insufficient shares: have {have}, need {need}")]
    InsufficientShares { have: usize, need: usize },
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u32),
    #[error("evaluation point must be nonzero")]
    ZeroPoint,
    #[error("shares belong to different secrets")]
    InconsistentShares,
    #[error("authenticated decryption failed")]
    AuthenticationFailed,
    #[error("unsupported security parameter {0} (need a multiple of 8 in 8..=256)")]
    UnsupportedKappa(u32),
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}
