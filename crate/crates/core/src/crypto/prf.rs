use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::{CryptoError, Seed, SharedSecret};

type HmacSha256 = Hmac<Sha256>;

/// `PRF(key, round)`: HMAC-SHA256 over the round counter, truncated to the
/// key's width.
pub fn prf_bytes(key: &[u8], round: u64) -> Result<Seed, CryptoError> {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(b"persec/prf");
    mac.update(&round.to_be_bytes());
    let out = mac.finalize().into_bytes();
    let len = key.len().min(out.len());
    Seed::from_bytes(out[..len].to_vec())
}

pub fn prf(key: &SharedSecret, round: u64) -> Seed {
    prf_bytes(key.key(), round).expect("shared-secret keys have a valid width")
}
