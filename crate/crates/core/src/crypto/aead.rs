use chacha20poly1305::aead::{AeadInPlace, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Tag};

use super::{CryptoError, SharedSecret};

pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Ciphertext length minus plaintext length.
pub const AEAD_OVERHEAD: usize = NONCE_LEN + TAG_LEN;

pub type Nonce = [u8; NONCE_LEN];

/// ChaCha20-Poly1305 ciphertext; wire form `nonce || payload || tag`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub nonce: Nonce,
    pub payload: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

impl Ciphertext {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() < AEAD_OVERHEAD {
            return Err(CryptoError::Malformed("ciphertext shorter than overhead"));
        }
        let (nonce, rest) = bytes.split_at(NONCE_LEN);
        let (payload, tag) = rest.split_at(rest.len() - TAG_LEN);
        Ok(Self {
            nonce: nonce.try_into().unwrap(),
            payload: payload.to_vec(),
            tag: tag.try_into().unwrap(),
        })
    }

    pub fn encoded_len(&self) -> usize {
        self.payload.len() + AEAD_OVERHEAD
    }
}

/// Encrypts under a key derived from `key`; `aad` is authenticated but not sent.
pub fn sym_encrypt(key: &SharedSecret, plaintext: &[u8], nonce: &Nonce, aad: &[u8]) -> Ciphertext {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.aead_key()));
    let mut payload = plaintext.to_vec();
    let tag = cipher
        .encrypt_in_place_detached(nonce.into(), aad, &mut payload)
        .expect("chacha20poly1305 accepts any message below 256 GiB");
    Ciphertext { nonce: *nonce, payload, tag: tag.into() }
}

pub fn sym_decrypt(key: &SharedSecret, ct: &Ciphertext, aad: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.aead_key()));
    let mut buf = ct.payload.clone();
    cipher
        .decrypt_in_place_detached((&ct.nonce).into(), aad, &mut buf, Tag::from_slice(&ct.tag))
        .map_err(|_| CryptoError::AuthenticationFailed)?;
    Ok(buf)
}
