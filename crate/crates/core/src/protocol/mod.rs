//! Party state machines for the Setup, Report, Unmask and Dropout Recovery
//! phases, plus their wire messages.

mod client;
mod decryptor;
mod messages;
mod server;
mod setup;

pub use client::Client;
pub use decryptor::Decryptor;
pub use messages::{
    Body, ClientReport, Codec, Message, RecoveryRequest, RecoveryResponse, Refusal, UnmaskRequest, UnmaskResponse,
};
pub use server::{HonestServer, Server, ServerBehavior, ServerView, UnmaskOutcome};
pub use setup::{neighbor_graph, select_roles, Pki, PublicKeys, PublicRandomness, Selection, UserKeys};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cost::Phase;
use crate::crypto::{CryptoError, Nonce, NONCE_LEN};
use crate::ring::RingError;

pub type UserId = u32;

/// Transcript id of the aggregation server.
pub const SERVER_ID: UserId = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("duplicate user id {0}")]
    DuplicateUser(UserId),
    #[error("user id {0} is reserved for the server")]
    ReservedId(UserId),
    #[error("no public key registered for user {0}")]
    MissingPublicKey(UserId),
    #[error("not enough users: have {have}, need {need}")]
    NotEnoughUsers { have: usize, need: usize },
    #[error("message decode error: {0}")]
    Decode(&'static str),
    #[error("unexpected {kind} message from {sender}")]
    Unexpected { kind: &'static str, sender: UserId },
    #[error("party used before round keys were derived")]
    NotReady,
    #[error(transparent)]
    Crypto(CryptoError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Why a round was aborted.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbortCause {
    #[error("only {have} of {need} client reports arrived")]
    MissingReports { have: usize, need: usize },
    #[error("only {have} decryptors responded, need {need}")]
    TooFewResponses { have: usize, need: usize },
    #[error("decryptor {decryptor} refused: {reason}")]
    Refused { decryptor: UserId, reason: Refusal },
    #[error("seed of client {client} has {have} valid shares, need {need}")]
    UnrecoverableSeed { client: UserId, have: usize, need: usize },
    #[error("{0}")]
    Protocol(String),
}

/// A typed round abort; no partial aggregate is ever released after one.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("round aborted in {phase} phase: {cause}")]
pub struct Abort {
    pub phase: Phase,
    pub cause: AbortCause,
}

impl Abort {
    pub fn new(phase: Phase, cause: AbortCause) -> Self {
        Self { phase, cause }
    }

    pub(crate) fn protocol(phase: Phase, e: impl std::fmt::Display) -> Self {
        Self { phase, cause: AbortCause::Protocol(e.to_string()) }
    }
}

/// Which secret an encrypted share belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ShareLabel {
    /// `r_i`.
    Individual,
    /// `r_{i,v}` for decryptor `v`.
    DecryptorSeed(UserId),
}

/// Associated data and nonce for the share of `owner`'s secret held by
/// `holder`. Binding all four fields stops the server from replaying a
/// ciphertext under another slot; the nonce is unique per key because each
/// `(owner, holder)` key encrypts each `(τ, label)` exactly once.
pub(crate) fn share_context(round: u64, owner: UserId, holder: UserId, label: ShareLabel) -> (Nonce, Vec<u8>) {
    let mut aad = Vec::with_capacity(32);
    aad.extend_from_slice(b"persec/share");
    aad.extend_from_slice(&round.to_be_bytes());
    aad.extend_from_slice(&owner.to_be_bytes());
    aad.extend_from_slice(&holder.to_be_bytes());
    match label {
        ShareLabel::Individual => aad.push(0),
        ShareLabel::DecryptorSeed(v) => {
            aad.push(1);
            aad.extend_from_slice(&v.to_be_bytes());
        }
    }
    let digest = Sha256::digest(&aad);
    let mut nonce = [0u8; NONCE_LEN];
    nonce.copy_from_slice(&digest[..NONCE_LEN]);
    (nonce, aad)
}
