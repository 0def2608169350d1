//! Arithmetic over `Z_{2^w}`, fixed-point embedding, sparsification,
//! indicator sets and the masking / unmasking kernels.

mod masks;
mod scope;
mod sparse;
mod vector;

pub use masks::{
    dropout_masks, element_masks, flamingo_mask, pairwise_mask, per_element_mask, unmask,
    ContributorIndex, ElementMaskVector, RevealedAggregate, Sign, UnmaskInputs,
};
pub use scope::{indicator, IndicatorSet, MaskScope};
pub use sparse::{lambda_for_sparsity, sparsify, sparsity};
pub use vector::{Quantizer, Ring, RingVector};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RingError {
    #[error("unsupported ring width {0} (expected 8, 16, 32 or 64)")]
    UnsupportedWidth(u32),
    #[error("quantization overflow risk at index {index} (value {value})")]
    QuantizationOverflow { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("index {index} outside vector of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("indicator flags index {0} whose value is zero")]
    InconsistentIndicator(u32),
    #[error("indicator holds index {0} outside the mask scope")]
    OutsideScope(u32),
    #[error("indices must be strictly ascending")]
    NotAscending,
    #[error("incomplete masks: {0} decryptor(s) missing and no recovered dropout mask")]
    IncompleteMasks(usize),
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error(transparent)]
    Crypto(#[from] crate::crypto::CryptoError),
}
