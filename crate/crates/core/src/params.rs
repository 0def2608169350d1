//! Protocol thresholds and the share-counting checks behind them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::CryptoError;
use crate::ring::{Ring, RingError};

/// `⌊rate · n⌋`, tolerant of binary rounding (0.06 · 50 must give 3).
pub fn floor_count(rate: f64, n: usize) -> usize {
    (rate * n as f64 + 1e-9).floor().max(0.0) as usize
}

/// A named constraint violation; `field` is the offending parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("delta_d + eta_d = {sum} must be below 1/3")]
    CorruptionBound { sum: f64 },
    #[error("{field} = {value} must lie in [0, 1)")]
    RateOutOfRange { field: &'static str, value: f64 },
    #[error("t = {0} must be at least 2")]
    ThresholdTooSmall(usize),
    #[error("clients = {clients} must be at least t = {t}")]
    TooFewClients { clients: usize, t: usize },
    #[error("decryptors = {0} must be at least 3")]
    TooFewDecryptors(usize),
    #[error("neighbors = {neighbors} must be below clients = {clients}")]
    TooManyNeighbors { neighbors: usize, clients: usize },
    #[error("scope_len = {scope_len} exceeds vector_len = {vector_len}")]
    ScopeTooLarge { scope_len: usize, vector_len: usize },
    #[error("vector_len must be positive")]
    EmptyVector,
    #[error("ring_bits: {0}")]
    Ring(#[from] RingError),
    #[error("kappa: {0}")]
    Kappa(#[from] CryptoError),
    #[error("frac_bits = {frac_bits} leaves no integer headroom in a {ring_bits}-bit ring")]
    FracBits { frac_bits: u32, ring_bits: u32 },
    #[error("lambda = {0} must be non-negative")]
    NegativeLambda(f64),
}

/// How `ℓ` and `Δ_max` are derived from `|D|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `ℓ = ⌊2|D|/3⌋ + 1`, `Δ_max = ⌈ℓ/2⌉` (canonical).
    #[default]
    FloorCeil,
    /// `ℓ = ⌈2|D|/3⌉ + 1`, `Δ_max = ⌊ℓ/2⌋`.
    CeilFloor,
}

impl ThresholdRule {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdRule::FloorCeil => "floor-ceil",
            ThresholdRule::CeilFloor => "ceil-floor",
        }
    }

    /// `(ℓ, Δ_max)` for `d` decryptors.
    pub fn derive(self, d: usize) -> (usize, usize) {
        match self {
            ThresholdRule::FloorCeil => {
                let ell = 2 * d / 3 + 1;
                (ell, ell.div_ceil(2))
            }
            ThresholdRule::CeilFloor => {
                let ell = (2 * d).div_ceil(3) + 1;
                (ell, ell / 2)
            }
        }
    }
}

/// Caller-chosen inputs; everything else is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsInput {
    pub clients: usize,
    pub decryptors: usize,
    pub neighbors: usize,
    pub vector_len: usize,
    pub scope_len: usize,
    pub ring_bits: u32,
    pub frac_bits: u32,
    pub kappa: u32,
    pub t: usize,
    pub eta_c: f64,
    pub eta_d: f64,
    pub delta_d: f64,
    pub lambda: f64,
}

impl Default for ParamsInput {
    fn default() -> Self {
        Self {
            clients: 64,
            decryptors: 12,
            neighbors: 8,
            vector_len: 65_536,
            scope_len: 6_554,
            ring_bits: 32,
            frac_bits: 16,
            kappa: 128,
            t: 3,
            eta_c: 0.0,
            eta_d: 0.0,
            delta_d: 0.0,
            lambda: 0.0,
        }
    }
}

/// Validated protocol constants shared by every party of a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub clients: usize,
    pub decryptors: usize,
    pub neighbors: usize,
    pub vector_len: usize,
    pub scope_len: usize,
    pub ring_bits: u32,
    pub frac_bits: u32,
    pub kappa: u32,
    pub t: usize,
    /// `⌊η_C|C|⌋ + t`.
    pub t_prime: usize,
    /// Shamir reconstruction threshold.
    pub ell: usize,
    pub delta_max: usize,
    pub eta_c: f64,
    pub eta_d: f64,
    pub delta_d: f64,
    pub lambda: f64,
}

impl ProtocolParams {
    pub fn ring(&self) -> Ring {
        Ring::new(self.ring_bits).expect("validated at derivation")
    }

    /// Largest number of decryptor dropouts the corruption model allows.
    pub fn max_dropouts(&self) -> usize {
        floor_count(self.delta_d, self.decryptors)
    }

    pub fn max_colluding_decryptors(&self) -> usize {
        floor_count(self.eta_d, self.decryptors)
    }
}

pub fn derive_params(input: &ParamsInput) -> Result<ProtocolParams, ParamsError> {
    derive_params_with(input, ThresholdRule::FloorCeil)
}

pub fn derive_params_with(input: &ParamsInput, rule: ThresholdRule) -> Result<ProtocolParams, ParamsError> {
    for (field, value) in [("eta_c", input.eta_c), ("eta_d", input.eta_d), ("delta_d", input.delta_d)] {
        if !(0.0..1.0).contains(&value) {
            return Err(ParamsError::RateOutOfRange { field, value });
        }
    }
    let sum = input.delta_d + input.eta_d;
    if sum >= 1.0 / 3.0 {
        return Err(ParamsError::CorruptionBound { sum });
    }
    if input.t < 2 {
        return Err(ParamsError::ThresholdTooSmall(input.t));
    }
    if input.clients < input.t {
        return Err(ParamsError::TooFewClients { clients: input.clients, t: input.t });
    }
    if input.decryptors < 3 {
        return Err(ParamsError::TooFewDecryptors(input.decryptors));
    }
    if input.neighbors >= input.clients {
        return Err(ParamsError::TooManyNeighbors { neighbors: input.neighbors, clients: input.clients });
    }
    if input.vector_len == 0 {
        return Err(ParamsError::EmptyVector);
    }
    if input.scope_len > input.vector_len {
        return Err(ParamsError::ScopeTooLarge { scope_len: input.scope_len, vector_len: input.vector_len });
    }
    Ring::new(input.ring_bits)?;
    crate::crypto::Seed::check_kappa_bits(input.kappa)?;
    if input.frac_bits >= input.ring_bits - 1 {
        return Err(ParamsError::FracBits { frac_bits: input.frac_bits, ring_bits: input.ring_bits });
    }
    if !(input.lambda >= 0.0) {
        return Err(ParamsError::NegativeLambda(input.lambda));
    }
    let (ell, delta_max) = rule.derive(input.decryptors);
    Ok(ProtocolParams {
        clients: input.clients,
        decryptors: input.decryptors,
        neighbors: input.neighbors,
        vector_len: input.vector_len,
        scope_len: input.scope_len,
        ring_bits: input.ring_bits,
        frac_bits: input.frac_bits,
        kappa: input.kappa,
        t: input.t,
        t_prime: floor_count(input.eta_c, input.clients) + input.t,
        ell,
        delta_max,
        eta_c: input.eta_c,
        eta_d: input.eta_d,
        delta_d: input.delta_d,
        lambda: input.lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareCountReport {
    pub recovery_feasible: bool,
    pub security_holds: bool,
}

/// Evaluates, on integer head-counts,
/// recovery: `Δ_max·⌊(1−δ−η)D⌋ ≥ ⌊δD⌋·(ℓ−⌊ηD⌋)` and
/// security: `Δ_max·⌊(1−δ−η)D⌋ < ⌊(1−η)D⌋·(ℓ−⌊ηD⌋)`.
pub fn check_recovery_security(d: usize, ell: usize, delta_max: usize, delta_d: f64, eta_d: f64) -> ShareCountReport {
    let dropped = floor_count(delta_d, d) as i128;
    let colluding = floor_count(eta_d, d) as i128;
    let honest_alive = floor_count(1.0 - delta_d - eta_d, d) as i128;
    let non_colluding = floor_count(1.0 - eta_d, d) as i128;
    let needed = ell as i128 - colluding;
    let released = delta_max as i128 * honest_alive;
    ShareCountReport {
        recovery_feasible: released >= dropped * needed,
        security_holds: released < non_colluding * needed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: &'static str,
    pub d: usize,
    pub delta_d: f64,
    pub eta_d: f64,
    pub ell: usize,
    pub delta_max: usize,
    pub recovery_feasible: bool,
    pub security_holds: bool,
}

impl SweepRow {
    pub fn is_counterexample(&self) -> bool {
        !(self.recovery_feasible && self.security_holds)
    }
}

/// Every `(D, δ_D, η_D)` with `D` in `d_range`, rates on a `step` grid and
/// `δ_D + η_D < 1/3`.
pub fn sweep_parameter_space(
    d_range: std::ops::RangeInclusive<usize>,
    step: f64,
    rule: ThresholdRule,
) -> Vec<SweepRow> {
    let grid: Vec<f64> = (0..).map(|i| i as f64 * step).take_while(|&r| r < 1.0 / 3.0).collect();
    let mut rows = Vec::new();
    for d in d_range {
        let (ell, delta_max) = rule.derive(d);
        for &delta_d in &grid {
            for &eta_d in &grid {
                if delta_d + eta_d >= 1.0 / 3.0 - 1e-12 {
                    continue;
                }
                let r = check_recovery_security(d, ell, delta_max, delta_d, eta_d);
                rows.push(SweepRow {
                    variant: rule.name(),
                    d,
                    delta_d,
                    eta_d,
                    ell,
                    delta_max,
                    recovery_feasible: r.recovery_feasible,
                    security_holds: r.security_holds,
                });
            }
        }
    }
    rows
}
