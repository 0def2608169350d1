//! Deterministic round orchestration: message bus with byte accounting,
//! phase barriers, dropout injection, the plaintext oracle and experiments.

mod experiment;
mod ledger_check;
mod oracle;
mod report;
mod round;
mod transcript;
mod workload;

pub use experiment::{revealed_fraction, revealed_fraction_experiment, FractionExperiment, FractionPoint};
pub use ledger_check::{ledger_check, CellModel, LedgerCheckRow, TABLE2};
pub use oracle::{compute_oracle, OracleResult};
pub use report::{attack_rows, metric_rows, AttackCsvRow, MetricRow, RunSummary};
pub use round::{run_round, RoundResult, RoundSetup};
pub use transcript::{Record, Transcript, TRANSCRIPT_MAGIC};
pub use workload::{generate_updates, quantize_updates, OverlapModel, WorkloadConfig};

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::{AdversaryConfig, AdversaryError};
use crate::crypto::{Group, ModPrimeGroup, Ristretto};
use crate::params::{derive_params_with, ParamsError, ParamsInput, ProtocolParams, ThresholdRule};
use crate::protocol::{Abort, ProtocolError, PublicRandomness, UserId};
use crate::ring::{MaskScope, RingError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("workload: {0}")]
    Workload(String),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("expected {expected} client updates, got {got}")]
    UpdateCount { expected: usize, got: usize },
}

/// Order in which independent parties of one phase are executed. Outputs
/// are collected per party and delivered in canonical order, so every
/// schedule yields the same transcript.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Canonical,
    Shuffled { seed: u64 },
    Parallel,
}

impl Schedule {
    /// Evaluates `f(0..n)` under this schedule, returning results by index.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Schedule::Canonical => (0..n).map(f).collect(),
            Schedule::Parallel => (0..n).into_par_iter().map(f).collect(),
            Schedule::Shuffled { seed } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed ^ n as u64));
                let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
                for i in order {
                    out[i] = Some(f(i));
                }
                out.into_iter().map(|v| v.expect("every index visited")).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupChoice {
    #[default]
    Ristretto255,
    /// 64-bit safe-prime subgroup; fast but toy-strength.
    Modp64,
}

impl GroupChoice {
    pub fn build(self) -> Arc<dyn Group> {
        match self {
            GroupChoice::Ristretto255 => Arc::new(Ristretto),
            GroupChoice::Modp64 => Arc::new(ModPrimeGroup::safe_prime_64()),
        }
    }
}

/// Independent RNG stream for `(master seed, purpose, party, round)`.
pub fn party_rng(master_seed: u64, purpose: &str, party: UserId, round: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"persec/party-rng");
    h.update(master_seed.to_be_bytes());
    h.update((purpose.len() as u32).to_be_bytes());
    h.update(purpose.as_bytes());
    h.update(party.to_be_bytes());
    h.update(round.to_be_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Everything needed to reproduce one run; embedded in transcripts and
/// JSON summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub params: ParamsInput,
    pub threshold_rule: ThresholdRule,
    pub workload: WorkloadConfig,
    pub adversary: AdversaryConfig,
    pub group: GroupChoice,
    pub schedule: Schedule,
    pub randomness: PublicRandomness,
    pub master_seed: u64,
    pub round: u64,
    /// Registered users beyond `|C| + |D|`.
    pub extra_users: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            params: ParamsInput::default(),
            threshold_rule: ThresholdRule::default(),
            workload: WorkloadConfig::default(),
            adversary: AdversaryConfig::default(),
            group: GroupChoice::default(),
            schedule: Schedule::default(),
            randomness: PublicRandomness::from_u64(0),
            master_seed: 0,
            round: 0,
            extra_users: 0,
        }
    }
}

impl RunSpec {
    pub fn derive(&self) -> Result<ProtocolParams, HarnessError> {
        Ok(derive_params_with(&self.params, self.threshold_rule)?)
    }

    pub fn setup(&self) -> Result<RoundSetup, HarnessError> {
        let params = Arc::new(self.derive()?);
        let scope = Arc::new(MaskScope::last(params.vector_len, params.scope_len));
        let users = (params.clients + params.decryptors + self.extra_users) as UserId;
        Ok(RoundSetup {
            params,
            scope,
            group: self.group.build(),
            randomness: self.randomness,
            round: self.round,
            master_seed: self.master_seed,
            schedule: self.schedule,
            adversary: self.adversary.clone(),
            users: (0..users).collect(),
        })
    }
}

/// Output of [`Simulation::run`]: the round result plus its inputs.
pub struct RunOutput {
    pub spec: RunSpec,
    pub updates: Vec<crate::ring::RingVector>,
    pub result: RoundResult,
}

impl RunOutput {
    pub fn transcript(&self) -> Transcript {
        Transcript::new(&self.spec, self.result.records.clone())
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary::new(&self.spec, &self.result, &self.transcript())
    }

    pub fn outcome(&self) -> Result<&crate::ring::RevealedAggregate, &Abort> {
        self.result.outcome.as_ref()
    }
}

/// Runs a [`RunSpec`] end to end: synthesizes the workload from the master
/// seed, then executes the round.
pub struct Simulation;

impl Simulation {
    pub fn run(spec: &RunSpec) -> Result<RunOutput, HarnessError> {
        let setup = spec.setup()?;
        let p = &setup.params;
        let mut rng = party_rng(spec.master_seed, "workload", 0, spec.round);
        let raw = generate_updates(&spec.workload, p.clients, p.vector_len, &mut rng)?;
        let updates = quantize_updates(&raw, p)?;
        let result = run_round(&setup, &updates)?;
        Ok(RunOutput { spec: spec.clone(), updates, result })
    }

    /// Re-executes the run embedded in `bytes` (optionally under another
    /// schedule) and reports whether the transcript is reproduced exactly.
    pub fn replay(bytes: &[u8], schedule: Option<Schedule>) -> Result<(RunOutput, bool), HarnessError> {
        let original = Transcript::from_bytes(bytes)?;
        let mut spec = original.spec()?;
        if let Some(s) = schedule {
            spec.schedule = s;
        }
        let out = Simulation::run(&spec)?;
        let same = out.result.records == original.records;
        Ok((out, same))
    }
}
