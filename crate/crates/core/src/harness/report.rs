use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RoundResult, RunSpec, Transcript};
use crate::params::ProtocolParams;
use crate::protocol::{Selection, UserId};
use crate::ring::RevealedAggregate;

/// One metrics row per (run, role, phase, counter).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run: u64,
    pub role: String,
    pub phase: String,
    pub counter: String,
    pub value: u64,
}

/// One attack row per (run, scope index).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackCsvRow {
    pub run: u64,
    pub index: u32,
    pub honest_contributors: usize,
    pub colluding_contributors: usize,
    /// Empty for ⊥.
    pub server_view: Option<u64>,
    pub true_sum: u64,
    pub leaked: bool,
    pub violation: bool,
}

pub fn metric_rows(run: u64, result: &RoundResult) -> Vec<MetricRow> {
    result
        .ledger
        .rows()
        .into_iter()
        .map(|(role, phase, counter, value)| MetricRow {
            run,
            role: role.name().into(),
            phase: phase.name().into(),
            counter: counter.into(),
            value,
        })
        .collect()
}

pub fn attack_rows(run: u64, result: &RoundResult) -> Vec<AttackCsvRow> {
    result
        .attack
        .rows
        .iter()
        .map(|r| AttackCsvRow {
            run,
            index: r.index,
            honest_contributors: r.honest_contributors,
            colluding_contributors: r.colluding_contributors,
            server_view: r.server_view,
            true_sum: r.true_sum,
            leaked: r.leaked,
            violation: r.violation,
        })
        .collect()
}

fn aggregate_digest(out: &RevealedAggregate) -> String {
    let mut h = Sha256::new();
    for k in 0..out.len() {
        match out.get(k) {
            Some(v) => {
                h.update([1]);
                h.update(v.to_be_bytes());
            }
            None => h.update([0]),
        }
    }
    hex::encode(h.finalize())
}

/// Per-run JSON summary; embeds the resolved spec so the run can be redone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub spec: RunSpec,
    pub params: ProtocolParams,
    pub selection: Selection,
    pub status: String,
    pub abort_phase: Option<String>,
    pub abort_cause: Option<String>,
    pub entered_recovery: bool,
    pub claimed_dropouts: Vec<UserId>,
    pub scope_len: usize,
    pub revealed_in_scope: usize,
    pub expected_revealed_in_scope: usize,
    pub oracle_match: bool,
    pub leaks: usize,
    pub violations: usize,
    pub honest_decryptors_exposed: usize,
    pub recovery_shares_released: usize,
    pub messages: usize,
    pub transcript_bytes: u64,
    pub transcript_sha256: String,
    pub aggregate_sha256: Option<String>,
}

impl RunSummary {
    pub fn new(spec: &RunSpec, result: &RoundResult, transcript: &Transcript) -> Self {
        let params = spec.derive().expect("spec already ran");
        let oracle = &result.oracle;
        let (status, abort_phase, abort_cause, revealed, oracle_match, digest) = match &result.outcome {
            Ok(out) => {
                let revealed = oracle.scope.iter().filter(|&&k| out.is_revealed(k as usize)).count();
                ("completed", None, None, revealed, oracle.matches(out), Some(aggregate_digest(out)))
            }
            Err(a) => ("aborted", Some(a.phase.name().to_string()), Some(a.cause.to_string()), 0, false, None),
        };
        Self {
            spec: spec.clone(),
            params,
            selection: result.selection.clone(),
            status: status.into(),
            abort_phase,
            abort_cause,
            entered_recovery: result.entered_recovery,
            claimed_dropouts: result.claimed_dropouts.clone(),
            scope_len: oracle.scope.len(),
            revealed_in_scope: revealed,
            expected_revealed_in_scope: oracle.expected_revealed_in_scope(),
            oracle_match,
            leaks: result.attack.leaks(),
            violations: result.attack.violations(),
            honest_decryptors_exposed: result.attack.honest_decryptors_exposed,
            recovery_shares_released: result.attack.recovery_shares_released,
            messages: transcript.records.len(),
            transcript_bytes: transcript.total_bytes(),
            transcript_sha256: hex::encode(Sha256::digest(transcript.to_bytes())),
            aggregate_sha256: digest,
        }
    }
}
