use serde::Serialize;

use crate::cost::{CostLedger, Phase, Role};
use crate::params::ProtocolParams;

/// Asymptotic model of one ledger cell, totalled over the parties of the
/// role. `dropped` is the number of recovered decryptors.
#[derive(Clone, Copy)]
pub struct CellModel {
    pub role: Role,
    pub phase: Phase,
    pub counter: &'static str,
    /// Per-party bound as stated in the cost table.
    pub bound: &'static str,
    pub term: fn(&ProtocolParams, usize) -> f64,
}

fn f(v: usize) -> f64 {
    v as f64
}

pub const TABLE2: &[CellModel] = &[
    CellModel {
        role: Role::Client,
        phase: Phase::Setup,
        counter: "key_agreements",
        bound: "O(A+D)",
        term: |p, _| f(p.clients) * f(p.neighbors + p.decryptors),
    },
    CellModel {
        role: Role::Client,
        phase: Phase::Report,
        counter: "prg_elements",
        bound: "O(DK′+AK)",
        term: |p, _| f(p.clients) * (f(p.decryptors * p.scope_len) + f(p.neighbors * p.vector_len)),
    },
    CellModel {
        role: Role::Client,
        phase: Phase::Report,
        counter: "share_ops",
        bound: "O(D³)",
        term: |p, _| f(p.clients) * f(p.decryptors).powi(3),
    },
    CellModel {
        role: Role::Decryptor,
        phase: Phase::Setup,
        counter: "key_agreements",
        bound: "O(C)",
        term: |p, _| f(p.decryptors * p.clients),
    },
    CellModel {
        role: Role::Decryptor,
        phase: Phase::Unmask,
        counter: "prg_elements",
        bound: "O(CK′α)",
        term: |p, _| f(p.decryptors * p.clients * p.scope_len),
    },
    CellModel {
        role: Role::Decryptor,
        phase: Phase::Unmask,
        counter: "sym_ops",
        bound: "O(C)",
        term: |p, _| f(p.decryptors * p.clients),
    },
    CellModel {
        role: Role::Server,
        phase: Phase::Report,
        counter: "ring_ops",
        bound: "O(CK)",
        term: |p, _| f(p.clients * p.vector_len),
    },
    CellModel {
        role: Role::Server,
        phase: Phase::Unmask,
        counter: "share_ops",
        bound: "O(CD²)",
        term: |p, _| f(p.clients) * f(p.decryptors).powi(2),
    },
    CellModel {
        role: Role::Server,
        phase: Phase::DropRcv,
        counter: "share_ops",
        bound: "O(C·|V|·D²)",
        term: |p, v| f(p.clients * v) * f(p.decryptors).powi(2),
    },
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerCheckRow {
    pub role: Role,
    pub phase: Phase,
    pub counter: &'static str,
    pub bound: &'static str,
    pub sample: usize,
    pub expected_ratio: f64,
    pub observed_ratio: f64,
    /// `|observed / expected − 1|`.
    pub residual: f64,
    pub within_tolerance: bool,
}

/// Compares every sample against the first one, cell by cell: the counter
/// ratio should track the model-term ratio within `tolerance`. Cells whose
/// base counter is zero are skipped.
pub fn ledger_check(samples: &[(&ProtocolParams, usize, &CostLedger)], tolerance: f64) -> Vec<LedgerCheckRow> {
    let Some(&(p0, v0, l0)) = samples.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (n, &(p, v, l)) in samples.iter().enumerate().skip(1) {
        for m in TABLE2 {
            let base = l0.cell(m.role, m.phase).get(m.counter).unwrap_or(0);
            let term0 = (m.term)(p0, v0);
            if base == 0 || term0 == 0.0 {
                continue;
            }
            let observed = l.cell(m.role, m.phase).get(m.counter).unwrap_or(0) as f64 / base as f64;
            let expected = (m.term)(p, v) / term0;
            let residual = (observed / expected - 1.0).abs();
            out.push(LedgerCheckRow {
                role: m.role,
                phase: m.phase,
                counter: m.counter,
                bound: m.bound,
                sample: n,
                expected_ratio: expected,
                observed_ratio: observed,
                residual,
                within_tolerance: residual <= tolerance,
            });
        }
    }
    out
}
