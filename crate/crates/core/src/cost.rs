//! Unit-operation and byte counters per (role, phase).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Client,
    Decryptor,
    Server,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Setup,
    Report,
    Unmask,
    DropRcv,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Client, Role::Decryptor, Role::Server];

    pub fn name(self) -> &'static str {
        match self {
            Role::Client => "client",
            Role::Decryptor => "decryptor",
            Role::Server => "server",
        }
    }
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Setup, Phase::Report, Phase::Unmask, Phase::DropRcv];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::Report => "report",
            Phase::Unmask => "unmask",
            Phase::DropRcv => "droprcv",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unit costs: one PRF evaluation, one PRG output element, one symmetric
/// encryption or decryption, one ring addition; sharing or reconstructing a
/// secret among `|D|` holders is charged `|D|²` share operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub prf_evals: u64,
    pub prg_elements: u64,
    pub sym_ops: u64,
    pub share_ops: u64,
    pub ring_ops: u64,
    pub key_agreements: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

impl Counters {
    pub const NAMES: [&'static str; 8] = [
        "prf_evals",
        "prg_elements",
        "sym_ops",
        "share_ops",
        "ring_ops",
        "key_agreements",
        "bytes_sent",
        "bytes_received",
    ];

    pub fn values(&self) -> [u64; 8] {
        [
            self.prf_evals,
            self.prg_elements,
            self.sym_ops,
            self.share_ops,
            self.ring_ops,
            self.key_agreements,
            self.bytes_sent,
            self.bytes_received,
        ]
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        Self::NAMES.iter().position(|&n| n == name).map(|i| self.values()[i])
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|&v| v == 0)
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Counters) {
        self.prf_evals += o.prf_evals;
        self.prg_elements += o.prg_elements;
        self.sym_ops += o.sym_ops;
        self.share_ops += o.share_ops;
        self.ring_ops += o.ring_ops;
        self.key_agreements += o.key_agreements;
        self.bytes_sent += o.bytes_sent;
        self.bytes_received += o.bytes_received;
    }
}

/// Totals over all parties of a role, per phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    cells: BTreeMap<(Role, Phase), Counters>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cell(&self, role: Role, phase: Phase) -> Counters {
        self.cells.get(&(role, phase)).copied().unwrap_or_default()
    }

    pub fn cell_mut(&mut self, role: Role, phase: Phase) -> &mut Counters {
        self.cells.entry((role, phase)).or_default()
    }

    pub fn add(&mut self, role: Role, phase: Phase, c: Counters) {
        *self.cell_mut(role, phase) += c;
    }

    pub fn merge(&mut self, other: &CostLedger) {
        for (&(r, p), &c) in &other.cells {
            self.add(r, p, c);
        }
    }

    pub fn reset(&mut self) {
        self.cells.clear();
    }

    /// `(role, phase, counter, value)` for every cell, zeros included.
    pub fn rows(&self) -> Vec<(Role, Phase, &'static str, u64)> {
        let mut out = Vec::new();
        for role in Role::ALL {
            for phase in Phase::ALL {
                let c = self.cell(role, phase);
                for (name, value) in Counters::NAMES.iter().zip(c.values()) {
                    out.push((role, phase, *name, value));
                }
            }
        }
        out
    }

    pub fn phase_total(&self, phase: Phase) -> Counters {
        let mut total = Counters::default();
        for role in Role::ALL {
            total += self.cell(role, phase);
        }
        total
    }
}
