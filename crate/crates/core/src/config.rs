//! Experiment configuration: a TOML front-end over [`RunSpec`], plus the
//! sweep and feasibility-table drivers built on it.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryConfig, AdversaryError, Behavior};
use crate::cost::CostLedger;
use crate::harness::{GroupChoice, RunSpec, Schedule, Simulation, WorkloadConfig};
use crate::params::{floor_count, ParamsError, ParamsInput, ThresholdRule};
use crate::protocol::PublicRandomness;
use crate::ring::MaskScope;

/// A validation failure, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl ToString) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsBlock {
    pub decryptors: usize,
    pub neighbors: usize,
    pub t: usize,
    pub eta_c: f64,
    pub eta_d: f64,
    pub delta_d: f64,
    pub ring_bits: u32,
    pub frac_bits: u32,
    pub kappa: u32,
    pub lambda: f64,
    pub threshold_rule: ThresholdRule,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        let p = ParamsInput::default();
        Self {
            decryptors: p.decryptors,
            neighbors: p.neighbors,
            t: p.t,
            eta_c: p.eta_c,
            eta_d: p.eta_d,
            delta_d: p.delta_d,
            ring_bits: p.ring_bits,
            frac_bits: p.frac_bits,
            kappa: p.kappa,
            lambda: p.lambda,
            threshold_rule: ThresholdRule::default(),
        }
    }
}

/// Client population, vector shape and the synthetic update model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadBlock {
    pub clients: usize,
    pub vector_len: usize,
    /// `K′ / K`, in `(0, 1]`.
    pub mask_rate: f64,
    #[serde(flatten)]
    pub model: WorkloadConfig,
}

impl Default for WorkloadBlock {
    fn default() -> Self {
        Self { clients: 64, vector_len: 65_536, mask_rate: 0.1, model: WorkloadConfig::default() }
    }
}

impl WorkloadBlock {
    pub fn scope_len(&self) -> usize {
        ((self.mask_rate * self.vector_len as f64).round() as usize).max(1).min(self.vector_len)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsBlock {
    /// Run `n` uses master seed `master + n`.
    pub master: u64,
    pub runs: u64,
    pub round: u64,
    /// 32-byte hex beacon value; derived from `master` when absent.
    pub randomness: Option<PublicRandomness>,
}

impl Default for SeedsBlock {
    fn default() -> Self {
        Self { master: 0, runs: 1, round: 0, randomness: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionBlock {
    pub group: GroupChoice,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Falls back to `$PERSEC_OUT_DIR`, then `persec-out`.
    pub dir: Option<PathBuf>,
    pub transcript: bool,
    /// Also write one attack row per scope index.
    pub attack_rows: bool,
}

pub const OUT_DIR_ENV: &str = "PERSEC_OUT_DIR";

impl OutputBlock {
    pub fn resolved_dir(&self) -> PathBuf {
        self.dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("persec-out"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Clients,
    MaskRate,
    DropoutRate,
    T,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Clients => "clients",
            SweepAxis::MaskRate => "mask_rate",
            SweepAxis::DropoutRate => "dropout_rate",
            SweepAxis::T => "t",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "clients" => Ok(SweepAxis::Clients),
            "mask_rate" => Ok(SweepAxis::MaskRate),
            "dropout_rate" => Ok(SweepAxis::DropoutRate),
            "t" => Ok(SweepAxis::T),
            _ => Err(format!("unknown sweep axis `{s}` (clients, mask_rate, dropout_rate, t)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremBlock {
    pub d_min: usize,
    pub d_max: usize,
    pub step: f64,
    pub rule: ThresholdRule,
}

impl Default for TheoremBlock {
    fn default() -> Self {
        Self { d_min: 3, d_max: 200, step: 0.02, rule: ThresholdRule::FloorCeil }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsBlock,
    pub workload: WorkloadBlock,
    pub adversary: AdversaryConfig,
    pub seeds: SeedsBlock,
    pub execution: ExecutionBlock,
    pub output: OutputBlock,
    pub sweep: Option<SweepBlock>,
    pub theorem: TheoremBlock,
}

fn adversary_path(e: &AdversaryError) -> String {
    let field = match e {
        AdversaryError::TooMany { field, .. }
        | AdversaryError::OutOfRange { field, .. }
        | AdversaryError::Duplicate { field, .. } => *field,
        AdversaryError::DroppedAndColluding(_) => "dropouts",
        AdversaryError::WithholderNotColluding(_) => "behavior.decryptors",
        AdversaryError::TargetOutsideScope(_) => "behavior.targets",
    };
    match field {
        "fake_clients" | "victims" => format!("adversary.behavior.{field}"),
        "withhold" => "adversary.behavior.decryptors".into(),
        f => format!("adversary.{f}"),
    }
}

fn params_path(e: &ParamsError) -> String {
    match e {
        ParamsError::CorruptionBound { .. } => "params.delta_d + params.eta_d".into(),
        ParamsError::RateOutOfRange { field, .. } => format!("params.{field}"),
        ParamsError::ThresholdTooSmall(_) => "params.t".into(),
        ParamsError::TooFewClients { .. } => "workload.clients".into(),
        ParamsError::TooFewDecryptors(_) => "params.decryptors".into(),
        ParamsError::TooManyNeighbors { .. } => "params.neighbors".into(),
        ParamsError::ScopeTooLarge { .. } => "workload.mask_rate".into(),
        ParamsError::EmptyVector => "workload.vector_len".into(),
        ParamsError::Ring(_) => "params.ring_bits".into(),
        ParamsError::Kappa(_) => "params.kappa".into(),
        ParamsError::FracBits { .. } => "params.frac_bits".into(),
        ParamsError::NegativeLambda(_) => "params.lambda".into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::new("<config>", e.message().trim()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn params_input(&self) -> ParamsInput {
        let p = &self.params;
        ParamsInput {
            clients: self.workload.clients,
            decryptors: p.decryptors,
            neighbors: p.neighbors,
            vector_len: self.workload.vector_len,
            scope_len: self.workload.scope_len(),
            ring_bits: p.ring_bits,
            frac_bits: p.frac_bits,
            kappa: p.kappa,
            t: p.t,
            eta_c: p.eta_c,
            eta_d: p.eta_d,
            delta_d: p.delta_d,
            lambda: p.lambda,
        }
    }

    /// Checks every block; parameters go through the same derivation the
    /// protocol uses.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = &self.workload;
        if !(w.mask_rate > 0.0 && w.mask_rate <= 1.0) {
            return Err(ConfigError::new("workload.mask_rate", format!("{} must lie in (0, 1]", w.mask_rate)));
        }
        if !(0.0..1.0).contains(&w.model.sparsity) {
            return Err(ConfigError::new("workload.sparsity", format!("{} must lie in [0, 1)", w.model.sparsity)));
        }
        w.model.validate().map_err(|e| ConfigError::new("workload", e))?;
        if self.seeds.runs == 0 {
            return Err(ConfigError::new("seeds.runs", "must be at least 1"));
        }
        let params = crate::params::derive_params_with(&self.params_input(), self.params.threshold_rule)
            .map_err(|e| ConfigError::new(params_path(&e), e))?;
        let scope = MaskScope::last(params.vector_len, params.scope_len);
        self.adversary.validate(&params, &scope).map_err(|e| ConfigError::new(adversary_path(&e), e))?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ConfigError::new("sweep.values", "must list at least one value"));
            }
        }
        if !(self.theorem.step > 0.0) {
            return Err(ConfigError::new("theorem.step", "must be positive"));
        }
        Ok(())
    }

    /// The fully resolved spec of run `n`.
    pub fn run_spec(&self, n: u64) -> RunSpec {
        let master_seed = self.seeds.master.wrapping_add(n);
        RunSpec {
            params: self.params_input(),
            threshold_rule: self.params.threshold_rule,
            workload: self.workload.model.clone(),
            adversary: self.adversary.clone(),
            group: self.execution.group,
            schedule: self.execution.schedule,
            randomness: self.seeds.randomness.unwrap_or_else(|| PublicRandomness::from_u64(master_seed)),
            master_seed,
            round: self.seeds.round,
            extra_users: 0,
        }
    }

    /// This config with `axis` set to `value`. A dropout rate also schedules
    /// the first `⌊rate·D⌋` non-colluding decryptors to drop.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::Clients => c.workload.clients = value as usize,
            SweepAxis::MaskRate => c.workload.mask_rate = value,
            SweepAxis::T => c.params.t = value as usize,
            SweepAxis::DropoutRate => {
                c.params.delta_d = value;
                let n = floor_count(value, c.params.decryptors);
                let colluding = &c.adversary.colluding_decryptors;
                let withheld: &[usize] = match &c.adversary.behavior {
                    Behavior::WithholdEmk { decryptors } => decryptors,
                    _ => &[],
                };
                c.adversary.dropouts = (0..c.params.decryptors)
                    .filter(|d| !colluding.contains(d) && !withheld.contains(d))
                    .take(n)
                    .collect();
                c.adversary.late_dropouts.clear();
            }
        }
        c
    }
}

/// One (axis value, run) point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub run: u64,
    /// `completed`, `aborted` or `invalid`.
    pub status: &'static str,
    pub abort_phase: Option<String>,
    pub cause: Option<String>,
    pub scope_len: usize,
    pub revealed_in_scope: usize,
    pub oracle_match: bool,
    pub ledger: CostLedger,
}

impl SweepPoint {
    pub fn revealed_fraction(&self) -> f64 {
        if self.scope_len == 0 {
            0.0
        } else {
            self.revealed_in_scope as f64 / self.scope_len as f64
        }
    }
}

fn sweep_point(cfg: &ExperimentConfig, axis: SweepAxis, value: f64, run: u64) -> SweepPoint {
    let invalid = |cause: String| SweepPoint {
        axis,
        value,
        run,
        status: "invalid",
        abort_phase: None,
        cause: Some(cause),
        scope_len: 0,
        revealed_in_scope: 0,
        oracle_match: false,
        ledger: CostLedger::new(),
    };
    let point = cfg.with_axis(axis, value);
    if let Err(e) = point.validate() {
        return invalid(e.to_string());
    }
    let out = match Simulation::run(&point.run_spec(run)) {
        Ok(out) => out,
        Err(e) => return invalid(e.to_string()),
    };
    let summary = out.summary();
    SweepPoint {
        axis,
        value,
        run,
        status: if summary.status == "completed" { "completed" } else { "aborted" },
        abort_phase: summary.abort_phase,
        cause: summary.abort_cause,
        scope_len: summary.scope_len,
        revealed_in_scope: summary.revealed_in_scope,
        oracle_match: summary.oracle_match,
        ledger: out.result.ledger,
    }
}

/// Runs every (value, run) point, in parallel; failing points are recorded
/// with their cause rather than stopping the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, sweep: &SweepBlock) -> Vec<SweepPoint> {
    let jobs: Vec<(f64, u64)> =
        sweep.values.iter().flat_map(|&v| (0..cfg.seeds.runs.max(1)).map(move |r| (v, r))).collect();
    jobs.par_iter().map(|&(v, r)| sweep_point(cfg, sweep.axis, v, r)).collect()
}
