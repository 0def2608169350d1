#![allow(dead_code)]

use persec_core::harness::{GroupChoice, RunSpec, Schedule, WorkloadConfig};
use persec_core::params::ParamsInput;

/// C=32, D=9, K=1024, K′=256, t=3 at 95% sparsity.
pub fn small_spec(seed: u64) -> RunSpec {
    RunSpec {
        params: ParamsInput {
            clients: 32,
            decryptors: 9,
            neighbors: 8,
            vector_len: 1024,
            scope_len: 256,
            t: 3,
            ..ParamsInput::default()
        },
        workload: WorkloadConfig { sparsity: 0.95, ..WorkloadConfig::default() },
        group: GroupChoice::Ristretto255,
        schedule: Schedule::Parallel,
        master_seed: seed,
        ..RunSpec::default()
    }
}

/// D=12 variant with the given dropout rate.
pub fn dropout_spec(seed: u64, delta_d: f64) -> RunSpec {
    let mut s = small_spec(seed);
    s.params.decryptors = 12;
    s.params.delta_d = delta_d;
    s
}
