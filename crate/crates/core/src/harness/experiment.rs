use serde::{Deserialize, Serialize};

use super::{generate_updates, party_rng, HarnessError, OverlapModel, WorkloadConfig};
use crate::params::floor_count;

/// Index-selection experiment over the mask scope only: how much of `K′`
/// clears `t′ = ⌊η_C·C⌋ + t` under a given overlap model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractionExperiment {
    pub clients: usize,
    pub scope_len: usize,
    pub eta_c: f64,
    pub workload: WorkloadConfig,
    pub t_grid: Vec<usize>,
    pub seed: u64,
}

impl Default for FractionExperiment {
    fn default() -> Self {
        Self {
            clients: 100,
            scope_len: 4096,
            eta_c: 0.0,
            workload: WorkloadConfig::default(),
            t_grid: (1..=40).collect(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionPoint {
    pub t: usize,
    pub t_prime: usize,
    pub fraction: f64,
}

/// Fraction of positions whose contributor count reaches `t′` for each `t`.
pub fn revealed_fraction(counts: &[usize], clients: usize, eta_c: f64, t_grid: &[usize]) -> Vec<FractionPoint> {
    let base = floor_count(eta_c, clients);
    t_grid
        .iter()
        .map(|&t| {
            let t_prime = base + t;
            let hit = counts.iter().filter(|&&c| c >= t_prime).count();
            let fraction = if counts.is_empty() { 0.0 } else { hit as f64 / counts.len() as f64 };
            FractionPoint { t, t_prime, fraction }
        })
        .collect()
}

pub fn revealed_fraction_experiment(exp: &FractionExperiment) -> Result<Vec<FractionPoint>, HarnessError> {
    let tag = match exp.workload.overlap {
        OverlapModel::Iid => "fraction/iid",
        OverlapModel::Dirichlet { .. } => "fraction/dirichlet",
    };
    let mut rng = party_rng(exp.seed, tag, 0, 0);
    let updates = generate_updates(&exp.workload, exp.clients, exp.scope_len, &mut rng)?;
    let mut counts = vec![0usize; exp.scope_len];
    for x in &updates {
        for (c, &v) in counts.iter_mut().zip(x) {
            *c += (v != 0.0) as usize;
        }
    }
    Ok(revealed_fraction(&counts, exp.clients, exp.eta_c, &exp.t_grid))
}
