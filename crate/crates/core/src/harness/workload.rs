use rand::RngCore;
use rand_distr::{Dirichlet, Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::params::ProtocolParams;
use crate::ring::{lambda_for_sparsity, sparsify, Quantizer, RingVector};

/// How clients' important coordinates overlap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OverlapModel {
    /// Every client draws magnitudes around one shared importance profile.
    Iid,
    /// Each client mixes `labels` profiles with `Dir(alpha)` weights; small
    /// `alpha` concentrates clients on few labels.
    Dirichlet { alpha: f64, labels: usize },
}

impl OverlapModel {
    /// Label-skewed clients: ten labels, `Dir(0.1)` mixing weights.
    pub fn skewed() -> Self {
        OverlapModel::Dirichlet { alpha: 0.1, labels: 10 }
    }
}

/// Synthetic sparse-update model: `x_i[k] = scale · W_i[k] · g`, with
/// `g ~ N(0, 1)`, `W` log-normal profiles, then top-magnitude sparsification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub overlap: OverlapModel,
    /// Target fraction of zeros per client, in `[0, 1)`.
    pub sparsity: f64,
    /// σ of the log-normal importance profiles.
    pub profile_sigma: f64,
    pub scale: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self { overlap: OverlapModel::Iid, sparsity: 0.95, profile_sigma: 0.5, scale: 0.05 }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Workload(m));
        if !(0.0..1.0).contains(&self.sparsity) {
            return bad(format!("sparsity {} outside [0, 1)", self.sparsity));
        }
        if !(self.profile_sigma >= 0.0 && self.profile_sigma.is_finite()) {
            return bad(format!("profile_sigma {} must be finite and non-negative", self.profile_sigma));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale {} must be positive", self.scale));
        }
        if let OverlapModel::Dirichlet { alpha, labels } = self.overlap {
            if !(alpha > 0.0 && alpha.is_finite()) || labels == 0 {
                return bad(format!("dirichlet needs alpha > 0 and labels ≥ 1 (got {alpha}, {labels})"));
            }
        }
        Ok(())
    }
}

fn profile(len: usize, sigma: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let d = LogNormal::new(0.0, sigma).expect("validated sigma");
    (0..len).map(|_| d.sample(rng)).collect()
}

/// Real-valued sparse updates, one per client.
pub fn generate_updates(
    cfg: &WorkloadConfig,
    clients: usize,
    len: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    cfg.validate()?;
    let weights: Vec<Vec<f64>> = match cfg.overlap {
        OverlapModel::Iid => {
            let w = profile(len, cfg.profile_sigma, rng);
            vec![w; clients]
        }
        OverlapModel::Dirichlet { alpha, labels } => {
            let bases: Vec<Vec<f64>> = (0..labels).map(|_| profile(len, cfg.profile_sigma, rng)).collect();
            let mixture: Vec<Vec<f64>> = if labels == 1 {
                vec![vec![1.0]; clients]
            } else {
                let dir = Dirichlet::new(&vec![alpha; labels]).map_err(|e| HarnessError::Workload(e.to_string()))?;
                (0..clients).map(|_| dir.sample(rng)).collect()
            };
            mixture
                .iter()
                .map(|q| (0..len).map(|k| q.iter().zip(&bases).map(|(a, b)| a * b[k]).sum()).collect())
                .collect()
        }
    };
    Ok(weights
        .iter()
        .map(|w| {
            let x: Vec<f64> = w
                .iter()
                .map(|&wk| {
                    let g: f64 = StandardNormal.sample(rng);
                    cfg.scale * wk * g
                })
                .collect();
            sparsify(&x, lambda_for_sparsity(&x, cfg.sparsity))
        })
        .collect())
}

pub fn quantize_updates(raw: &[Vec<f64>], params: &ProtocolParams) -> Result<Vec<RingVector>, HarnessError> {
    let q = Quantizer::new(params.ring(), params.frac_bits, params.clients);
    raw.iter().map(|x| Ok(q.quantize(x)?)).collect()
}
