//! Malicious-server behaviors, collusion sets and the leakage oracle.
//!
//! The oracle implements the adversary's knowledge closure: a mask term
//! `PRG(r_{i,v})` is known when client `i` or decryptor `v` colludes, or when
//! at least `ℓ` distinct holders' shares of `r_{i,v}` are known (released to
//! the server or held by colluding decryptors). Known terms are evaluated
//! from the simulation's ground-truth seeds, which equal what reconstruction
//! would return.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{Prg, Seed};
use crate::params::ProtocolParams;
use crate::protocol::{Selection, ServerBehavior, ServerView, UserId};
use crate::ring::{IndicatorSet, MaskScope, RingVector};

/// Indices to add to one client's forwarded indicator set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Forgery {
    pub index: u32,
    /// Client positions (into the sorted client list) falsely credited.
    pub fake_clients: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Honest,
    /// Credit `fake_clients` with every target index.
    ForgeIndicators { targets: Vec<u32>, fake_clients: Vec<usize> },
    /// Per-index forgeries, e.g. from [`plan_threshold_forgeries`].
    ForgeEach { forgeries: Vec<Forgery> },
    /// Pick up to `max_targets` under-threshold indices and inflate each to
    /// exactly `t′` contributors.
    InflateToThreshold { max_targets: usize },
    /// List these live decryptors in `V` alongside the true dropouts.
    DisguiseDropouts { victims: Vec<usize> },
    /// These colluding decryptors skip the Unmask phase.
    WithholdEmk { decryptors: Vec<usize> },
}

/// Adversary model of a run; all members are positions into the sorted
/// client / decryptor lists of the round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryConfig {
    pub behavior: Behavior,
    pub colluding_clients: Vec<usize>,
    pub colluding_decryptors: Vec<usize>,
    /// Decryptors that drop before answering the Unmask request.
    pub dropouts: Vec<usize>,
    /// Decryptors that answer Unmask but drop before Dropout Recovery.
    pub late_dropouts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("{field}: {count} members exceed the bound {max}")]
    TooMany { field: &'static str, count: usize, max: usize },
    #[error("{field}: position {position} out of range for {len} parties")]
    OutOfRange { field: &'static str, position: usize, len: usize },
    #[error("{field}: duplicate position {position}")]
    Duplicate { field: &'static str, position: usize },
    #[error("decryptor {0} is both dropped and colluding")]
    DroppedAndColluding(usize),
    #[error("withholding decryptor {0} is not colluding")]
    WithholderNotColluding(usize),
    #[error("target index {0} lies outside the mask scope")]
    TargetOutsideScope(u32),
}

fn check_set(field: &'static str, v: &[usize], len: usize, max: usize) -> Result<(), AdversaryError> {
    let mut seen = BTreeSet::new();
    for &p in v {
        if p >= len {
            return Err(AdversaryError::OutOfRange { field, position: p, len });
        }
        if !seen.insert(p) {
            return Err(AdversaryError::Duplicate { field, position: p });
        }
    }
    if v.len() > max {
        return Err(AdversaryError::TooMany { field, count: v.len(), max });
    }
    Ok(())
}

impl AdversaryConfig {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn validate(&self, params: &ProtocolParams, scope: &MaskScope) -> Result<(), AdversaryError> {
        let (c, d) = (params.clients, params.decryptors);
        let max_cc = crate::params::floor_count(params.eta_c, c);
        check_set("colluding_clients", &self.colluding_clients, c, max_cc)?;
        check_set("colluding_decryptors", &self.colluding_decryptors, d, params.max_colluding_decryptors())?;
        let mut dropped = self.dropouts.clone();
        dropped.extend(&self.late_dropouts);
        check_set("dropouts", &dropped, d, params.max_dropouts())?;
        if let Some(&p) = dropped.iter().find(|p| self.colluding_decryptors.contains(p)) {
            return Err(AdversaryError::DroppedAndColluding(p));
        }
        match &self.behavior {
            Behavior::Honest | Behavior::InflateToThreshold { .. } => {}
            Behavior::ForgeIndicators { targets, fake_clients } => {
                check_set("fake_clients", fake_clients, c, c)?;
                if let Some(&k) = targets.iter().find(|&&k| !scope.contains(k)) {
                    return Err(AdversaryError::TargetOutsideScope(k));
                }
            }
            Behavior::ForgeEach { forgeries } => {
                for f in forgeries {
                    check_set("fake_clients", &f.fake_clients, c, c)?;
                    if !scope.contains(f.index) {
                        return Err(AdversaryError::TargetOutsideScope(f.index));
                    }
                }
            }
            Behavior::DisguiseDropouts { victims } => check_set("victims", victims, d, d)?,
            Behavior::WithholdEmk { decryptors } => {
                check_set("withhold", decryptors, d, d)?;
                if let Some(&p) = decryptors.iter().find(|p| !self.colluding_decryptors.contains(p)) {
                    return Err(AdversaryError::WithholderNotColluding(p));
                }
            }
        }
        Ok(())
    }

    /// Forgeries this run will apply, resolving automatic planning against
    /// the true indicator sets.
    pub fn forgeries(&self, params: &ProtocolParams, scope: &MaskScope, indicators: &[IndicatorSet]) -> Vec<Forgery> {
        match &self.behavior {
            Behavior::ForgeIndicators { targets, fake_clients } => targets
                .iter()
                .map(|&index| Forgery { index, fake_clients: fake_clients.clone() })
                .collect(),
            Behavior::ForgeEach { forgeries } => forgeries.clone(),
            Behavior::InflateToThreshold { max_targets } => {
                plan_threshold_forgeries(params, scope, indicators, &self.colluding_clients, *max_targets)
            }
            _ => Vec::new(),
        }
    }
}

/// Targets scope indices with `1 ≤ honest < t` contributors and credits
/// non-contributing clients (colluders first) until `|C[k]| = t′` exactly.
pub fn plan_threshold_forgeries(
    params: &ProtocolParams,
    scope: &MaskScope,
    indicators: &[IndicatorSet],
    colluding: &[usize],
    max_targets: usize,
) -> Vec<Forgery> {
    let colluding: BTreeSet<usize> = colluding.iter().copied().collect();
    let mut order: Vec<usize> = colluding.iter().copied().collect();
    order.extend((0..indicators.len()).filter(|i| !colluding.contains(i)));
    let mut out = Vec::new();
    for &k in scope.indices() {
        if out.len() == max_targets {
            break;
        }
        let contributors: Vec<usize> = (0..indicators.len()).filter(|&i| indicators[i].contains(k)).collect();
        let honest = contributors.iter().filter(|i| !colluding.contains(i)).count();
        if honest == 0 || honest >= params.t || contributors.len() >= params.t_prime {
            continue;
        }
        let need = params.t_prime - contributors.len();
        let fakes: Vec<usize> = order.iter().copied().filter(|i| !contributors.contains(i)).take(need).collect();
        if fakes.len() == need {
            out.push(Forgery { index: k, fake_clients: fakes });
        }
    }
    out
}

/// Inserts every forged index into the credited clients' sets; the
/// reports themselves are untouched.
pub fn forge_indicators(
    honest: &[(UserId, IndicatorSet)],
    forgeries: &BTreeMap<UserId, BTreeSet<u32>>,
) -> Vec<(UserId, IndicatorSet)> {
    honest
        .iter()
        .map(|(i, b)| match forgeries.get(i) {
            Some(extra) if !extra.is_empty() => {
                let mut all: BTreeSet<u32> = b.indices().iter().copied().collect();
                all.extend(extra);
                (*i, IndicatorSet::new(all.into_iter().collect()).expect("sorted set"))
            }
            _ => (*i, b.clone()),
        })
        .collect()
}

/// `V_claimed = V_true ∪ extra`, sorted.
pub fn disguise_dropouts(v_true: &[UserId], extra: &[UserId]) -> Vec<UserId> {
    let all: BTreeSet<UserId> = v_true.iter().chain(extra).copied().collect();
    all.into_iter().collect()
}

/// A [`ServerBehavior`] realizing an [`AdversaryConfig`] against concrete ids.
#[derive(Clone, Debug, Default)]
pub struct AdversarialServer {
    forgeries: BTreeMap<UserId, BTreeSet<u32>>,
    victims: Vec<UserId>,
}

impl AdversarialServer {
    pub fn new(config: &AdversaryConfig, selection: &Selection, forgeries: &[Forgery]) -> Self {
        let mut by_client: BTreeMap<UserId, BTreeSet<u32>> = BTreeMap::new();
        for f in forgeries {
            for &p in &f.fake_clients {
                by_client.entry(selection.clients[p]).or_default().insert(f.index);
            }
        }
        let victims = match &config.behavior {
            Behavior::DisguiseDropouts { victims } => victims.iter().map(|&p| selection.decryptors[p]).collect(),
            _ => Vec::new(),
        };
        Self { forgeries: by_client, victims }
    }
}

impl ServerBehavior for AdversarialServer {
    fn forward_indicators(&self, _decryptor: UserId, honest: &[(UserId, IndicatorSet)]) -> Vec<(UserId, IndicatorSet)> {
        forge_indicators(honest, &self.forgeries)
    }

    fn dropout_list(&self, missing: &[UserId]) -> Vec<UserId> {
        disguise_dropouts(missing, &self.victims)
    }
}

/// Secrets of the simulated round, used to evaluate known mask terms.
pub struct GroundTruth<'a> {
    pub selection: &'a Selection,
    /// Quantized updates in client order.
    pub updates: &'a [RingVector],
    /// `r_i` in client order.
    pub individual_seeds: &'a [Seed],
    /// `r_{i,u}` at `[i_pos][u_pos]`.
    pub decryptor_seeds: &'a [Vec<Seed>],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRow {
    pub index: u32,
    pub honest_contributors: usize,
    pub colluding_contributors: usize,
    /// Best value the adversary can derive for the honest sum; `None` is ⊥.
    pub server_view: Option<u64>,
    pub true_sum: u64,
    /// `server_view == true_sum`.
    pub leaked: bool,
    /// A leak at an index with `1 ≤ honest < t` contributors.
    pub violation: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub rows: Vec<AttackRow>,
    pub honest_decryptors: usize,
    /// Honest decryptors `v` whose every `r_{i,v}` is in the closure.
    pub honest_decryptors_exposed: usize,
    /// Decryptor-seed shares the server received in Dropout Recovery.
    pub recovery_shares_released: usize,
}

impl AttackOutcome {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }

    pub fn leaks(&self) -> usize {
        self.rows.iter().filter(|r| r.leaked).count()
    }
}

/// Computes, for each `target` scope index, the best value the adversary can
/// derive for the honest clients' sum and compares it with the truth.
pub fn measure_leakage(
    view: &ServerView<'_>,
    truth: &GroundTruth<'_>,
    params: &ProtocolParams,
    scope: &MaskScope,
    config: &AdversaryConfig,
    targets: &[u32],
) -> AttackOutcome {
    let sel = truth.selection;
    let ring = params.ring();
    let n = sel.clients.len();
    let d = sel.decryptors.len();
    let ell = params.ell;
    let cc: BTreeSet<usize> = config.colluding_clients.iter().copied().collect();
    let cd: BTreeSet<usize> = config.colluding_decryptors.iter().copied().collect();
    let client_pos: BTreeMap<UserId, usize> = sel.clients.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let dec_pos: BTreeMap<UserId, usize> = sel.decryptors.iter().enumerate().map(|(p, &u)| (u, p)).collect();

    // Holders whose share of r_i is known.
    let mut individual_holders: Vec<BTreeSet<usize>> = vec![cd.clone(); n];
    for (u, resp) in view.unmask_responses {
        for (i, _) in &resp.shares {
            if let (Some(&ip), Some(&up)) = (client_pos.get(i), dec_pos.get(u)) {
                individual_holders[ip].insert(up);
            }
        }
    }
    let individual_known: Vec<bool> =
        (0..n).map(|i| cc.contains(&i) || individual_holders[i].len() >= ell).collect();

    // Holders whose share of r_{i,v} is known, then the closure.
    let mut seed_holders: Vec<Vec<BTreeSet<usize>>> = vec![vec![cd.clone(); d]; n];
    let mut released = 0;
    for (u, resp) in view.recovery_responses {
        released += resp.shares.len();
        for (i, v, _) in &resp.shares {
            if let (Some(&ip), Some(&vp), Some(&up)) = (client_pos.get(i), dec_pos.get(v), dec_pos.get(u)) {
                seed_holders[ip][vp].insert(up);
            }
        }
    }
    let known = |i: usize, v: usize| cc.contains(&i) || cd.contains(&v) || seed_holders[i][v].len() >= ell;
    let honest_decryptors: Vec<usize> = (0..d).filter(|v| !cd.contains(v)).collect();
    let exposed = honest_decryptors.iter().filter(|&&v| (0..n).all(|i| known(i, v))).count();

    let mut prgs: BTreeMap<(usize, usize), Prg> = BTreeMap::new();
    let mut term = |i: usize, v: usize, k: u32| -> u64 {
        let prg = prgs
            .entry((i, v))
            .or_insert_with(|| Prg::new(&truth.decryptor_seeds[i][v], params.vector_len));
        ring.reduce(prg.element(k as usize).expect("index inside the vector"))
    };
    let mut individual_prgs: Vec<Prg> =
        truth.individual_seeds.iter().map(|s| Prg::new(s, params.vector_len)).collect();

    // Forwarded contributor sets per decryptor, as scope-index membership.
    let forwarded: BTreeMap<usize, Vec<&IndicatorSet>> = view
        .forwarded
        .iter()
        .filter_map(|(u, sets)| {
            let up = *dec_pos.get(u)?;
            let mut by_pos: Vec<&IndicatorSet> = Vec::with_capacity(n);
            let lookup: BTreeMap<UserId, &IndicatorSet> = sets.iter().map(|(i, b)| (*i, b)).collect();
            for &i in &sel.clients {
                by_pos.push(lookup.get(&i).copied()?);
            }
            Some((up, by_pos))
        })
        .collect();

    let all_individual = individual_known.iter().all(|&b| b);
    let mut rows = Vec::with_capacity(targets.len());
    for &k in targets {
        debug_assert!(scope.contains(k));
        let ku = k as usize;
        let contributors: Vec<usize> = (0..n).filter(|&i| truth.updates[i].get(ku) != 0).collect();
        let honest: Vec<usize> = contributors.iter().copied().filter(|i| !cc.contains(i)).collect();
        let colluding_count = contributors.len() - honest.len();
        let true_sum = honest.iter().fold(0u64, |acc, &i| ring.add(acc, truth.updates[i].get(ku)));

        let view_value = (|| {
            if contributors.is_empty() || !all_individual {
                return None;
            }
            let agg = view.aggregate?;
            let mut y = agg.get(ku);
            for p in individual_prgs.iter_mut() {
                y = ring.sub(y, ring.reduce(p.element(ku).expect("index inside the vector")));
            }
            for v in 0..d {
                let exact = contributors.iter().all(|&i| known(i, v));
                let t = if exact {
                    contributors.iter().fold(0u64, |acc, &i| ring.add(acc, term(i, v, k)))
                } else {
                    let u = sel.decryptors[v];
                    let emk = view.unmask_responses.get(&u)?.emk.get(scope.position(k)?)?;
                    let sets = forwarded.get(&v)?;
                    let mut t = emk;
                    for i in 0..n {
                        let in_forwarded = sets[i].contains(k);
                        let in_true = contributors.contains(&i);
                        if in_forwarded != in_true && known(i, v) {
                            t = if in_forwarded { ring.sub(t, term(i, v, k)) } else { ring.add(t, term(i, v, k)) };
                        }
                    }
                    t
                };
                y = ring.sub(y, t);
            }
            for &i in contributors.iter().filter(|i| cc.contains(i)) {
                y = ring.sub(y, truth.updates[i].get(ku));
            }
            Some(y)
        })();

        let leaked = view_value == Some(true_sum);
        rows.push(AttackRow {
            index: k,
            honest_contributors: honest.len(),
            colluding_contributors: colluding_count,
            server_view: view_value,
            true_sum,
            leaked,
            violation: leaked && !honest.is_empty() && honest.len() < params.t,
        });
    }

    AttackOutcome {
        rows,
        honest_decryptors: honest_decryptors.len(),
        honest_decryptors_exposed: exposed,
        recovery_shares_released: released,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forging_adds_targets_only_to_credited_clients() {
        let honest = vec![(1, IndicatorSet::new(vec![2, 5]).unwrap()), (2, IndicatorSet::empty())];
        let mut f = BTreeMap::new();
        f.insert(2, BTreeSet::from([5u32, 7]));
        let out = forge_indicators(&honest, &f);
        assert_eq!(out[0], honest[0]);
        assert_eq!(out[1].1.indices(), &[5, 7]);
        assert_eq!(forge_indicators(&honest, &BTreeMap::new()), honest);
    }

    #[test]
    fn disguise_is_a_sorted_union() {
        assert_eq!(disguise_dropouts(&[9, 3], &[3, 4]), vec![3, 4, 9]);
        assert_eq!(disguise_dropouts(&[9], &[]), vec![9]);
    }
}
