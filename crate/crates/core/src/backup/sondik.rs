use serde::{Deserialize, Serialize};

use super::alpha::{AlphaSet, AlphaVector};
use super::prune::prune;
use crate::error::{Error, Result};
use crate::model::ArmModel;

/// Per-observation projections of a previous alpha set:
///
/// proj[a][o][i](s) = β ρ(o | s, a) Σ_{s'} p^a(s, s') α_i(s')
///
/// The observation is tied to the pre-transition state `s`, so
/// ⟨proj[a][o][i], ω⟩ = β P(o | ω, a) ⟨α_i, τ(ω, a, o)⟩.
#[derive(Debug, Clone)]
pub struct Projections {
    num_states: usize,
    num_obs: usize,
    num_prev: usize,
    data: Vec<f64>,
}

impl Projections {
    pub fn new(prev: &AlphaSet, model: &ArmModel, discount: f64) -> Self {
        let (m, j, k, n) = (model.num_states(), model.num_actions(), model.num_observations(), prev.len());
        let mut data = vec![0.0; j * k * n * m];
        let mut expected = vec![0.0; m];
        for a in 0..j {
            for (i, alpha) in prev.vectors.iter().enumerate() {
                for (s, e) in expected.iter_mut().enumerate() {
                    *e = model
                        .transition_row(a, s)
                        .iter()
                        .zip(&alpha.weights)
                        .map(|(p, v)| p * v)
                        .sum();
                }
                for o in 0..k {
                    let base = ((a * k + o) * n + i) * m;
                    for s in 0..m {
                        data[base + s] = discount * model.observation(a, s, o) * expected[s];
                    }
                }
            }
        }
        Self {
            num_states: m,
            num_obs: k,
            num_prev: n,
            data,
        }
    }

    #[inline]
    pub fn get(&self, a: usize, o: usize, i: usize) -> &[f64] {
        let m = self.num_states;
        let base = ((a * self.num_obs + o) * self.num_prev + i) * m;
        &self.data[base..base + m]
    }

    pub fn num_prev(&self) -> usize {
        self.num_prev
    }

    /// Index of the projection maximizing ⟨proj[a][o][i], ω⟩; lowest index on ties.
    #[inline]
    pub fn argmax(&self, a: usize, o: usize, belief: &[f64]) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..self.num_prev {
            let v: f64 = self.get(a, o, i).iter().zip(belief).map(|(x, w)| x * w).sum();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SondikConfig {
    /// Largest intermediate cross-sum allowed before pruning.
    pub max_vectors: usize,
    /// Dominance and witness pruning; off produces the raw |A|·|Γ|^K set.
    pub prune: bool,
}

impl Default for SondikConfig {
    fn default() -> Self {
        Self {
            max_vectors: 1_000_000,
            prune: true,
        }
    }
}

/// Exact one-pass backup: per action, immediate vector plus the cross-sum of
/// per-observation projection sets, then the union over actions.
///
/// With pruning on, each partial cross-sum is pruned before the next
/// observation is folded in; the final value function is the same.
pub fn sondik_backup(set: &AlphaSet, model: &ArmModel, discount: f64, config: SondikConfig) -> Result<AlphaSet> {
    let m = model.num_states();
    let proj = Projections::new(set, model, discount);
    let n = proj.num_prev();
    if !config.prune {
        let per_action = (n as f64).powi(model.num_observations() as i32);
        let total = per_action * model.num_actions() as f64;
        if total > config.max_vectors as f64 {
            return Err(Error::SizeBudgetExceeded {
                requested: total.min(usize::MAX as f64) as usize,
                cap: config.max_vectors,
            });
        }
    }
    let mut out = Vec::new();
    for a in 0..model.num_actions() {
        let immediate: Vec<f64> = (0..m).map(|s| model.penalized_reward(s, a, set.lambda)).collect();
        let mut acc = vec![immediate];
        for o in 0..model.num_observations() {
            let next_len = acc.len() * n;
            if next_len > config.max_vectors {
                return Err(Error::SizeBudgetExceeded {
                    requested: next_len,
                    cap: config.max_vectors,
                });
            }
            let mut next = Vec::with_capacity(next_len);
            for partial in &acc {
                for i in 0..n {
                    let p = proj.get(a, o, i);
                    next.push(partial.iter().zip(p).map(|(x, y)| x + y).collect::<Vec<f64>>());
                }
            }
            acc = if config.prune {
                let tagged = next.into_iter().map(|w| AlphaVector::new(w, a)).collect();
                prune(tagged).into_iter().map(|v| v.weights).collect()
            } else {
                next
            };
        }
        out.extend(acc.into_iter().map(|w| AlphaVector::new(w, a)));
    }
    let vectors = if config.prune { prune(out) } else { out };
    Ok(AlphaSet {
        lambda: set.lambda,
        horizon: set.horizon + 1,
        vectors,
    })
}
