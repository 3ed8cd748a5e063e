use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::alpha::{initial_alpha_set, lower_bound_alpha_set, AlphaSet, AlphaVector};
use super::beliefs::BeliefSet;
use super::sondik::{sondik_backup, Projections, SondikConfig};
use crate::error::Result;
use crate::model::ArmModel;
use crate::par;
use crate::rng;

/// Point-based backup: at every ω ∈ B build, per action, the immediate vector
/// plus the best projection per observation, then keep the best action's
/// vector. Duplicates are removed in point order.
pub fn pbvi_backup(set: &AlphaSet, beliefs: &BeliefSet, model: &ArmModel, discount: f64) -> AlphaSet {
    let proj = Projections::new(set, model, discount);
    let m = model.num_states();
    let lambda = set.lambda;
    let per_point = par::map_slice(beliefs.points(), |b| {
        let w = b.probs();
        let mut best: Option<(f64, AlphaVector)> = None;
        for a in 0..model.num_actions() {
            let mut v: Vec<f64> = (0..m).map(|s| model.penalized_reward(s, a, lambda)).collect();
            for o in 0..model.num_observations() {
                let i = proj.argmax(a, o, w);
                for (x, p) in v.iter_mut().zip(proj.get(a, o, i)) {
                    *x += p;
                }
            }
            let value: f64 = v.iter().zip(w).map(|(x, y)| x * y).sum();
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                best = Some((value, AlphaVector::new(v, a)));
            }
        }
        best.expect("at least one action").1
    });
    let mut vectors: Vec<AlphaVector> = Vec::with_capacity(per_point.len());
    for v in per_point {
        if !vectors.iter().any(|u| u.weights == v.weights) {
            vectors.push(v);
        }
    }
    AlphaSet {
        lambda,
        horizon: set.horizon + 1,
        vectors,
    }
}

/// Where value iteration starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSet {
    /// One vector per action holding the λ-adjusted rewards.
    Immediate,
    /// The constant lower bound min R̄ / (1 − β).
    LowerBound,
    /// A previously solved set (typically from a nearby λ).
    Warm(AlphaSet),
}

impl InitialSet {
    fn build(&self, model: &ArmModel, lambda: f64, discount: f64) -> AlphaSet {
        match self {
            InitialSet::Immediate => initial_alpha_set(model, lambda),
            InitialSet::LowerBound => lower_bound_alpha_set(model, lambda, discount),
            InitialSet::Warm(set) => AlphaSet {
                lambda,
                ..set.clone()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop when the largest value change over the belief points is ≤ tol.
    pub tol: f64,
    pub max_backups: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { tol: 1e-6, max_backups: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStat {
    pub backup: usize,
    pub vectors: usize,
    pub sup_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub backups: usize,
    pub final_sup_change: f64,
    pub vectors: usize,
    pub converged: bool,
    #[serde(skip)]
    pub wall_ms: f64,
    pub history: Vec<IterationStat>,
}

fn iterate(
    mut set: AlphaSet,
    points: &BeliefSet,
    stop: StopRule,
    mut step: impl FnMut(&AlphaSet) -> Result<AlphaSet>,
) -> Result<(AlphaSet, SolveStats)> {
    let started = Instant::now();
    let values = |s: &AlphaSet| -> Vec<f64> { points.points().iter().map(|b| s.value(b)).collect() };
    let mut prev = values(&set);
    let mut history = Vec::new();
    let mut converged = false;
    let mut change = f64::INFINITY;
    for backup in 1..=stop.max_backups.max(1) {
        set = step(&set)?;
        let now = values(&set);
        change = prev.iter().zip(&now).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push(IterationStat {
            backup,
            vectors: set.len(),
            sup_change: change,
        });
        prev = now;
        if change <= stop.tol {
            converged = true;
            break;
        }
    }
    let stats = SolveStats {
        backups: history.len(),
        final_sup_change: change,
        vectors: set.len(),
        converged,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        history,
    };
    Ok((set, stats))
}

/// Repeated point-based backups until the sup-change over `beliefs` is within
/// tolerance or the backup cap is reached.
pub fn pbvi_solve(
    model: &ArmModel,
    discount: f64,
    lambda: f64,
    beliefs: &BeliefSet,
    stop: StopRule,
    init: &InitialSet,
) -> (AlphaSet, SolveStats) {
    let start = init.build(model, lambda, discount);
    iterate(start, beliefs, stop, |s| Ok(pbvi_backup(s, beliefs, model, discount)))
        .expect("point-based backups are infallible")
}

/// Exact value iteration with pruned one-pass backups; convergence is checked
/// on `check_points`.
pub fn exact_solve(
    model: &ArmModel,
    discount: f64,
    lambda: f64,
    check_points: &BeliefSet,
    stop: StopRule,
    init: &InitialSet,
    sondik: SondikConfig,
) -> Result<(AlphaSet, SolveStats)> {
    let start = init.build(model, lambda, discount);
    iterate(start, check_points, stop, |s| sondik_backup(s, model, discount, sondik))
}

/// Bundled settings for solving one arm by PBVI from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbviConfig {
    pub belief_points: usize,
    pub stop: StopRule,
    /// Seed for reachable belief expansion.
    pub seed: u64,
}

impl Default for PbviConfig {
    fn default() -> Self {
        Self {
            belief_points: 32,
            stop: StopRule::default(),
            seed: 0,
        }
    }
}

impl PbviConfig {
    /// Vertices + center + reachable expansion; the stream is keyed by the
    /// model's fingerprint, so each distinct arm gets its own points.
    pub fn belief_set(&self, model: &ArmModel) -> BeliefSet {
        let mut r = rng::stream(self.seed, rng::tag::BELIEF_SET, &[model.fingerprint()]);
        BeliefSet::default_for(model, self.belief_points, &mut r)
    }
}

/// A solved arm: its belief points and the resulting value function.
#[derive(Debug, Clone)]
pub struct SolvedArm {
    pub beliefs: BeliefSet,
    pub set: AlphaSet,
    pub stats: SolveStats,
}

pub fn solve_arm_pbvi(model: &ArmModel, discount: f64, lambda: f64, config: &PbviConfig, init: &InitialSet) -> SolvedArm {
    let beliefs = config.belief_set(model);
    let (set, stats) = pbvi_solve(model, discount, lambda, &beliefs, config.stop, init);
    SolvedArm { beliefs, set, stats }
}
