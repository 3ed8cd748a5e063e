//! Lagrangian relaxation of the per-round budget and the multiplier search.
//!
//! For a fixed λ the arms decouple:
//! V^λ(ω) = Σ_n V_n^λ(ω_n) + Bλ/(1−β), where V_n^λ is the value of arm n
//! alone with every unit of activity charged λ. Any λ ≥ 0 gives an upper
//! bound on the constrained optimum; [`lagrangian_bound`] searches for the
//! smallest one with finite-difference gradients.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backup::{solve_arm_pbvi, AlphaSet, BeliefSet, BeliefValue, InitialSet, PbviConfig};
use crate::error::{invalid, Error, Result};
use crate::model::{ArmModel, Belief, JointBelief, RmabInstance};
use crate::par;
use crate::rng;
use crate::rollout::{RolloutConfig, RolloutValue};

/// Multiplier update applied after each gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// [λ − ηg]^+: projected descent towards min_λ V^λ.
    Descent,
    /// [λ + ηg]^+, the ascent sign.
    Ascent,
    /// [(1−η)λ + ηg]^+, a relaxation form.
    Relaxation,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descent" => Ok(UpdateRule::Descent),
            "ascent" => Ok(UpdateRule::Ascent),
            "relaxation" => Ok(UpdateRule::Relaxation),
            _ => Err(invalid(format!("unknown update rule `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub lambda0: f64,
    pub eta: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub update_rule: UpdateRule,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self {
            lambda0: 0.0,
            eta: 0.05,
            tolerance: 1e-3,
            max_iters: 200,
            update_rule: UpdateRule::Descent,
        }
    }
}

impl LambdaSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid(format!("step size {} must lie in (0, 1)", self.eta)));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return Err(invalid("lambda0 must be a finite non-negative number"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

/// How a single arm's V_n^λ is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ArmBackend {
    Pbvi(PbviConfig),
    /// V(ω) ≈ max_a Q̃(ω, a); `config.lambda` is overridden per solve.
    Rollout { config: RolloutConfig, seed: u64 },
}

impl Default for ArmBackend {
    fn default() -> Self {
        ArmBackend::Pbvi(PbviConfig::default())
    }
}

/// A solved per-arm value function at one λ.
#[derive(Debug, Clone)]
pub enum ArmValue {
    Alpha(AlphaSet),
    Rollout(RolloutValue),
}

impl BeliefValue for ArmValue {
    fn value(&self, belief: &Belief) -> f64 {
        match self {
            ArmValue::Alpha(set) => set.value(belief),
            ArmValue::Rollout(r) => r.value(belief),
        }
    }
}

/// Per-arm solver with a λ-keyed cache. PBVI solves are warm-started from the
/// cached value function at the nearest λ.
#[derive(Debug, Clone)]
pub struct ArmSolver {
    model: ArmModel,
    discount: f64,
    backend: ArmBackend,
    beliefs: Option<BeliefSet>,
    cache: Vec<(f64, ArmValue)>,
    backups: usize,
}

impl ArmSolver {
    /// `stream` separates the rollout seeds of different arms.
    pub fn new(model: ArmModel, discount: f64, backend: ArmBackend, stream: u64) -> Self {
        let (backend, beliefs) = match backend {
            ArmBackend::Pbvi(cfg) => (backend, Some(cfg.belief_set(&model))),
            ArmBackend::Rollout { config, seed } => (
                ArmBackend::Rollout {
                    config,
                    seed: rng::derive_seed(seed, rng::tag::BOUND, &[stream]),
                },
                None,
            ),
        };
        Self {
            model,
            discount,
            backend,
            beliefs,
            cache: Vec::new(),
            backups: 0,
        }
    }

    pub fn model(&self) -> &ArmModel {
        &self.model
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn belief_set(&self) -> Option<&BeliefSet> {
        self.beliefs.as_ref()
    }

    /// Total point-based backups performed so far.
    pub fn backups(&self) -> usize {
        self.backups
    }

    /// Value function at `lambda`, solving on a cache miss.
    pub fn value_fn(&mut self, lambda: f64) -> Result<&ArmValue> {
        if !(lambda >= 0.0) {
            return Err(invalid(format!("lambda {lambda} must be non-negative")));
        }
        if let Some(i) = self.cache.iter().position(|(l, _)| *l == lambda) {
            return Ok(&self.cache[i].1);
        }
        let solved = match self.backend {
            ArmBackend::Pbvi(cfg) => {
                let init = self
                    .cache
                    .iter()
                    .min_by(|a, b| (a.0 - lambda).abs().total_cmp(&(b.0 - lambda).abs()))
                    .and_then(|(_, v)| match v {
                        ArmValue::Alpha(set) => Some(InitialSet::Warm(set.clone())),
                        ArmValue::Rollout(_) => None,
                    })
                    .unwrap_or(InitialSet::LowerBound);
                let beliefs = self.beliefs.as_ref().expect("pbvi solver has belief points");
                let (set, stats) =
                    crate::backup::pbvi_solve(&self.model, self.discount, lambda, beliefs, cfg.stop, &init);
                self.backups += stats.backups;
                ArmValue::Alpha(set)
            }
            ArmBackend::Rollout { config, seed } => {
                let config = RolloutConfig { lambda, ..config };
                if config.horizon == 0 || config.trajectories == 0 {
                    return Err(invalid("rollout horizon and trajectory count must be positive"));
                }
                ArmValue::Rollout(RolloutValue {
                    model: self.model.clone(),
                    discount: self.discount,
                    config,
                    seed,
                })
            }
        };
        self.cache.push((lambda, solved));
        Ok(&self.cache.last().expect("just pushed").1)
    }

    /// The model alongside its value function at `lambda`.
    pub fn solved(&mut self, lambda: f64) -> Result<(&ArmModel, &ArmValue)> {
        self.value_fn(lambda)?;
        let i = self.cache.iter().position(|(l, _)| *l == lambda).expect("cached by value_fn");
        Ok((&self.model, &self.cache[i].1))
    }

    pub fn value(&mut self, belief: &Belief, lambda: f64) -> Result<f64> {
        Ok(self.value_fn(lambda)?.value(belief))
    }
}

/// V^λ(ω) = Σ V_n^λ(ω_n) + Bλ/(1−β).
pub fn decoupled_value(per_arm_values: &[f64], lambda: f64, budget: usize, beta: f64) -> f64 {
    per_arm_values.iter().sum::<f64>() + budget as f64 * lambda / (1.0 - beta)
}

/// V_n^λ(ω_n) from a fresh solve with the chosen backend.
pub fn solve_arm_value(model: &ArmModel, discount: f64, belief: &Belief, lambda: f64, backend: &ArmBackend) -> Result<f64> {
    if let ArmBackend::Pbvi(cfg) = backend {
        if !(lambda >= 0.0) {
            return Err(invalid(format!("lambda {lambda} must be non-negative")));
        }
        let solved = solve_arm_pbvi(model, discount, lambda, cfg, &InitialSet::LowerBound);
        return Ok(solved.set.value(belief));
    }
    ArmSolver::new(model.clone(), discount, *backend, 0).value(belief, lambda)
}

pub fn finite_diff_gradient(v_curr: f64, v_prev: f64, lambda_curr: f64, lambda_prev: f64) -> Result<f64> {
    let step = lambda_curr - lambda_prev;
    if step.abs() < 1e-12 {
        return Err(Error::DegenerateStep { lambda_curr, lambda_prev });
    }
    Ok((v_curr - v_prev) / step)
}

pub fn two_timescale_update(lambda: f64, gradient: f64, eta: f64, rule: UpdateRule) -> f64 {
    let next = match rule {
        UpdateRule::Descent => lambda - eta * gradient,
        UpdateRule::Ascent => lambda + eta * gradient,
        UpdateRule::Relaxation => (1.0 - eta) * lambda + eta * gradient,
    };
    next.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Iterating,
    /// |g| ≤ δ.
    Converged,
    /// The update moved λ by at most δ·η.
    Stationary,
    NoConvergence,
}

impl TraceStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceStatus::Iterating => "iterating",
            TraceStatus::Converged => "converged",
            TraceStatus::Stationary => "stationary",
            TraceStatus::NoConvergence => "no-convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub lambda: f64,
    pub bound: f64,
    /// Difference quotient against the previous iterate; none on the first row.
    pub gradient: Option<f64>,
    pub per_arm: Vec<f64>,
    pub wall_ms: f64,
    pub status: TraceStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub lambda_star: f64,
    pub bound_value: f64,
    pub per_arm_values: Vec<f64>,
    pub status: TraceStatus,
    pub trace: Vec<TraceRow>,
}

/// Solves every arm at `lambda` (in parallel) and returns the per-arm values.
pub fn arm_values(solvers: &mut [ArmSolver], belief: &JointBelief, lambda: f64) -> Result<Vec<f64>> {
    let mut items: Vec<(&mut ArmSolver, &Belief)> = solvers.iter_mut().zip(&belief.per_arm).collect();
    par::map_slice_mut(&mut items, |(solver, b)| solver.value(b, lambda))
        .into_iter()
        .collect()
}

/// One solver per arm, with per-arm rollout streams.
pub fn arm_solvers(instance: &RmabInstance, backend: &ArmBackend) -> Vec<ArmSolver> {
    let specs: Vec<(usize, &ArmModel)> = instance.arms.iter().enumerate().collect();
    par::map_slice(&specs, |&(n, m)| ArmSolver::new(m.clone(), instance.discount, *backend, n as u64))
}

/// The multiplier search. The first step is a forced probe λ_0 + η so that the
/// first gradient has a predecessor; afterwards the selected update rule
/// moves λ until |g| ≤ δ, the move is below δ·η, or the iteration cap.
///
/// The result reports the iterate with the smallest bound (each one is an
/// upper bound); on the cap, the error carries that iterate.
pub fn lagrangian_bound(
    instance: &RmabInstance,
    belief: &JointBelief,
    schedule: &LambdaSchedule,
    backend: &ArmBackend,
) -> Result<BoundResult> {
    let mut solvers = arm_solvers(instance, backend);
    lagrangian_bound_with(instance, belief, schedule, &mut solvers)
}

/// [`lagrangian_bound`] on caller-owned solvers, whose caches persist.
pub fn lagrangian_bound_with(
    instance: &RmabInstance,
    belief: &JointBelief,
    schedule: &LambdaSchedule,
    solvers: &mut [ArmSolver],
) -> Result<BoundResult> {
    schedule.validate()?;
    instance.check_belief(belief)?;
    let (b, beta) = (instance.budget, instance.discount);
    let mut trace: Vec<TraceRow> = Vec::new();

    let mut eval = |iter: usize, lambda: f64, prev: Option<&TraceRow>, trace: &mut Vec<TraceRow>| -> Result<()> {
        let started = Instant::now();
        let per_arm = arm_values(solvers, belief, lambda)?;
        let bound = decoupled_value(&per_arm, lambda, b, beta);
        let gradient = match prev {
            Some(p) => Some(finite_diff_gradient(bound, p.bound, lambda, p.lambda)?),
            None => None,
        };
        trace.push(TraceRow {
            iter,
            lambda,
            bound,
            gradient,
            per_arm,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            status: TraceStatus::Iterating,
        });
        Ok(())
    };

    eval(0, schedule.lambda0, None, &mut trace)?;
    let probe = schedule.lambda0 + schedule.eta;
    let first = trace[0].clone();
    eval(1, probe, Some(&first), &mut trace)?;

    let mut final_status = TraceStatus::NoConvergence;
    for iter in 2..=schedule.max_iters.max(2) {
        let last = trace.last().expect("trace is non-empty").clone();
        let g = last.gradient.expect("rows after the first carry a gradient");
        if g.abs() <= schedule.tolerance {
            final_status = TraceStatus::Converged;
            break;
        }
        let next = two_timescale_update(last.lambda, g, schedule.eta, schedule.update_rule);
        let moved = (next - last.lambda).abs();
        if moved <= schedule.tolerance * schedule.eta || moved < 1e-12 {
            final_status = TraceStatus::Stationary;
            break;
        }
        eval(iter, next, Some(&last), &mut trace)?;
    }
    if final_status == TraceStatus::NoConvergence {
        if let Some(g) = trace.last().and_then(|r| r.gradient) {
            if g.abs() <= schedule.tolerance {
                final_status = TraceStatus::Converged;
            }
        }
    }
    trace.last_mut().expect("trace is non-empty").status = final_status;

    // every iterate is a valid bound; report the tightest one visited
    let best = trace
        .iter()
        .min_by(|a, b| a.bound.total_cmp(&b.bound))
        .expect("trace is non-empty")
        .clone();
    let result = BoundResult {
        lambda_star: best.lambda,
        bound_value: best.bound,
        per_arm_values: best.per_arm,
        status: final_status,
        trace,
    };
    if final_status == TraceStatus::NoConvergence {
        return Err(Error::NoConvergence { best: Box::new(result) });
    }
    Ok(result)
}

/// Unwraps a search result, accepting the best iterate on the cap.
pub fn best_effort(result: Result<BoundResult>) -> Result<BoundResult> {
    match result {
        Err(Error::NoConvergence { best }) => Ok(*best),
        other => other,
    }
}

/// Evaluates V^λ on a fixed grid of multipliers (solvers are reused).
pub fn bound_on_grid(
    instance: &RmabInstance,
    belief: &JointBelief,
    grid: &[f64],
    solvers: &mut [ArmSolver],
) -> Result<Vec<(f64, f64)>> {
    instance.check_belief(belief)?;
    grid.iter()
        .map(|&l| {
            let per_arm = arm_values(solvers, belief, l)?;
            Ok((l, decoupled_value(&per_arm, l, instance.budget, instance.discount)))
        })
        .collect()
}

/// Central-difference estimate of −Σ_n ∂V_n^λ/∂λ at `lambda`, with step
/// max(1e-3, η/10) (one-sided at λ = 0). Paired with B/(1−β) for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivityWindow {
    pub lambda: f64,
    pub discounted_activity: f64,
    pub budget_term: f64,
}

pub fn activity_window(
    instance: &RmabInstance,
    belief: &JointBelief,
    lambda: f64,
    eta: f64,
    solvers: &mut [ArmSolver],
) -> Result<ActivityWindow> {
    let h = (eta / 10.0).max(1e-3);
    let lo = (lambda - h).max(0.0);
    let hi = lambda + h;
    let v_lo: f64 = arm_values(solvers, belief, lo)?.iter().sum();
    let v_hi: f64 = arm_values(solvers, belief, hi)?.iter().sum();
    Ok(ActivityWindow {
        lambda,
        discounted_activity: -(v_hi - v_lo) / (hi - lo),
        budget_term: instance.budget as f64 / (1.0 - instance.discount),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupling_arithmetic() {
        assert_eq!(decoupled_value(&[5.0, 5.0], 0.5, 2, 0.9), 20.0);
        assert_eq!(decoupled_value(&[1.0, 2.0], 0.0, 3, 0.9), 3.0);
        assert_eq!(decoupled_value(&[1.0, 2.0], 7.0, 0, 0.9), 3.0);
    }

    #[test]
    fn gradient_quotient() {
        assert!((finite_diff_gradient(4.0, 1.0, 2.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(finite_diff_gradient(1.0, 1.0, 0.5, 0.5), Err(Error::DegenerateStep { .. })));
        let frozen = [1.0, 2.0];
        let (l0, l1) = (0.3, 0.35);
        let g = finite_diff_gradient(decoupled_value(&frozen, l1, 2, 0.9), decoupled_value(&frozen, l0, 2, 0.9), l1, l0)
            .unwrap();
        assert!((g - 20.0).abs() < 1e-9);
    }

    #[test]
    fn update_rules() {
        assert!((two_timescale_update(1.0, 2.0, 0.1, UpdateRule::Descent) - 0.8).abs() < 1e-15);
        assert_eq!(two_timescale_update(0.1, 5.0, 0.1, UpdateRule::Descent), 0.0);
        assert_eq!(two_timescale_update(0.7, 0.7, 0.1, UpdateRule::Relaxation), 0.7);
        assert!((two_timescale_update(1.0, 2.0, 0.1, UpdateRule::Ascent) - 1.2).abs() < 1e-15);
        assert_eq!(two_timescale_update(0.1, -5.0, 0.1, UpdateRule::Ascent), 0.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(LambdaSchedule::default().validate().is_ok());
        assert!(LambdaSchedule { eta: 1.0, ..Default::default() }.validate().is_err());
        assert!(LambdaSchedule { tolerance: 0.0, ..Default::default() }.validate().is_err());
    }
}
