//! The λ-grid heuristic: per-arm Lagrangian decisions, taken at the smallest
//! grid multiplier whose joint decision fits the budget.

use serde::{Deserialize, Serialize};

use super::knapsack::JointAction;
use crate::backup::BeliefValue;
use crate::bound::{ArmBackend, ArmSolver, ArmValue};
use crate::error::{invalid, Result};
use crate::model::{ArmModel, Belief, JointBelief, RmabInstance};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangianMode {
    /// R(ω,a) − λa + β E[V^λ(ω')].
    #[default]
    Penalized,
    /// R(ω,a) + β E[V^λ(ω')], without the activity charge.
    Unpenalized,
}

/// One-step lookahead scores L(ω, a, λ) for every action.
pub fn lagrangian_scores(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    lambda: f64,
    value: &impl BeliefValue,
    mode: LagrangianMode,
) -> Vec<f64> {
    (0..model.num_actions())
        .map(|a| {
            let lik = model.observation_likelihood(belief, a);
            let mut future = 0.0;
            for (o, &p) in lik.iter().enumerate() {
                if p > 0.0 {
                    let next = model.belief_update(belief, a, o).expect("observation has positive likelihood");
                    future += p * value.value(&next);
                }
            }
            let immediate = match mode {
                LagrangianMode::Penalized => model.lagrangian_reward(belief, a, lambda),
                LagrangianMode::Unpenalized => model.expected_reward(belief, a),
            };
            immediate + discount * future
        })
        .collect()
}

/// argmax with the lowest index winning ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn per_arm_lagrangian_action(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    lambda: f64,
    value: &impl BeliefValue,
    mode: LagrangianMode,
) -> usize {
    argmax(&lagrangian_scores(model, discount, belief, lambda, value, mode))
}

/// Ascending multipliers λ_L < … < λ_U.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid(Vec<f64>);

impl LambdaGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("lambda grid must not be empty"));
        }
        if points.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(invalid("lambda grid entries must be finite and non-negative"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("lambda grid must be strictly ascending"));
        }
        Ok(Self(points))
    }

    /// `count` geometric points from `lo` to `hi`.
    pub fn geometric(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(invalid("geometric grid needs 0 < lo < hi and at least two points"));
        }
        let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
        let mut pts: Vec<f64> = (0..count).map(|i| lo * ratio.powi(i as i32)).collect();
        pts[count - 1] = hi;
        Self::new(pts)
    }

    /// `count` evenly spaced points on [lo, hi].
    pub fn linear(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) || count < 2 {
            return Err(invalid("linear grid needs lo < hi and at least two points"));
        }
        Self::new((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
    }

    /// 64 geometric points from 1e-3 to 1.25·(Rmax − Rmin)/(1 − β), with the
    /// reward range taken over all arms at λ = 0.
    pub fn default_for(instance: &RmabInstance) -> Self {
        let (lo, hi) = instance
            .arms
            .iter()
            .map(|m| m.penalized_reward_range(0.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, h)| (a.min(l), b.max(h)));
        let top = (1.25 * (hi - lo) / (1.0 - instance.discount)).max(2e-3);
        Self::geometric(1e-3, top, 64).expect("valid default grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeuristicDecision {
    pub action: JointAction,
    pub lambda_used: f64,
    /// No grid point was feasible and actions were clamped.
    pub fallback: bool,
}

/// Per-(arm, λ) value functions for a whole grid, solved once.
#[derive(Debug, Clone)]
pub struct LagrangianPlanner {
    grid: LambdaGrid,
    mode: LagrangianMode,
    discount: f64,
    budget: usize,
    arms: Vec<ArmModel>,
    /// values[n][g]
    values: Vec<Vec<ArmValue>>,
}

impl LagrangianPlanner {
    /// Solves every arm at every grid point; arms in parallel, grid points in
    /// ascending order per arm so that each solve warm-starts from the last.
    pub fn new(instance: &RmabInstance, grid: LambdaGrid, backend: &ArmBackend, mode: LagrangianMode) -> Result<Self> {
        let specs: Vec<(usize, &ArmModel)> = instance.arms.iter().enumerate().collect();
        let values = par::map_slice(&specs, |&(n, m)| -> Result<Vec<ArmValue>> {
            let mut solver = ArmSolver::new(m.clone(), instance.discount, *backend, n as u64);
            grid.points().iter().map(|&l| solver.value_fn(l).cloned()).collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            mode,
            discount: instance.discount,
            budget: instance.budget,
            arms: instance.arms.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    pub fn value_fn(&self, arm: usize, grid_index: usize) -> &ArmValue {
        &self.values[arm][grid_index]
    }

    fn scores(&self, arm: usize, g: usize, belief: &Belief) -> Vec<f64> {
        lagrangian_scores(&self.arms[arm], self.discount, belief, self.grid.points()[g], &self.values[arm][g], self.mode)
    }

    /// Decisions at the smallest feasible grid λ. If none is feasible, the
    /// largest-λ decisions are clamped: arms are zeroed in increasing order
    /// of their score gain over action 0 (ties: lower arm first).
    pub fn decide(&self, belief: &JointBelief) -> HeuristicDecision {
        let n = self.arms.len();
        let mut last: Option<(Vec<usize>, Vec<Vec<f64>>)> = None;
        for g in 0..self.grid.len() {
            let scores: Vec<Vec<f64>> = (0..n).map(|i| self.scores(i, g, &belief.per_arm[i])).collect();
            let actions: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
            if actions.iter().sum::<usize>() <= self.budget {
                let action = JointAction::new(actions);
                return HeuristicDecision {
                    action,
                    lambda_used: self.grid.points()[g],
                    fallback: false,
                };
            }
            last = Some((actions, scores));
        }
        let (mut actions, scores) = last.expect("grid is non-empty");
        let mut order: Vec<usize> = (0..n).collect();
        let gain = |i: usize| scores[i][actions[i]] - scores[i][0];
        order.sort_by(|&a, &b| gain(a).total_cmp(&gain(b)).then(a.cmp(&b)));
        for i in order {
            if actions.iter().sum::<usize>() <= self.budget {
                break;
            }
            actions[i] = 0;
        }
        let action = JointAction::new(actions);
        assert!(action.cost <= self.budget, "clamped decision is feasible");
        HeuristicDecision {
            action,
            lambda_used: *self.grid.points().last().expect("grid is non-empty"),
            fallback: true,
        }
    }
}

/// One-shot form of [`LagrangianPlanner::decide`].
pub fn lagrangian_heuristic(
    instance: &RmabInstance,
    belief: &JointBelief,
    grid: LambdaGrid,
    backend: &ArmBackend,
    mode: LagrangianMode,
) -> Result<HeuristicDecision> {
    instance.check_belief(belief)?;
    Ok(LagrangianPlanner::new(instance, grid, backend, mode)?.decide(belief))
}
