//! One-step budgeted selection: the greedy heuristic and the exact
//! multiple-choice knapsack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JointBelief, RmabInstance};

/// One action per arm; the cost is the sum of action ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction {
    pub actions: Vec<usize>,
    pub cost: usize,
}

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        let cost = actions.iter().sum();
        Self { actions, cost }
    }

    pub fn passive(arms: usize) -> Self {
        Self::new(vec![0; arms])
    }

    /// Fails with [`Error::InfeasibleAction`] when the cost exceeds `budget`.
    pub fn check(&self, budget: usize) -> Result<()> {
        if self.cost > budget {
            return Err(Error::InfeasibleAction { cost: self.cost, budget });
        }
        Ok(())
    }
}

/// R(ω_n, a) for every arm and action.
pub fn immediate_rewards(instance: &RmabInstance, belief: &JointBelief) -> Vec<Vec<f64>> {
    instance
        .arms
        .iter()
        .zip(&belief.per_arm)
        .map(|(m, b)| (0..m.num_actions()).map(|a| m.expected_reward(b, a)).collect())
        .collect()
}

/// How a pair that does not fit the remaining budget is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateRemoval {
    /// The action level leaves the candidate list of every arm.
    #[default]
    Shared,
    /// Only the offending (arm, action) pair is dropped.
    PerArm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyStep {
    pub arm: usize,
    pub action: usize,
    pub reward: f64,
    pub committed: bool,
    /// Budget left after this step.
    pub remaining: usize,
}

/// Greedy selection on immediate expected rewards.
pub fn greedy_select(instance: &RmabInstance, belief: &JointBelief) -> (JointAction, Vec<GreedyStep>) {
    greedy_select_with(&immediate_rewards(instance, belief), instance.budget, CandidateRemoval::Shared)
}

/// Greedy selection on an explicit reward table `values[n][a]`.
///
/// Repeatedly takes the best remaining (arm, action) pair (ties: lower arm,
/// then lower action). A pair that fits is committed and its arm retired;
/// one that does not fit is discarded per `removal`. Stops when the budget
/// is spent or no remaining positive-cost pair fits; idle arms get action 0.
pub fn greedy_select_with(values: &[Vec<f64>], budget: usize, removal: CandidateRemoval) -> (JointAction, Vec<GreedyStep>) {
    let n = values.len();
    let levels = values.iter().map(Vec::len).max().unwrap_or(0);
    let mut open = vec![true; n];
    let mut shared = vec![true; levels];
    let mut pair = vec![vec![true; levels]; n];
    let mut actions = vec![0usize; n];
    let mut remaining = budget;
    let mut steps = Vec::new();
    let alive = |arm: usize, a: usize, open: &[bool], shared: &[bool], pair: &[Vec<bool>]| {
        open[arm] && shared[a] && pair[arm][a] && a < values[arm].len()
    };
    loop {
        if remaining == 0 {
            break;
        }
        let fits = (0..n).any(|arm| (1..levels).any(|a| a <= remaining && alive(arm, a, &open, &shared, &pair)));
        if !fits {
            break;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for arm in 0..n {
            for a in 0..values[arm].len() {
                if alive(arm, a, &open, &shared, &pair) && best.is_none_or(|(_, _, v)| values[arm][a] > v) {
                    best = Some((arm, a, values[arm][a]));
                }
            }
        }
        let (arm, a, reward) = best.expect("a fitting candidate exists");
        let committed = a <= remaining;
        if committed {
            actions[arm] = a;
            open[arm] = false;
            remaining -= a;
        } else {
            match removal {
                CandidateRemoval::Shared => shared[a] = false,
                CandidateRemoval::PerArm => pair[arm][a] = false,
            }
        }
        steps.push(GreedyStep {
            arm,
            action: a,
            reward,
            committed,
            remaining,
        });
    }
    let chosen = JointAction::new(actions);
    assert!(chosen.cost <= budget, "greedy selection exceeded the budget");
    (chosen, steps)
}

/// Σ_n values[n][a_n].
pub fn joint_value(values: &[Vec<f64>], action: &JointAction) -> f64 {
    values.iter().zip(&action.actions).map(|(v, &a)| v[a]).sum()
}

/// Exact multiple-choice knapsack by dynamic programming over arms and
/// remaining budget, cost O(N·J·B). Among optimal tuples the
/// lexicographically smallest is returned.
pub fn solve_mck(values: &[Vec<f64>], budget: usize) -> (JointAction, f64) {
    let n = values.len();
    let cap = budget.min(values.iter().map(|v| v.len().saturating_sub(1)).sum());
    // best[i][b]: optimum over arms i.. with budget b
    let mut best = vec![vec![0.0f64; cap + 1]; n + 1];
    for i in (0..n).rev() {
        for b in 0..=cap {
            let mut v = f64::NEG_INFINITY;
            for (a, r) in values[i].iter().enumerate().take(b + 1) {
                v = v.max(r + best[i + 1][b - a]);
            }
            best[i][b] = v;
        }
    }
    let mut actions = Vec::with_capacity(n);
    let mut b = cap;
    for i in 0..n {
        let a = (0..values[i].len().min(b + 1))
            .find(|&a| values[i][a] + best[i + 1][b - a] == best[i][b])
            .expect("optimum is attained");
        actions.push(a);
        b -= a;
    }
    let chosen = JointAction::new(actions);
    let value = joint_value(values, &chosen);
    (chosen, value)
}

/// Exact one-step optimum of Σ R(ω_n, a_n) subject to Σ a_n ≤ B.
pub fn exact_one_step(instance: &RmabInstance, belief: &JointBelief) -> (JointAction, f64) {
    solve_mck(&immediate_rewards(instance, belief), instance.budget)
}
