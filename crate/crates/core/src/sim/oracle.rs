//! Exhaustive finite-horizon expectimax over beliefs, used as ground truth at
//! desk scale.

use crate::error::{invalid, Error, Result};
use crate::model::{ArmModel, Belief, JointBelief, RmabInstance};
use crate::policies::JointAction;

use super::episode::feasible_joint_actions;

/// Default cap on expanded tree nodes.
pub const NODE_CAP: f64 = 1e6;
pub const MAX_HORIZON: usize = 6;

/// Σ_{t=1}^{T} (|𝒜|·Π K_n)^t.
pub fn tree_nodes(instance: &RmabInstance, horizon: usize) -> f64 {
    let actions = feasible_joint_actions(instance).len() as f64;
    let obs: f64 = instance.arms.iter().map(|m| m.num_observations() as f64).product();
    (1..=horizon).map(|t| (actions * obs).powi(t as i32)).sum()
}

/// Exact T-horizon constrained optimum
/// max_{a∈𝒜} Σ R(ω_n, a_n) + β Σ_o Π P(o_n | ω_n, a_n) V_{T−1}(τ(ω, a, o)),
/// with V_0 = 0.
pub fn brute_force_constrained_value(instance: &RmabInstance, belief: &JointBelief, horizon: usize) -> Result<f64> {
    brute_force_with_cap(instance, belief, horizon, NODE_CAP)
}

pub fn brute_force_with_cap(instance: &RmabInstance, belief: &JointBelief, horizon: usize, cap: f64) -> Result<f64> {
    instance.check_belief(belief)?;
    let nodes = tree_nodes(instance, horizon);
    if horizon > MAX_HORIZON || nodes > cap {
        return Err(Error::TooLarge { nodes, cap, horizon });
    }
    let actions = feasible_joint_actions(instance);
    Ok(joint_value(instance, &actions, &belief.per_arm, horizon))
}

fn joint_value(instance: &RmabInstance, actions: &[JointAction], beliefs: &[Belief], horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let n = instance.num_arms();
    let mut best = f64::NEG_INFINITY;
    for action in actions {
        let mut immediate = 0.0;
        // per arm: (probability, successor) for each observation with P > 0
        let mut branches: Vec<Vec<(f64, Belief)>> = Vec::with_capacity(n);
        for (i, m) in instance.arms.iter().enumerate() {
            let a = action.actions[i];
            immediate += m.expected_reward(&beliefs[i], a);
            if horizon > 1 {
                let lik = m.observation_likelihood(&beliefs[i], a);
                branches.push(
                    lik.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(o, &p)| (p, m.belief_update(&beliefs[i], a, o).expect("positive likelihood")))
                        .collect(),
                );
            }
        }
        let mut future = 0.0;
        if horizon > 1 {
            let mut idx = vec![0usize; n];
            let mut next: Vec<Belief> = branches.iter().map(|b| b[0].1.clone()).collect();
            loop {
                let p: f64 = (0..n).map(|i| branches[i][idx[i]].0).product();
                for i in 0..n {
                    next[i] = branches[i][idx[i]].1.clone();
                }
                future += p * joint_value(instance, actions, &next, horizon - 1);
                // odometer over joint observations
                let mut k = 0;
                loop {
                    if k == n {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < branches[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
        }
        let v = immediate + instance.discount * future;
        if v > best {
            best = v;
        }
    }
    best
}

/// Single-arm T-horizon Q-values with per-unit activity charge λ:
/// Q_T(ω, a) = R(ω, a) − λa + β Σ_o P(o | ω, a) max_a' Q_{T−1}(τ(ω, a, o), a').
pub fn arm_expectimax_q(model: &ArmModel, discount: f64, belief: &Belief, horizon: usize, lambda: f64) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let cap = (model.num_actions() * model.num_observations()) as f64;
    if cap.powi(horizon as i32) > NODE_CAP * 100.0 {
        return Err(Error::TooLarge {
            nodes: cap.powi(horizon as i32),
            cap: NODE_CAP * 100.0,
            horizon,
        });
    }
    Ok(arm_q(model, discount, belief, horizon, lambda))
}

fn arm_q(model: &ArmModel, discount: f64, belief: &Belief, horizon: usize, lambda: f64) -> Vec<f64> {
    (0..model.num_actions())
        .map(|a| {
            let mut q = model.lagrangian_reward(belief, a, lambda);
            if horizon > 1 {
                let lik = model.observation_likelihood(belief, a);
                let mut future = 0.0;
                for (o, &p) in lik.iter().enumerate() {
                    if p > 0.0 {
                        let next = model.belief_update(belief, a, o).expect("positive likelihood");
                        let v = arm_q(model, discount, &next, horizon - 1, lambda)
                            .into_iter()
                            .fold(f64::NEG_INFINITY, f64::max);
                        future += p * v;
                    }
                }
                q += discount * future;
            }
            q
        })
        .collect()
}

/// max_a of [`arm_expectimax_q`].
pub fn arm_expectimax_value(model: &ArmModel, discount: f64, belief: &Belief, horizon: usize, lambda: f64) -> Result<f64> {
    Ok(arm_expectimax_q(model, discount, belief, horizon, lambda)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Expected discounted reward of a fixed action stream a_n(t) ≡ a over T
/// rounds, by exact propagation of the hidden-state distribution.
pub fn fixed_action_value(model: &ArmModel, discount: f64, belief: &Belief, action: usize, horizon: usize) -> f64 {
    let m = model.num_states();
    let mut dist = belief.probs().to_vec();
    let mut total = 0.0;
    let mut w = 1.0;
    for _ in 0..horizon {
        total += w * (0..m).map(|s| dist[s] * model.reward(s, action)).sum::<f64>();
        let mut next = vec![0.0; m];
        for s in 0..m {
            for (t, p) in model.transition_row(action, s).iter().enumerate() {
                next[t] += dist[s] * p;
            }
        }
        dist = next;
        w *= discount;
    }
    total
}
