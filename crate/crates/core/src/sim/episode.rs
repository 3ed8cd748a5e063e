use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{JointBelief, RmabInstance};
use crate::par;
use crate::policies::{
    greedy_select_with, solve_mck, CandidateRemoval, JointAction, LagrangianPlanner,
};
use crate::rng::{self, StreamRng};
use crate::rollout::{improve_action, RolloutConfig};

/// A belief-to-joint-action rule. `rng` is the policy's own stream for the
/// episode, separate from the environment's.
pub trait JointPolicy: Sync {
    fn name(&self) -> String;
    fn act(&self, instance: &RmabInstance, belief: &JointBelief, rng: &mut StreamRng) -> Result<JointAction>;
}

/// Greedy knapsack on immediate expected rewards.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPolicy {
    pub removal: CandidateRemoval,
}

impl JointPolicy for GreedyPolicy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn act(&self, instance: &RmabInstance, belief: &JointBelief, _: &mut StreamRng) -> Result<JointAction> {
        let values = crate::policies::immediate_rewards(instance, belief);
        Ok(greedy_select_with(&values, instance.budget, self.removal).0)
    }
}

/// The λ-grid heuristic on precomputed per-arm value functions.
#[derive(Debug, Clone)]
pub struct LagrangianPolicy {
    pub planner: LagrangianPlanner,
}

impl JointPolicy for LagrangianPolicy {
    fn name(&self) -> String {
        "lagrangian".into()
    }

    fn act(&self, _: &RmabInstance, belief: &JointBelief, _: &mut StreamRng) -> Result<JointAction> {
        Ok(self.planner.decide(belief).action)
    }
}

/// Per-arm rollout Q-estimates at the configured λ, combined by the exact
/// one-step knapsack.
#[derive(Debug, Clone, Copy)]
pub struct RolloutImprovedPolicy {
    pub config: RolloutConfig,
}

impl JointPolicy for RolloutImprovedPolicy {
    fn name(&self) -> String {
        "rollout-improved".into()
    }

    fn act(&self, instance: &RmabInstance, belief: &JointBelief, rng: &mut StreamRng) -> Result<JointAction> {
        let seed: u64 = rng.random();
        let mut values = Vec::with_capacity(instance.num_arms());
        for (n, (m, b)) in instance.arms.iter().zip(&belief.per_arm).enumerate() {
            let arm_seed = rng::derive_seed(seed, rng::tag::ROLLOUT, &[n as u64]);
            let (_, q) = improve_action(m, instance.discount, b, &self.config, arm_seed)?;
            values.push(q.iter().map(|x| x.mean).collect());
        }
        Ok(solve_mck(&values, instance.budget).0)
    }
}

/// Uniform over budget-feasible joint actions. With more than 10^5 joint
/// actions it instead visits arms in random order, each drawing uniformly
/// among the actions still affordable.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

const ENUMERATION_CAP: f64 = 1e5;

/// All joint actions with Σa ≤ B, in lexicographic order.
pub fn feasible_joint_actions(instance: &RmabInstance) -> Vec<JointAction> {
    fn rec(arms: &[usize], budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<JointAction>) {
        if prefix.len() == arms.len() {
            out.push(JointAction::new(prefix.clone()));
            return;
        }
        let j = arms[prefix.len()];
        for a in 0..j.min(budget + 1) {
            prefix.push(a);
            rec(arms, budget - a, prefix, out);
            prefix.pop();
        }
    }
    let arms: Vec<usize> = instance.arms.iter().map(|m| m.num_actions()).collect();
    let mut out = Vec::new();
    rec(&arms, instance.budget, &mut Vec::new(), &mut out);
    out
}

impl JointPolicy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, instance: &RmabInstance, _: &JointBelief, rng: &mut StreamRng) -> Result<JointAction> {
        let total: f64 = instance.arms.iter().map(|m| m.num_actions() as f64).product();
        if total <= ENUMERATION_CAP {
            let all = feasible_joint_actions(instance);
            return Ok(all.choose(rng).expect("the all-passive action is feasible").clone());
        }
        let n = instance.num_arms();
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
        let mut actions = vec![0; n];
        let mut left = instance.budget;
        for i in order {
            let top = (instance.arms[i].num_actions() - 1).min(left);
            let a = rng.random_range(0..=top);
            actions[i] = a;
            left -= a;
        }
        Ok(JointAction::new(actions))
    }
}

/// The same joint action every round.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    pub action: JointAction,
}

impl FixedPolicy {
    pub fn passive(arms: usize) -> Self {
        Self {
            action: JointAction::passive(arms),
        }
    }

    /// Every arm plays `a` (clamped to its top action).
    pub fn uniform(instance: &RmabInstance, a: usize) -> Self {
        Self {
            action: JointAction::new(instance.arms.iter().map(|m| a.min(m.num_actions() - 1)).collect()),
        }
    }
}

impl JointPolicy for FixedPolicy {
    fn name(&self) -> String {
        if self.action.cost == 0 {
            "passive".into()
        } else {
            "fixed".into()
        }
    }

    fn act(&self, instance: &RmabInstance, _: &JointBelief, _: &mut StreamRng) -> Result<JointAction> {
        if self.action.actions.len() != instance.num_arms() {
            return Err(invalid("fixed action has the wrong number of arms"));
        }
        Ok(self.action.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeStep {
    pub action: JointAction,
    pub observations: Vec<usize>,
    /// Σ_n r_n(s_n, a_n) this round.
    pub reward: f64,
    /// Beliefs after this round's update.
    pub belief: JointBelief,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub episode: u64,
    pub initial_belief: JointBelief,
    pub steps: Vec<EpisodeStep>,
    pub discounted_return: f64,
}

/// One episode. Hidden states are drawn from `initial`; each arm's
/// environment noise comes from its own stream keyed by (seed, episode, arm),
/// so policies evaluated on the same seed face the same randomness wherever
/// their actions agree.
pub fn run_episode(
    instance: &RmabInstance,
    policy: &dyn JointPolicy,
    horizon: usize,
    initial: &JointBelief,
    seed: u64,
    episode: u64,
) -> Result<EpisodeLog> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    instance.check_belief(initial)?;
    let n = instance.num_arms();
    let mut env: Vec<StreamRng> = (0..n)
        .map(|i| rng::stream(seed, rng::tag::EPISODE_ENV, &[episode, i as u64]))
        .collect();
    let mut policy_rng = rng::stream(seed, rng::tag::EPISODE_POLICY, &[episode]);
    let mut states: Vec<usize> = initial.per_arm.iter().zip(env.iter_mut()).map(|(b, r)| b.sample_state(r)).collect();
    let mut belief = initial.clone();
    let mut steps = Vec::with_capacity(horizon);
    let mut ret = 0.0;
    let mut weight = 1.0;
    for _ in 0..horizon {
        let action = policy.act(instance, &belief, &mut policy_rng)?;
        if action.actions.len() != n {
            return Err(invalid("policy returned an action of the wrong length"));
        }
        action.check(instance.budget)?;
        let mut observations = Vec::with_capacity(n);
        let mut reward = 0.0;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let m = &instance.arms[i];
            let a = action.actions[i];
            let out = m.sample_step(states[i], a, &mut env[i]);
            reward += out.reward;
            observations.push(out.observation);
            next.push(m.belief_update(&belief.per_arm[i], a, out.observation)?);
            states[i] = out.next_state;
        }
        belief = JointBelief::new(next);
        ret += weight * reward;
        weight *= instance.discount;
        steps.push(EpisodeStep {
            action,
            observations,
            reward,
            belief: belief.clone(),
        });
    }
    Ok(EpisodeLog {
        seed,
        episode,
        initial_belief: initial.clone(),
        steps,
        discounted_return: ret,
    })
}

/// Recomputes the belief trajectory of a log from its (action, observation)
/// history.
pub fn replay_beliefs(instance: &RmabInstance, log: &EpisodeLog) -> Result<Vec<JointBelief>> {
    let mut belief = log.initial_belief.clone();
    let mut out = Vec::with_capacity(log.steps.len());
    for step in &log.steps {
        let next = instance
            .arms
            .iter()
            .enumerate()
            .map(|(i, m)| m.belief_update(&belief.per_arm[i], step.action.actions[i], step.observations[i]))
            .collect::<Result<Vec<_>>>()?;
        belief = JointBelief::new(next);
        out.push(belief.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub policy_name: String,
    pub seed: u64,
    pub episodes: usize,
    pub horizon: usize,
    pub mean_return: f64,
    pub std_error: f64,
    pub ci95: f64,
    /// Mean over all rounds of (cost / B); zero when B = 0.
    pub budget_utilization: f64,
    /// Largest per-round cost seen in any episode.
    pub max_round_cost: usize,
    #[serde(skip)]
    pub returns: Vec<f64>,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Runs `episodes` independent episodes (in parallel) from the instance's
/// start belief and aggregates their discounted returns.
pub fn evaluate_policy(
    instance: &RmabInstance,
    policy: &dyn JointPolicy,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(invalid("episodes must be at least 1"));
    }
    let started = std::time::Instant::now();
    let initial = instance.start_belief();
    let summaries = par::try_map_range(episodes, |e| {
        let log = run_episode(instance, policy, horizon, &initial, seed, e as u64)?;
        let costs: Vec<usize> = log.steps.iter().map(|s| s.action.cost).collect();
        Ok::<_, crate::Error>((log.discounted_return, costs))
    })?;
    let returns: Vec<f64> = summaries.iter().map(|s| s.0).collect();
    let (mean_return, std_error) = mean_and_se(&returns);
    let rounds = (episodes * horizon) as f64;
    let spent: usize = summaries.iter().flat_map(|s| s.1.iter()).sum();
    let budget_utilization = if instance.budget == 0 {
        0.0
    } else {
        spent as f64 / (rounds * instance.budget as f64)
    };
    let max_round_cost = summaries.iter().flat_map(|s| s.1.iter().copied()).max().unwrap_or(0);
    Ok(EvalReport {
        policy_name: policy.name(),
        seed,
        episodes,
        horizon,
        mean_return,
        std_error,
        ci95: 1.96 * std_error,
        budget_utilization,
        max_round_cost,
        returns,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Sample mean and standard error (n − 1 denominator; zero for one sample).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
