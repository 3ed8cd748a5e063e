//! Monte-Carlo rollout estimates of λ-adjusted action values for one arm.
//!
//! A trajectory draws a hidden state from the starting belief, forces the
//! first action, then follows a base policy on the filtered belief for the
//! remaining steps. Rewards are the λ-adjusted *expected* rewards at the
//! running belief unless [`RewardMode::Realized`] is selected.
//!
//! Every trajectory owns a random stream derived from
//! `(seed, belief hash, action, index)`; with common random numbers the action
//! is left out so that all first actions see the same noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backup::BeliefValue;
use crate::error::{invalid, Result};
use crate::model::{ArmModel, Belief};
use crate::par;
use crate::rng;

/// Stationary belief-to-action rule followed after the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasePolicy {
    /// Always action 0.
    Passive,
    /// argmax_a R(ω, a) − λa.
    GreedyImmediate,
    FixedAction(usize),
}

impl BasePolicy {
    pub fn act(&self, model: &ArmModel, belief: &Belief, lambda: f64) -> usize {
        match *self {
            BasePolicy::Passive => 0,
            BasePolicy::FixedAction(a) => a.min(model.num_actions() - 1),
            BasePolicy::GreedyImmediate => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for a in 0..model.num_actions() {
                    let v = model.lagrangian_reward(belief, a, lambda);
                    if v > best_v {
                        best_v = v;
                        best = a;
                    }
                }
                best
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "passive" => Ok(BasePolicy::Passive),
            "greedy" | "greedy-immediate" => Ok(BasePolicy::GreedyImmediate),
            _ => {
                let a = s
                    .strip_prefix("fixed:")
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| invalid(format!("unknown base policy `{s}` (passive | greedy | fixed:<a>)")))?;
                Ok(BasePolicy::FixedAction(a))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// R(ω_h, a_h) − λa_h at the running belief.
    Expected,
    /// r(s_h, a_h) − λa_h at the sampled hidden state.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub trajectories: usize,
    pub base_policy: BasePolicy,
    pub lambda: f64,
    pub reward_mode: RewardMode,
    /// Share trajectory streams across first actions in a sweep.
    pub common_random_numbers: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            trajectories: 256,
            base_policy: BasePolicy::Passive,
            lambda: 0.0,
            reward_mode: RewardMode::Expected,
            common_random_numbers: true,
        }
    }
}

impl RolloutConfig {
    fn check(&self) -> Result<()> {
        if self.horizon == 0 || self.trajectories == 0 {
            return Err(invalid("rollout horizon and trajectory count must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("rollout lambda must be non-negative"));
        }
        Ok(())
    }
}

/// Mean discounted return over L trajectories and its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QEstimate {
    pub mean: f64,
    pub half_width: f64,
}

impl QEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let half_width = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, half_width }
    }
}

/// Full record of one simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    /// Belief before each step (length H).
    pub beliefs: Vec<Belief>,
    pub actions: Vec<usize>,
    pub observations: Vec<usize>,
    pub rewards: Vec<f64>,
    pub discounted_return: f64,
}

/// Simulates one trajectory from `belief` with a forced first action.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    first_action: usize,
    config: &RolloutConfig,
    rng: &mut R,
) -> TrajectoryLog {
    let h = config.horizon;
    let mut log = TrajectoryLog {
        beliefs: Vec::with_capacity(h),
        actions: Vec::with_capacity(h),
        observations: Vec::with_capacity(h),
        rewards: Vec::with_capacity(h),
        discounted_return: 0.0,
    };
    let mut state = belief.sample_state(rng);
    let mut current = belief.clone();
    let mut action = first_action;
    let mut weight = 1.0;
    for step in 0..h {
        let outcome = model.sample_step(state, action, rng);
        let reward = match config.reward_mode {
            RewardMode::Expected => model.lagrangian_reward(&current, action, config.lambda),
            RewardMode::Realized => outcome.reward - config.lambda * action as f64,
        };
        log.discounted_return += weight * reward;
        weight *= discount;
        log.rewards.push(reward);
        log.actions.push(action);
        log.observations.push(outcome.observation);
        let next = model
            .belief_update(&current, action, outcome.observation)
            .expect("observation sampled from a state in the belief's support");
        log.beliefs.push(std::mem::replace(&mut current, next));
        state = outcome.next_state;
        if step + 1 < h {
            action = config.base_policy.act(model, &current, config.lambda);
        }
    }
    log
}

fn support_bounds(model: &ArmModel, discount: f64, config: &RolloutConfig) -> (f64, f64) {
    let (lo, hi) = model.penalized_reward_range(config.lambda);
    let geometric: f64 = (0..config.horizon).map(|h| discount.powi(h as i32)).sum();
    (lo * geometric, hi * geometric)
}

fn stream_key(belief: &Belief, action: Option<usize>) -> [u64; 2] {
    [rng::hash_f64s(belief.probs()), action.map_or(u64::MAX, |a| a as u64)]
}

fn sample_returns(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    first_action: usize,
    config: &RolloutConfig,
    seed: u64,
    key: [u64; 2],
) -> Vec<f64> {
    let (lo, hi) = support_bounds(model, discount, config);
    let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    par::map_range(config.trajectories, |l| {
        let mut r = rng::stream(seed, rng::tag::ROLLOUT, &[key[0], key[1], l as u64]);
        let ret = simulate_trajectory(model, discount, belief, first_action, config, &mut r).discounted_return;
        assert!(
            ret >= lo - slack && ret <= hi + slack,
            "trajectory return {ret} outside [{lo}, {hi}]"
        );
        ret
    })
}

/// Q̃(ω, a): mean discounted H-step return with the first action forced.
pub fn rollout_q(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    first_action: usize,
    config: &RolloutConfig,
    seed: u64,
) -> Result<QEstimate> {
    config.check()?;
    if first_action >= model.num_actions() {
        return Err(invalid(format!("action {first_action} out of range")));
    }
    let key = stream_key(belief, Some(first_action));
    Ok(QEstimate::from_samples(&sample_returns(model, discount, belief, first_action, config, seed, key)))
}

/// Value of the base policy at `belief`: the rollout estimate for the
/// policy's own action. Returns the estimate and that action.
pub fn rollout_value(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    config: &RolloutConfig,
    seed: u64,
) -> Result<(QEstimate, usize)> {
    let a = config.base_policy.act(model, belief, config.lambda);
    Ok((rollout_q(model, discount, belief, a, config, seed)?, a))
}

/// One-step improvement: every first action is rolled out and the best mean
/// wins (lowest action on ties).
///
/// Each estimate already carries the immediate term R(ω,a) − λa followed by
/// the discounted continuation under the base policy, so the argmax is taken
/// over the estimates directly.
pub fn improve_action(
    model: &ArmModel,
    discount: f64,
    belief: &Belief,
    config: &RolloutConfig,
    seed: u64,
) -> Result<(usize, Vec<QEstimate>)> {
    config.check()?;
    let per_action: Vec<QEstimate> = (0..model.num_actions())
        .map(|a| {
            let key = stream_key(belief, if config.common_random_numbers { None } else { Some(a) });
            QEstimate::from_samples(&sample_returns(model, discount, belief, a, config, seed, key))
        })
        .collect();
    let mut best = 0;
    for (a, q) in per_action.iter().enumerate() {
        if q.mean > per_action[best].mean {
            best = a;
        }
    }
    Ok((best, per_action))
}

/// Rollout-backed value function: V(ω) ≈ max_a Q̃(ω, a).
#[derive(Debug, Clone)]
pub struct RolloutValue {
    pub model: ArmModel,
    pub discount: f64,
    pub config: RolloutConfig,
    pub seed: u64,
}

impl BeliefValue for RolloutValue {
    fn value(&self, belief: &Belief) -> f64 {
        let (a, q) = improve_action(&self.model, self.discount, belief, &self.config, self.seed)
            .expect("validated rollout configuration");
        q[a].mean
    }
}

/// Trajectory count 2ε²(1−β²) / ((Rmax−Rmin)²(1−β^H) log(2/δ)), before
/// rounding. Note it shrinks with ε; see [`standard_hoeffding_trajectories`].
pub fn required_trajectories_raw(epsilon: f64, delta: f64, beta: f64, horizon: usize, r_max: f64, r_min: f64) -> f64 {
    assert!(epsilon > 0.0 && delta > 0.0 && delta < 1.0, "need ε > 0 and δ ∈ (0, 1)");
    assert!((0.0..1.0).contains(&beta) && horizon >= 1 && r_max > r_min);
    let range = r_max - r_min;
    2.0 * epsilon * epsilon * (1.0 - beta * beta)
        / (range * range * (1.0 - beta.powi(horizon as i32)) * (2.0 / delta).ln())
}

/// Ceiling of [`required_trajectories_raw`].
pub fn required_trajectories(epsilon: f64, delta: f64, beta: f64, horizon: usize, r_max: f64, r_min: f64) -> u64 {
    required_trajectories_raw(epsilon, delta, beta, horizon, r_max, r_min).ceil() as u64
}

/// Conventional Hoeffding sizing for returns bounded in a range of width
/// (Rmax−Rmin)(1−β^H)/(1−β): L' = width²·log(2/δ)/(2ε²).
pub fn standard_hoeffding_trajectories(epsilon: f64, delta: f64, beta: f64, horizon: usize, r_max: f64, r_min: f64) -> u64 {
    assert!(epsilon > 0.0 && delta > 0.0 && delta < 1.0);
    assert!((0.0..1.0).contains(&beta) && horizon >= 1 && r_max > r_min);
    let width = (r_max - r_min) * (1.0 - beta.powi(horizon as i32)) / (1.0 - beta);
    (width * width * (2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as u64
}
