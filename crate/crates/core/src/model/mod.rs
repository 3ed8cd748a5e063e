//! Arm models, beliefs and the Bayes filter.
//!
//! An arm has `M` hidden states, `J` actions and `K` observation signals.
//! Tensors are stored flat:
//!
//! - `transition[a][s][s']` = P(next state s' | state s, action a)
//! - `observation[a][s][k]` = P(signal k | state s, action a)
//! - `reward[s][a]`
//!
//! The observation is emitted by the state occupied *before* the transition
//! that the action triggers. The filter, both backups and the sampler all use
//! that convention.

mod io;

pub use io::{load_instance, read_instance, write_instance, ArmFile, InstanceFile, Loaded, INSTANCE_VERSION};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row-sum tolerance for stochastic matrices and beliefs.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Inputs constructed from external data may drift this far from the simplex
/// before [`Belief::new`] rejects them; accepted inputs are renormalized.
pub const BELIEF_INPUT_TOL: f64 = 1e-9;

/// One arm's POMDP.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transition: Vec<f64>,
    observation: Vec<f64>,
    reward: Vec<f64>,
}

/// What an invariant violation looked like.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationKind {
    RowSum { sum: f64 },
    Negative { value: f64 },
    AboveOne { value: f64 },
    NonFinite { value: f64 },
}

/// One invariant violation with the tensor path that produced it, e.g.
/// `transition[1][0]` for a row or `observation[0][1][2]` for an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::RowSum { sum } => write!(f, "{}: row sums to {} (expected 1)", self.path, sum),
            ViolationKind::Negative { value } => write!(f, "{}: negative probability {}", self.path, value),
            ViolationKind::AboveOne { value } => write!(f, "{}: probability {} exceeds 1", self.path, value),
            ViolationKind::NonFinite { value } => write!(f, "{}: non-finite value {}", self.path, value),
        }
    }
}

/// Result of one generative step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub observation: usize,
    pub reward: f64,
}

impl ArmModel {
    /// Builds a model from nested tensors, checking shapes only. Probability
    /// invariants are reported by [`ArmModel::validate`].
    ///
    /// `transition` is J×M×M, `observation` is J×M×K and `reward` is M×J.
    pub fn from_nested(
        transition: &[Vec<Vec<f64>>],
        observation: &[Vec<Vec<f64>>],
        reward: &[Vec<f64>],
    ) -> Result<Self> {
        let j = transition.len();
        if j == 0 {
            return Err(invalid("model needs at least one action"));
        }
        let m = transition[0].len();
        if m == 0 {
            return Err(invalid("model needs at least one state"));
        }
        if observation.len() != j {
            return Err(invalid(format!("observation has {} actions, transition has {j}", observation.len())));
        }
        let k = observation[0].first().map_or(0, Vec::len);
        if k == 0 {
            return Err(invalid("model needs at least one observation"));
        }
        let mut t = Vec::with_capacity(j * m * m);
        let mut z = Vec::with_capacity(j * m * k);
        for a in 0..j {
            if transition[a].len() != m || observation[a].len() != m {
                return Err(invalid(format!("action {a}: expected {m} state rows")));
            }
            for s in 0..m {
                if transition[a][s].len() != m {
                    return Err(invalid(format!("transition[{a}][{s}] has length {}, expected {m}", transition[a][s].len())));
                }
                if observation[a][s].len() != k {
                    return Err(invalid(format!("observation[{a}][{s}] has length {}, expected {k}", observation[a][s].len())));
                }
                t.extend_from_slice(&transition[a][s]);
                z.extend_from_slice(&observation[a][s]);
            }
        }
        if reward.len() != m {
            return Err(invalid(format!("reward has {} rows, expected {m}", reward.len())));
        }
        let mut r = Vec::with_capacity(m * j);
        for (s, row) in reward.iter().enumerate() {
            if row.len() != j {
                return Err(invalid(format!("reward[{s}] has length {}, expected {j}", row.len())));
            }
            r.extend_from_slice(row);
        }
        Ok(Self {
            num_states: m,
            num_actions: j,
            num_observations: k,
            transition: t,
            observation: z,
            reward: r,
        })
    }

    /// [`ArmModel::from_nested`] followed by validation.
    pub fn new(
        transition: &[Vec<Vec<f64>>],
        observation: &[Vec<Vec<f64>>],
        reward: &[Vec<f64>],
    ) -> Result<Self> {
        let model = Self::from_nested(transition, observation, reward)?;
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    #[inline]
    pub fn transition(&self, a: usize, s: usize, next: usize) -> f64 {
        self.transition[(a * self.num_states + s) * self.num_states + next]
    }

    /// Row `transition[a][s][..]`.
    #[inline]
    pub fn transition_row(&self, a: usize, s: usize) -> &[f64] {
        let m = self.num_states;
        let start = (a * m + s) * m;
        &self.transition[start..start + m]
    }

    #[inline]
    pub fn observation(&self, a: usize, s: usize, k: usize) -> f64 {
        self.observation[(a * self.num_states + s) * self.num_observations + k]
    }

    /// Row `observation[a][s][..]`.
    #[inline]
    pub fn observation_row(&self, a: usize, s: usize) -> &[f64] {
        let k = self.num_observations;
        let start = (a * self.num_states + s) * k;
        &self.observation[start..start + k]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// λ-adjusted per-state reward r(s,a) − λa.
    #[inline]
    pub fn penalized_reward(&self, s: usize, a: usize, lambda: f64) -> f64 {
        self.reward(s, a) - lambda * a as f64
    }

    /// (min, max) of r(s,a) − λa over all states and actions.
    pub fn penalized_reward_range(&self, lambda: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let v = self.penalized_reward(s, a, lambda);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Stable hash of the model tensors, used to key derived random streams.
    pub fn fingerprint(&self) -> u64 {
        let dims = [self.num_states as f64, self.num_actions as f64, self.num_observations as f64];
        crate::rng::hash_f64s(&[
            crate::rng::hash_f64s(&dims) as f64,
            crate::rng::hash_f64s(&self.transition) as f64,
            crate::rng::hash_f64s(&self.observation) as f64,
            crate::rng::hash_f64s(&self.reward) as f64,
        ])
    }

    pub fn transition_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_actions)
            .map(|a| (0..self.num_states).map(|s| self.transition_row(a, s).to_vec()).collect())
            .collect()
    }

    pub fn observation_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_actions)
            .map(|a| (0..self.num_states).map(|s| self.observation_row(a, s).to_vec()).collect())
            .collect()
    }

    pub fn reward_nested(&self) -> Vec<Vec<f64>> {
        self.reward.chunks(self.num_actions).map(<[f64]>::to_vec).collect()
    }

    /// Every invariant violation in the model; empty iff the model is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (m, j, k) = (self.num_states, self.num_actions, self.num_observations);
        check_rows(&mut out, "transition", j, m, m, |a, s| self.transition_row(a, s));
        check_rows(&mut out, "observation", j, m, k, |a, s| self.observation_row(a, s));
        for s in 0..m {
            for a in 0..j {
                let v = self.reward(s, a);
                if !v.is_finite() {
                    out.push(Violation {
                        path: format!("reward[{s}][{a}]"),
                        kind: ViolationKind::NonFinite { value: v },
                    });
                }
            }
        }
        out
    }

    fn check_ids(&self, action: usize) {
        assert!(action < self.num_actions, "action {action} out of range (J = {})", self.num_actions);
    }

    /// P(o = k | ω, a) for every k.
    pub fn observation_likelihood(&self, belief: &Belief, action: usize) -> Vec<f64> {
        self.check_ids(action);
        let mut out = vec![0.0; self.num_observations];
        for (s, &w) in belief.probs().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &z) in out.iter_mut().zip(self.observation_row(action, s)) {
                *o += z * w;
            }
        }
        out
    }

    /// Posterior over the next hidden state after taking `action` at `belief`
    /// and seeing `observation` (emitted by the pre-transition state).
    pub fn belief_update(&self, belief: &Belief, action: usize, observation: usize) -> Result<Belief> {
        self.check_ids(action);
        assert!(observation < self.num_observations, "observation {observation} out of range");
        let m = self.num_states;
        let mut next = vec![0.0; m];
        let mut denom = 0.0;
        for (s, &w) in belief.probs().iter().enumerate() {
            let joint = w * self.observation(action, s, observation);
            if joint == 0.0 {
                continue;
            }
            denom += joint;
            for (n, &p) in next.iter_mut().zip(self.transition_row(action, s)) {
                *n += joint * p;
            }
        }
        if denom <= 0.0 {
            return Err(Error::ImpossibleObservation { action, observation });
        }
        for v in &mut next {
            *v /= denom;
        }
        Ok(Belief::renormalize(next))
    }

    /// Σ_s ω(s) r(s, a).
    pub fn expected_reward(&self, belief: &Belief, action: usize) -> f64 {
        self.check_ids(action);
        belief
            .probs()
            .iter()
            .enumerate()
            .map(|(s, &w)| w * self.reward(s, action))
            .sum()
    }

    /// Expected reward minus the multiplier times the action's cost.
    pub fn lagrangian_reward(&self, belief: &Belief, action: usize, lambda: f64) -> f64 {
        self.expected_reward(belief, action) - lambda * action as f64
    }

    /// Samples the observation from the current state, then the next state.
    pub fn sample_step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> StepOutcome {
        self.check_ids(action);
        let observation = sample_categorical(self.observation_row(action, state), rng);
        let next_state = sample_categorical(self.transition_row(action, state), rng);
        StepOutcome {
            next_state,
            observation,
            reward: self.reward(state, action),
        }
    }
}

fn check_rows<'a>(
    out: &mut Vec<Violation>,
    name: &str,
    actions: usize,
    rows: usize,
    width: usize,
    row: impl Fn(usize, usize) -> &'a [f64],
) {
    for a in 0..actions {
        for s in 0..rows {
            let r = row(a, s);
            let mut entry_bad = false;
            for (c, &v) in r.iter().enumerate().take(width) {
                let kind = if !v.is_finite() {
                    Some(ViolationKind::NonFinite { value: v })
                } else if v < 0.0 {
                    Some(ViolationKind::Negative { value: v })
                } else if v > 1.0 {
                    Some(ViolationKind::AboveOne { value: v })
                } else {
                    None
                };
                if let Some(kind) = kind {
                    entry_bad = true;
                    out.push(Violation {
                        path: format!("{name}[{a}][{s}][{c}]"),
                        kind,
                    });
                }
            }
            if entry_bad {
                continue;
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                out.push(Violation {
                    path: format!("{name}[{a}][{s}]"),
                    kind: ViolationKind::RowSum { sum },
                });
            }
        }
    }
}

/// Inverse-CDF draw; never returns a zero-probability index.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A point on the probability simplex over an arm's hidden states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Accepts a probability vector within [`BELIEF_INPUT_TOL`] of the simplex
    /// and renormalizes it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("belief must have at least one entry"));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!("belief entry {v} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_INPUT_TOL {
            return Err(invalid(format!("belief sums to {sum}")));
        }
        Ok(Self::renormalize(probs))
    }

    /// Divides a non-negative vector by its sum. The sum must be positive.
    pub(crate) fn renormalize(mut probs: Vec<f64>) -> Self {
        let sum: f64 = probs.iter().sum();
        debug_assert!(sum > 0.0);
        if sum != 1.0 {
            for v in &mut probs {
                *v /= sum;
            }
        }
        Belief(probs)
    }

    pub fn uniform(m: usize) -> Self {
        Belief(vec![1.0 / m as f64; m])
    }

    pub fn vertex(m: usize, s: usize) -> Self {
        let mut p = vec![0.0; m];
        p[s] = 1.0;
        Belief(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// θ·self + (1−θ)·other.
    pub fn mix(&self, other: &Belief, theta: f64) -> Belief {
        let p = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| theta * a + (1.0 - theta) * b)
            .collect();
        Belief::renormalize(p)
    }

    /// Draws a hidden state from the belief.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(&self.0, rng)
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

/// Per-arm beliefs for a whole instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointBelief {
    pub per_arm: Vec<Belief>,
}

impl JointBelief {
    pub fn new(per_arm: Vec<Belief>) -> Self {
        Self { per_arm }
    }

    pub fn uniform(instance: &RmabInstance) -> Self {
        Self::new(instance.arms.iter().map(|m| Belief::uniform(m.num_states())).collect())
    }

    pub fn len(&self) -> usize {
        self.per_arm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_arm.is_empty()
    }
}

/// N arms sharing a discount and a per-round budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RmabInstance {
    pub arms: Vec<ArmModel>,
    pub budget: usize,
    pub discount: f64,
    /// Initial per-arm beliefs pinned by the instance file, if any.
    pub initial_belief: Option<JointBelief>,
}

impl RmabInstance {
    pub fn new(arms: Vec<ArmModel>, budget: usize, discount: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(invalid("instance needs at least one arm"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(invalid(format!("discount {discount} must lie strictly inside (0, 1)")));
        }
        Ok(Self {
            arms,
            budget,
            discount,
            initial_belief: None,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Largest action id available on any arm.
    pub fn max_action(&self) -> usize {
        self.arms.iter().map(|m| m.num_actions() - 1).max().unwrap_or(0)
    }

    /// The budget never binds when it covers every arm's top action.
    pub fn budget_is_slack(&self) -> bool {
        self.budget >= self.arms.iter().map(|m| m.num_actions() - 1).sum::<usize>()
    }

    pub fn start_belief(&self) -> JointBelief {
        self.initial_belief.clone().unwrap_or_else(|| JointBelief::uniform(self))
    }

    /// Checks that `belief` matches the arms' state counts.
    pub fn check_belief(&self, belief: &JointBelief) -> Result<()> {
        if belief.len() != self.num_arms() {
            return Err(invalid(format!("joint belief has {} arms, instance has {}", belief.len(), self.num_arms())));
        }
        for (n, (b, m)) in belief.per_arm.iter().zip(&self.arms).enumerate() {
            if b.len() != m.num_states() {
                return Err(invalid(format!("belief for arm {n} has {} entries, arm has {} states", b.len(), m.num_states())));
            }
        }
        Ok(())
    }

    /// Largest per-arm reward summed over arms, the per-round reward ceiling.
    pub fn max_round_reward(&self) -> f64 {
        self.arms.iter().map(|m| m.penalized_reward_range(0.0).1).sum()
    }
}
