use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ArmModel, Belief};

/// One linear piece of a piecewise-linear convex value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub weights: Vec<f64>,
    /// Action whose backup generated the vector.
    pub action: usize,
}

impl AlphaVector {
    pub fn new(weights: Vec<f64>, action: usize) -> Self {
        Self { weights, action }
    }

    #[inline]
    pub fn dot(&self, belief: &[f64]) -> f64 {
        self.weights.iter().zip(belief).map(|(a, w)| a * w).sum()
    }

    pub(crate) fn same_weights(&self, other: &AlphaVector, tol: f64) -> bool {
        self.weights
            .iter()
            .zip(&other.weights)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Finite set of alpha vectors, tagged with the multiplier it was solved
/// under and the number of backups performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSet {
    pub lambda: f64,
    pub horizon: usize,
    pub vectors: Vec<AlphaVector>,
}

/// Value of an [`AlphaSet`] at a belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueAt {
    pub value: f64,
    pub index: usize,
    pub action: usize,
}

impl AlphaSet {
    pub fn new(lambda: f64, horizon: usize, vectors: Vec<AlphaVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(invalid("alpha set must contain at least one vector"));
        }
        let m = vectors[0].weights.len();
        if vectors.iter().any(|v| v.weights.len() != m || v.weights.iter().any(|x| !x.is_finite())) {
            return Err(invalid("alpha vectors must share a dimension and be finite"));
        }
        Ok(Self { lambda, horizon, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].weights.len()
    }

    /// max over vectors of ⟨α, ω⟩; ties go to the lowest index.
    pub fn evaluate(&self, belief: &Belief) -> ValueAt {
        self.evaluate_slice(belief.probs())
    }

    pub(crate) fn evaluate_slice(&self, belief: &[f64]) -> ValueAt {
        let mut best = ValueAt {
            value: f64::NEG_INFINITY,
            index: 0,
            action: self.vectors[0].action,
        };
        for (i, v) in self.vectors.iter().enumerate() {
            let x = v.dot(belief);
            if x > best.value {
                best = ValueAt { value: x, index: i, action: v.action };
            }
        }
        best
    }

    pub fn value(&self, belief: &Belief) -> f64 {
        self.evaluate(belief).value
    }

    /// Largest |entry| over all vectors.
    pub fn max_abs_entry(&self) -> f64 {
        self.vectors
            .iter()
            .flat_map(|v| v.weights.iter())
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: AlphaSet = serde_json::from_str(text)?;
        AlphaSet::new(set.lambda, set.horizon, set.vectors)
    }
}

/// Anything that can value a single-arm belief.
pub trait BeliefValue: Sync {
    fn value(&self, belief: &Belief) -> f64;
}

impl BeliefValue for AlphaSet {
    fn value(&self, belief: &Belief) -> f64 {
        AlphaSet::value(self, belief)
    }
}

/// One vector per action with α(s) = r(s,a) − λa; horizon 1.
pub fn initial_alpha_set(model: &ArmModel, lambda: f64) -> AlphaSet {
    let m = model.num_states();
    let vectors = (0..model.num_actions())
        .map(|a| AlphaVector::new((0..m).map(|s| model.penalized_reward(s, a, lambda)).collect(), a))
        .collect();
    AlphaSet {
        lambda,
        horizon: 1,
        vectors,
    }
}

/// A single constant vector at min_{s,a} R̄(s,a,λ)/(1−β): a pointwise lower
/// bound on the infinite-horizon value; horizon 0.
pub fn lower_bound_alpha_set(model: &ArmModel, lambda: f64, discount: f64) -> AlphaSet {
    let (lo, _) = model.penalized_reward_range(lambda);
    AlphaSet {
        lambda,
        horizon: 0,
        vectors: vec![AlphaVector::new(vec![lo / (1.0 - discount); model.num_states()], 0)],
    }
}
