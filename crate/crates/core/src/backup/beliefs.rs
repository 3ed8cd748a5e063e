use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ArmModel, Belief};

/// Finite set of belief points on which point-based backups are performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSet {
    points: Vec<Belief>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionStrategy {
    /// For every existing point and every action, sample an observation from
    /// the point's predictive distribution and keep the successor belief that
    /// lies farthest (L1) from the current set.
    ReachableStochastic,
    /// Uniform draws on the simplex.
    RandomUniform,
}

/// Two points closer than this (L1) count as duplicates.
const DUPLICATE_TOL: f64 = 1e-12;

impl BeliefSet {
    /// Builds a set, dropping duplicates and keeping first occurrences.
    pub fn new(points: Vec<Belief>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("belief set must contain at least one point"));
        }
        let m = points[0].len();
        if points.iter().any(|p| p.len() != m) {
            return Err(invalid("belief points must share a dimension"));
        }
        let mut set = Self { points: Vec::with_capacity(points.len()) };
        for p in points {
            set.insert(p);
        }
        Ok(set)
    }

    /// Simplex vertices.
    pub fn vertices(m: usize) -> Self {
        Self {
            points: (0..m).map(|s| Belief::vertex(m, s)).collect(),
        }
    }

    /// Evenly spaced points (p, 1−p) on the 2-state simplex, `n ≥ 2`.
    pub fn two_state_grid(n: usize) -> Self {
        assert!(n >= 2);
        let pts = (0..n)
            .map(|i| {
                let p = i as f64 / (n - 1) as f64;
                Belief::renormalize(vec![p, 1.0 - p])
            })
            .collect();
        Self::new(pts).expect("grid is non-empty")
    }

    /// Vertices, the uniform belief, then reachable expansion to `target`
    /// points (or until expansion stops finding new points).
    pub fn default_for(model: &ArmModel, target: usize, rng: &mut impl Rng) -> Self {
        let m = model.num_states();
        let mut set = Self::vertices(m);
        set.insert(Belief::uniform(m));
        let mut stalls = 0;
        while set.len() < target && stalls < 8 {
            let before = set.len();
            let want = target - set.len();
            set = expand_belief_set(&set, model, ExpansionStrategy::ReachableStochastic, want, rng);
            if set.len() == before {
                stalls += 1;
            }
        }
        set
    }

    pub fn points(&self) -> &[Belief] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Minimum L1 distance from `b` to the set.
    pub fn distance_to(&self, b: &Belief) -> f64 {
        self.points
            .iter()
            .map(|p| p.l1_distance(b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Adds `b` unless an existing point is within the duplicate tolerance.
    pub fn insert(&mut self, b: Belief) -> bool {
        if self.distance_to(&b) <= DUPLICATE_TOL {
            return false;
        }
        self.points.push(b);
        true
    }
}

/// Uniform draw on the simplex (Dirichlet(1, …, 1)).
pub fn sample_simplex(m: usize, rng: &mut (impl Rng + ?Sized)) -> Belief {
    loop {
        let e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
        if e.iter().sum::<f64>() > 0.0 {
            return Belief::renormalize(e);
        }
    }
}

/// Grows `beliefs` by up to `count` points.
pub fn expand_belief_set(
    beliefs: &BeliefSet,
    model: &ArmModel,
    strategy: ExpansionStrategy,
    count: usize,
    rng: &mut impl Rng,
) -> BeliefSet {
    let mut out = beliefs.clone();
    if count == 0 {
        return out;
    }
    let target = beliefs.len() + count;
    match strategy {
        ExpansionStrategy::RandomUniform => {
            let m = beliefs.dim();
            for _ in 0..count {
                out.insert(sample_simplex(m, rng));
            }
        }
        ExpansionStrategy::ReachableStochastic => {
            for point in beliefs.points() {
                if out.len() >= target {
                    break;
                }
                let mut best: Option<(f64, Belief)> = None;
                for a in 0..model.num_actions() {
                    let s = point.sample_state(rng);
                    let o = crate::model::sample_categorical(model.observation_row(a, s), rng);
                    let Ok(next) = model.belief_update(point, a, o) else {
                        continue;
                    };
                    let d = out.distance_to(&next);
                    if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                        best = Some((d, next));
                    }
                }
                if let Some((d, b)) = best {
                    if d > DUPLICATE_TOL {
                        out.insert(b);
                    }
                }
            }
        }
    }
    out
}

/// Monte-Carlo lower estimate of the covering radius
/// max_{ω'} min_{ω∈B} ‖ω − ω'‖₁ from uniform probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub delta: f64,
    pub probes: usize,
}

pub fn belief_set_density(beliefs: &BeliefSet, probe_count: usize, rng: &mut impl Rng) -> DensityEstimate {
    assert!(probe_count >= 1, "probe_count must be at least 1");
    let m = beliefs.dim();
    let delta = (0..probe_count)
        .map(|_| beliefs.distance_to(&sample_simplex(m, rng)))
        .fold(0.0, f64::max);
    DensityEstimate { delta, probes: probe_count }
}

/// Exact covering radius for a 2-state belief set.
///
/// Parametrize points by p = ω(0); the L1 distance is 2|p − p'|, so the
/// farthest probe is an endpoint of [0, 1] or the midpoint of the widest gap.
pub fn exact_two_state_density(beliefs: &BeliefSet) -> f64 {
    assert_eq!(beliefs.dim(), 2, "closed form needs a 2-state set");
    let mut ps: Vec<f64> = beliefs.points().iter().map(|b| b.probs()[0]).collect();
    ps.sort_by(f64::total_cmp);
    let mut delta = 2.0 * ps[0].max(1.0 - ps[ps.len() - 1]);
    for w in ps.windows(2) {
        delta = delta.max(w[1] - w[0]);
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    #[test]
    fn duplicates_are_rejected() {
        let s = BeliefSet::new(vec![Belief::uniform(2), Belief::uniform(2), Belief::vertex(2, 0)]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn zero_count_is_identity() {
        let model = crate::model::ArmModel::new(
            &[vec![vec![0.9, 0.1], vec![0.4, 0.6]]],
            &[vec![vec![0.8, 0.2], vec![0.3, 0.7]]],
            &[vec![0.0], vec![1.0]],
        )
        .unwrap();
        let mut rng = StreamRng::seed_from_u64(3);
        let set = BeliefSet::vertices(2);
        for strat in [ExpansionStrategy::RandomUniform, ExpansionStrategy::ReachableStochastic] {
            assert_eq!(expand_belief_set(&set, &model, strat, 0, &mut rng), set);
        }
    }

    #[test]
    fn exact_density_closed_form() {
        assert_eq!(exact_two_state_density(&BeliefSet::vertices(2)), 1.0);
        let grid = BeliefSet::two_state_grid(11);
        assert!((exact_two_state_density(&grid) - 0.1).abs() < 1e-12);
        let one = BeliefSet::new(vec![Belief::vertex(2, 0)]).unwrap();
        assert_eq!(exact_two_state_density(&one), 2.0);
    }
}
