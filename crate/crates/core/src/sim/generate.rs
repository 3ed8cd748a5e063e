use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ArmModel, RmabInstance};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Every row ~ Dirichlet(1), rewards ~ U[0, 1].
    RandomDirichlet,
    /// Ordered health states: higher states and higher actions pay more,
    /// higher actions push mass upward and observe more precisely.
    HealthcareOrdered,
}

impl std::str::FromStr for GeneratorKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-dirichlet" => Ok(GeneratorKind::RandomDirichlet),
            "healthcare-ordered" => Ok(GeneratorKind::HealthcareOrdered),
            _ => Err(invalid(format!("unknown generator `{s}` (random-dirichlet | healthcare-ordered)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub arms: usize,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub budget: usize,
    pub discount: f64,
    pub seed: u64,
}

fn dirichlet_row(k: usize, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = e.iter().sum();
        if s > 0.0 {
            let mut row: Vec<f64> = e.iter().map(|x| x / s).collect();
            // put the rounding residue on the largest entry so the row sums to 1
            let resid = 1.0 - row.iter().sum::<f64>();
            let top = (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b])).expect("k ≥ 1");
            row[top] += resid;
            return row;
        }
    }
}

/// Observation precision κ_a of the healthcare generator.
pub fn healthcare_precision(action: usize, actions: usize) -> f64 {
    if actions == 1 {
        return 0.2;
    }
    0.2 + 0.75 * action as f64 / (actions - 1) as f64
}

/// The observation index an ordered state maps to.
pub fn healthcare_signal(state: usize, states: usize, observations: usize) -> usize {
    if states == 1 {
        return observations - 1;
    }
    ((state * (observations - 1)) as f64 / (states - 1) as f64).round() as usize
}

fn random_arm(spec: &GeneratorSpec, rng: &mut StreamRng) -> Result<ArmModel> {
    let (m, j, k) = (spec.states, spec.actions, spec.observations);
    let transition = (0..j).map(|_| (0..m).map(|_| dirichlet_row(m, rng)).collect()).collect::<Vec<Vec<Vec<f64>>>>();
    let observation = (0..j).map(|_| (0..m).map(|_| dirichlet_row(k, rng)).collect()).collect::<Vec<Vec<Vec<f64>>>>();
    let reward = (0..m).map(|_| (0..j).map(|_| rng.random::<f64>()).collect()).collect::<Vec<Vec<f64>>>();
    ArmModel::new(&transition, &observation, &reward)
}

fn healthcare_arm(spec: &GeneratorSpec, rng: &mut StreamRng) -> Result<ArmModel> {
    let (m, j, k) = (spec.states, spec.actions, spec.observations);
    let mut levels: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    levels.sort_by(f64::total_cmp);
    let mut bonus: Vec<f64> = (0..j).map(|a| if a == 0 { 0.0 } else { 0.2 * rng.random::<f64>() }).collect();
    bonus.sort_by(f64::total_cmp);
    let reward: Vec<Vec<f64>> = (0..m).map(|s| (0..j).map(|a| levels[s] + bonus[a]).collect()).collect();

    let base: Vec<Vec<f64>> = (0..m).map(|_| dirichlet_row(m, rng)).collect();
    let transition: Vec<Vec<Vec<f64>>> = (0..j)
        .map(|a| {
            let theta = if j == 1 { 0.0 } else { 0.5 * a as f64 / (j - 1) as f64 };
            (0..m)
                .map(|s| {
                    let up = (s + 1).min(m - 1);
                    let mut row: Vec<f64> = base[s].iter().map(|p| (1.0 - theta) * p).collect();
                    row[up] += theta;
                    row
                })
                .collect()
        })
        .collect();

    // one noise row per state, shared by all actions, so precision is the only
    // thing that changes with the action
    let noise: Vec<Vec<f64>> = (0..m).map(|_| dirichlet_row(k, rng)).collect();
    let observation: Vec<Vec<Vec<f64>>> = (0..j)
        .map(|a| {
            let kappa = healthcare_precision(a, j);
            (0..m)
                .map(|s| {
                    let mut row: Vec<f64> = noise[s].iter().map(|p| (1.0 - kappa) * p).collect();
                    row[healthcare_signal(s, m, k)] += kappa;
                    row
                })
                .collect()
        })
        .collect();
    ArmModel::new(&transition, &observation, &reward)
}

/// Builds an instance; arm n draws from the stream (seed, n).
pub fn generate_instance(spec: &GeneratorSpec) -> Result<RmabInstance> {
    if spec.arms == 0 || spec.states == 0 || spec.actions == 0 || spec.observations == 0 {
        return Err(invalid("generator dimensions must be positive"));
    }
    let arms = (0..spec.arms)
        .map(|n| {
            let mut r = rng::stream(spec.seed, rng::tag::GENERATOR, &[n as u64]);
            match spec.kind {
                GeneratorKind::RandomDirichlet => random_arm(spec, &mut r),
                GeneratorKind::HealthcareOrdered => healthcare_arm(spec, &mut r),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RmabInstance::new(arms, spec.budget, spec.discount)
}
