//! Numerical index computations: the two-action index by bisection on the
//! Q-gap, grid-based multi-action indices and a full-indexability scan.

use serde::Serialize;

use super::lagrangian::{argmax, lagrangian_scores, LagrangianMode};
use crate::bound::ArmSolver;
use crate::error::{invalid, Error, Result};
use crate::model::Belief;

/// Penalized Q^λ(ω, a) for every action.
pub fn q_values(solver: &mut ArmSolver, belief: &Belief, lambda: f64) -> Result<Vec<f64>> {
    let discount = solver.discount();
    let (model, value) = solver.solved(lambda)?;
    Ok(lagrangian_scores(model, discount, belief, lambda, value, LagrangianMode::Penalized))
}

/// â^λ(ω): the optimal action at λ, lowest on ties.
pub fn optimal_action(solver: &mut ArmSolver, belief: &Belief, lambda: f64) -> Result<usize> {
    Ok(argmax(&q_values(solver, belief, lambda)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexValue {
    pub index: f64,
    /// Width of the final bracket (bisection) or the grid step below the index.
    pub resolution: f64,
}

/// Smallest λ in the bracket at which Q^λ(ω,1) − Q^λ(ω,0) ≤ 0, to width `tol`.
///
/// Requires a positive gap at the lower end and a non-positive gap at the
/// upper end; equality counts as passive-preferred.
pub fn whittle_index_two_action(
    solver: &mut ArmSolver,
    belief: &Belief,
    bracket: (f64, f64),
    tol: f64,
) -> Result<IndexValue> {
    if solver.model().num_actions() != 2 {
        return Err(invalid("two-action index needs an arm with exactly two actions"));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo && tol > 0.0) {
        return Err(invalid("bracket must satisfy 0 ≤ lo < hi and tol > 0"));
    }
    let gap = |s: &mut ArmSolver, l: f64| -> Result<f64> {
        let q = q_values(s, belief, l)?;
        Ok(q[1] - q[0])
    };
    let (g_lo, g_hi) = (gap(solver, lo)?, gap(solver, hi)?);
    if !(g_lo > 0.0 && g_hi <= 0.0) {
        return Err(Error::NoSignChange {
            lo,
            hi,
            gap_lo: g_lo,
            gap_hi: g_hi,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gap(solver, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(IndexValue { index: hi, resolution: hi - lo })
}

/// Smallest grid λ with â^λ(ω) ≤ `activity`; `None` when never attained.
pub fn multi_action_index(
    solver: &mut ArmSolver,
    belief: &Belief,
    activity: usize,
    lambda_grid: &[f64],
) -> Result<Option<IndexValue>> {
    for (g, &l) in lambda_grid.iter().enumerate() {
        if optimal_action(solver, belief, l)? <= activity {
            let resolution = if g == 0 { 0.0 } else { l - lambda_grid[g - 1] };
            return Ok(Some(IndexValue { index: l, resolution }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub activity: usize,
    pub pass: bool,
    /// (belief grid index, λ) where membership reverted from true to false.
    pub violations: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexabilityReport {
    pub levels: Vec<LevelReport>,
}

impl IndexabilityReport {
    pub fn passes(&self) -> bool {
        self.levels.iter().all(|l| l.pass)
    }
}

/// For every activity level a, checks that ω ∈ U(λ, a) = {â^λ(ω) ≤ a} never
/// reverts to false as λ increases along the grid, at every grid belief.
pub fn full_indexability_check(
    solver: &mut ArmSolver,
    belief_grid: &[Belief],
    lambda_grid: &[f64],
) -> Result<IndexabilityReport> {
    let j = solver.model().num_actions();
    // actions[b][g]
    let mut actions = Vec::with_capacity(belief_grid.len());
    for b in belief_grid {
        let row = lambda_grid
            .iter()
            .map(|&l| optimal_action(solver, b, l))
            .collect::<Result<Vec<_>>>()?;
        actions.push(row);
    }
    let levels = (0..j)
        .map(|a| {
            let mut violations = Vec::new();
            for (bi, row) in actions.iter().enumerate() {
                let mut inside = false;
                for (g, &act) in row.iter().enumerate() {
                    let now = act <= a;
                    if inside && !now {
                        violations.push((bi, lambda_grid[g]));
                    }
                    inside |= now;
                }
            }
            LevelReport {
                activity: a,
                pass: violations.is_empty(),
                violations,
            }
        })
        .collect();
    Ok(IndexabilityReport { levels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEntry {
    pub arm: usize,
    pub belief: Vec<f64>,
    pub activity: usize,
    pub index: Option<f64>,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexTable {
    pub lambda_grid: Vec<f64>,
    pub belief_grid_size: usize,
    pub entries: Vec<IndexEntry>,
}

impl IndexTable {
    /// Multi-action indices for every activity level at every belief.
    pub fn build(solvers: &mut [ArmSolver], beliefs: &[Vec<Belief>], lambda_grid: &[f64]) -> Result<Self> {
        let mut entries = Vec::new();
        for (arm, (solver, pts)) in solvers.iter_mut().zip(beliefs).enumerate() {
            for b in pts {
                for activity in 0..solver.model().num_actions() {
                    let v = multi_action_index(solver, b, activity, lambda_grid)?;
                    entries.push(IndexEntry {
                        arm,
                        belief: b.probs().to_vec(),
                        activity,
                        index: v.map(|x| x.index),
                        resolution: v.map_or(f64::NAN, |x| x.resolution),
                    });
                }
            }
        }
        Ok(Self {
            lambda_grid: lambda_grid.to_vec(),
            belief_grid_size: beliefs.first().map_or(0, Vec::len),
            entries,
        })
    }
}
