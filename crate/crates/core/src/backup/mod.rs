//! Single-arm value computation under a fixed multiplier λ.
//!
//! Value functions are piecewise-linear convex, stored as [`AlphaSet`]s.
//! Two backups are provided: the exact one-pass cross-sum ([`sondik_backup`])
//! and the point-based backup ([`pbvi_backup`]) restricted to a
//! [`BeliefSet`]. [`pbvi_error_bounds`] turns a belief set's covering radius
//! into error certificates for the latter.

mod alpha;
mod beliefs;
mod pbvi;
pub mod prune;
mod sondik;

pub use alpha::{initial_alpha_set, lower_bound_alpha_set, AlphaSet, AlphaVector, BeliefValue, ValueAt};
pub use beliefs::{
    belief_set_density, exact_two_state_density, expand_belief_set, sample_simplex, BeliefSet, DensityEstimate,
    ExpansionStrategy,
};
pub use pbvi::{
    exact_solve, pbvi_backup, pbvi_solve, solve_arm_pbvi, InitialSet, IterationStat, PbviConfig, SolveStats, SolvedArm,
    StopRule,
};
pub use sondik::{sondik_backup, Projections, SondikConfig};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    /// Error introduced by one point-based backup.
    pub per_backup: f64,
    /// Error of the point-based value function at any horizon.
    pub total: f64,
}

/// (Rmax − Rmin)·δ_B/(1−β) per backup and (Rmax − Rmin)·δ_B/(1−β)² in total,
/// with Rmax/Rmin taken over the λ-adjusted rewards.
pub fn pbvi_error_bounds(r_max: f64, r_min: f64, discount: f64, delta_b: f64) -> ErrorBounds {
    assert!(r_max >= r_min, "r_max must be at least r_min");
    assert!(discount > 0.0 && discount < 1.0, "discount must lie in (0, 1)");
    assert!(delta_b >= 0.0, "covering radius must be non-negative");
    let per_backup = (r_max - r_min) * delta_b / (1.0 - discount);
    ErrorBounds {
        per_backup,
        total: per_backup / (1.0 - discount),
    }
}

/// [`pbvi_error_bounds`] for a model at a given multiplier.
pub fn pbvi_error_bounds_for(model: &crate::model::ArmModel, lambda: f64, discount: f64, delta_b: f64) -> ErrorBounds {
    let (lo, hi) = model.penalized_reward_range(lambda);
    pbvi_error_bounds(hi, lo, discount, delta_b)
}
