//! Planning, bounding and simulation for multi-action partially observable
//! restless multi-armed bandits.
//!
//! Each arm is a finite POMDP whose action id doubles as its budget cost. The
//! arms evolve independently and interact only through a per-round budget on
//! the sum of chosen action ids. The crate provides:
//!
//! - [`model`]: arm models, the Bayes belief filter, and the generative sampler.
//! - [`backup`]: exact (one-pass cross-sum) and point-based backups over
//!   alpha-vector sets, with belief-set tools and error certificates.
//! - [`bound`]: the Lagrangian upper bound and the multiplier search.
//! - [`rollout`]: Monte-Carlo rollout estimates and one-step policy improvement.
//! - [`policies`]: budget-feasible joint action selection and index tools.
//! - [`sim`]: episode simulation, policy evaluation, brute-force oracles and
//!   instance generation.
//! - [`cli`]: the `pormab` command-line front end.

pub mod backup;
pub mod bound;
pub mod cli;
pub mod error;
pub mod model;
pub mod par;
pub mod policies;
pub mod rng;
pub mod rollout;
pub mod sim;

pub use error::{Error, Result};
pub use model::{ArmModel, Belief, JointBelief, RmabInstance};
