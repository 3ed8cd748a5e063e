//! Environment simulation, policy evaluation, exhaustive oracles and instance
//! generation.

mod episode;
mod generate;
pub mod oracle;

pub use episode::{
    evaluate_policy, feasible_joint_actions, mean_and_se, replay_beliefs, run_episode, EpisodeLog, EpisodeStep,
    EvalReport, FixedPolicy, GreedyPolicy, JointPolicy, LagrangianPolicy, RandomPolicy, RolloutImprovedPolicy,
};
pub use generate::{generate_instance, healthcare_precision, healthcare_signal, GeneratorKind, GeneratorSpec};
pub use oracle::{
    arm_expectimax_q, arm_expectimax_value, brute_force_constrained_value, brute_force_with_cap, fixed_action_value,
    tree_nodes,
};
