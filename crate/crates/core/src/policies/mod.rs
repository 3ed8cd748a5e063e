//! Budget-feasible joint action selection and index computations.

pub mod index;
pub mod knapsack;
pub mod lagrangian;

pub use index::{
    full_indexability_check, multi_action_index, optimal_action, q_values, whittle_index_two_action, IndexEntry,
    IndexTable, IndexValue, IndexabilityReport, LevelReport,
};
pub use knapsack::{
    exact_one_step, greedy_select, greedy_select_with, immediate_rewards, joint_value, solve_mck, CandidateRemoval,
    GreedyStep, JointAction,
};
pub use lagrangian::{
    argmax, lagrangian_heuristic, lagrangian_scores, per_arm_lagrangian_action, HeuristicDecision, LagrangianMode,
    LagrangianPlanner, LambdaGrid,
};
