use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const CSV_HELP: &str = "\
Output formats (every file starts with `# config: {...}` holding the resolved run config):
  bound     iter,lambda,bound,gradient,v_0..v_{N-1},wall_ms,status
  plan      arm,action,immediate_reward
  rollout   action,mean,half_width,selected
  index     arm,belief,activity,index,resolution,indexable
  compare   policy,instance,seed,mean,se,ci95,budget_utilization,wall_ms
  gen, solve-arm, simulate write JSON documents with a top-level `config` key.
Floats are printed with 17 significant digits. wall_ms is 0 unless --timing is set.
The output directory for relative --output paths can be set with PORMAB_OUT_DIR.
Exit status: 0 success, 1 runtime error, 2 usage error or invalid instance.";

/// Budgeted planning for partially observed restless bandits.
#[derive(Debug, Parser)]
#[command(name = "pormab", version, after_help = CSV_HELP)]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores, 1 = sequential). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Report measured wall-clock times instead of 0.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Check an instance file; prints one line per violation.
    Validate(ValidateArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve one arm's λ-adjusted POMDP and dump its alpha vectors.
    SolveArm(SolveArmArgs),
    /// Lagrangian upper bound with the multiplier search trace.
    Bound(BoundArgs),
    /// One joint decision at the start belief.
    Plan(PlanArgs),
    /// Rollout Q-estimates for every first action of one arm.
    Rollout(RolloutArgs),
    /// Multi-action index table over a belief grid.
    Index(IndexArgs),
    /// Evaluate one policy by simulation.
    Simulate(SimulateArgs),
    /// Evaluate several policies on several instances.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InstanceArgs {
    pub instance: PathBuf,
    /// Replace the instance's discount factor.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Replace the instance's budget.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    pub instance: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    RandomDirichlet,
    HealthcareOrdered,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "random-dirichlet")]
    pub kind: GenKind,
    #[arg(long, default_value_t = 4)]
    pub arms: usize,
    #[arg(long, default_value_t = 3)]
    pub states: usize,
    #[arg(long, default_value_t = 3)]
    pub actions: usize,
    #[arg(long, default_value_t = 3)]
    pub observations: usize,
    #[arg(long, default_value_t = 3)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.9)]
    pub discount: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Pbvi,
    Rollout,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasePolicyArg {
    Passive,
    Greedy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackendArgs {
    /// Per-arm value backend.
    #[arg(long, value_enum, default_value = "pbvi")]
    pub backend: BackendKind,
    /// PBVI belief points per arm.
    #[arg(long, default_value_t = 32)]
    pub belief_points: usize,
    /// PBVI stopping tolerance on the sup value change.
    #[arg(long, default_value_t = 1e-6)]
    pub pbvi_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_backups: usize,
    /// Rollout trajectory length H.
    #[arg(long, default_value_t = 20)]
    pub horizon_h: usize,
    /// Rollout trajectories L per (belief, action).
    #[arg(long, default_value_t = 256)]
    pub trajectories: usize,
    #[arg(long, value_enum, default_value = "passive")]
    pub base: BasePolicyArg,
    /// Fixed base action, overriding --base.
    #[arg(long)]
    pub base_action: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Pbvi,
    Exact,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArmArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    pub arm: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "pbvi")]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 32)]
    pub belief_points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_backups: usize,
    /// Uniform probes for the covering-radius estimate (M > 2).
    #[arg(long, default_value_t = 10_000)]
    pub probes: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Descent,
    Ascent,
    Relaxation,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value = "descent")]
    pub rule: RuleArg,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Penalized,
    Unpenalized,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolicyArgs {
    /// λ for rollout-improved decisions.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// λ-grid size for the Lagrangian heuristic (default range).
    #[arg(long, default_value_t = 64)]
    pub grid_points: usize,
    /// Lagrangian scoring mode.
    #[arg(long, value_enum, default_value = "penalized")]
    pub mode: ModeArg,
    /// Use per-arm removal in the greedy heuristic.
    #[arg(long)]
    pub per_arm_removal: bool,
    /// Action played by every arm under `fixed`.
    #[arg(long, default_value_t = 1)]
    pub fixed_action: usize,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    /// greedy | lagrangian | rollout-improved | random | fixed | passive
    #[arg(long, default_value = "greedy")]
    pub policy: String,
    #[command(flatten)]
    pub policy_args: PolicyArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardModeArg {
    Expected,
    Realized,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    pub arm: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Trajectory length H.
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Trajectories L (ignored when --epsilon is given).
    #[arg(long, default_value_t = 1024)]
    pub trajectories: usize,
    #[arg(long, value_enum, default_value = "passive")]
    pub base: BasePolicyArg,
    #[arg(long)]
    pub base_action: Option<usize>,
    #[arg(long, value_enum, default_value = "expected")]
    pub reward_mode: RewardModeArg,
    /// Independent streams per first action.
    #[arg(long)]
    pub no_crn: bool,
    /// Comma-separated belief (defaults to the start belief).
    #[arg(long)]
    pub belief: Option<String>,
    /// Size L from the sizing expression with this ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Size L with the conventional Hoeffding bound instead.
    #[arg(long)]
    pub standard_hoeffding: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndexArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    /// Only this arm (all arms by default).
    #[arg(long)]
    pub arm: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub grid_points: usize,
    /// Top of the λ grid (default 1.25·(Rmax−Rmin)/(1−β)); the grid starts at 0.
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Belief grid size per arm.
    #[arg(long, default_value_t = 9)]
    pub belief_grid: usize,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inst: InstanceArgs,
    #[arg(long, default_value = "greedy")]
    pub policy: String,
    #[arg(long, default_value_t = 40)]
    pub horizon: usize,
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    /// Include the first k episode logs in the document.
    #[arg(long, default_value_t = 0)]
    pub log_episodes: usize,
    #[command(flatten)]
    pub policy_args: PolicyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    /// Comma-separated policy names.
    #[arg(long, default_value = "greedy,lagrangian,random")]
    pub policies: String,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 40)]
    pub horizon: usize,
    #[arg(long, default_value_t = 200)]
    pub episodes: usize,
    #[command(flatten)]
    pub policy_args: PolicyArgs,
}
