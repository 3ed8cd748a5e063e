//! The `pormab` command line: argument definitions and dispatch.

mod args;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

pub use args::*;

use crate::backup::{
    belief_set_density, exact_solve, exact_two_state_density, pbvi_error_bounds_for, sample_simplex, solve_arm_pbvi,
    BeliefSet, InitialSet, PbviConfig, SondikConfig, StopRule,
};
use crate::bound::{
    arm_solvers, lagrangian_bound, ArmBackend, BoundResult, LambdaSchedule, TraceStatus, UpdateRule,
};
use crate::error::{invalid, Error, Result};
use crate::model::{load_instance, read_instance, Belief, InstanceFile, Loaded, RmabInstance};
use crate::par;
use crate::policies::{
    full_indexability_check, immediate_rewards, CandidateRemoval, IndexTable, LagrangianMode, LagrangianPlanner,
    LambdaGrid,
};
use crate::rng;
use crate::rollout::{
    improve_action, required_trajectories, standard_hoeffding_trajectories, BasePolicy, RewardMode, RolloutConfig,
};
use crate::sim::{
    evaluate_policy, generate_instance, run_episode, FixedPolicy, GeneratorKind, GeneratorSpec, GreedyPolicy,
    JointPolicy, LagrangianPolicy, RandomPolicy, RolloutImprovedPolicy,
};

/// Environment variable naming the directory for relative `--output` paths.
pub const OUT_DIR_ENV: &str = "PORMAB_OUT_DIR";

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    par::configure_threads(cli.threads);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Error::InvalidModel(violations)) => {
            for v in &violations {
                eprintln!("{v}");
            }
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Ctx<'a> {
    cli: &'a Cli,
}

impl Ctx<'_> {
    /// The resolved configuration stamped into every output. Thread count,
    /// timing and output location do not affect results and are left out.
    fn config(&self) -> Value {
        let mut v = serde_json::to_value(&self.cli.command).expect("config serializes");
        v["seed"] = json!(self.cli.seed);
        v["version"] = json!(env!("CARGO_PKG_VERSION"));
        v
    }

    fn wall(&self, started: Instant) -> String {
        if self.cli.timing {
            fmt_f64(started.elapsed().as_secs_f64() * 1e3)
        } else {
            "0".into()
        }
    }

    fn csv_header(&self) -> String {
        format!("# config: {}\n", serde_json::to_string(&self.config()).expect("config serializes"))
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.cli.output {
            None => {
                print!("{text}");
                Ok(())
            }
            Some(p) => {
                let path = resolve_output(p);
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|source| Error::Io {
                        path: dir.display().to_string(),
                        source,
                    })?;
                }
                fs::write(&path, text).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        }
    }

    fn emit_json(&self, mut doc: Value) -> Result<()> {
        doc["config"] = self.config();
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        self.emit(&s)
    }
}

fn resolve_output(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn load(args: &InstanceArgs) -> Result<RmabInstance> {
    let mut inst = load_instance(&args.instance)?;
    if let Some(b) = args.beta {
        if !(b > 0.0 && b < 1.0) {
            return Err(invalid(format!("--beta {b} must lie strictly inside (0, 1)")));
        }
        inst.discount = b;
    }
    if let Some(b) = args.budget {
        inst.budget = b;
    }
    Ok(inst)
}

fn arm_of(inst: &RmabInstance, arm: usize) -> Result<&crate::model::ArmModel> {
    inst.arms
        .get(arm)
        .ok_or_else(|| invalid(format!("arm {arm} out of range (instance has {})", inst.num_arms())))
}

fn base_policy(base: BasePolicyArg, action: Option<usize>) -> BasePolicy {
    match (action, base) {
        (Some(a), _) => BasePolicy::FixedAction(a),
        (None, BasePolicyArg::Passive) => BasePolicy::Passive,
        (None, BasePolicyArg::Greedy) => BasePolicy::GreedyImmediate,
    }
}

fn backend(args: &BackendArgs, seed: u64) -> ArmBackend {
    match args.backend {
        BackendKind::Pbvi => ArmBackend::Pbvi(PbviConfig {
            belief_points: args.belief_points,
            stop: StopRule {
                tol: args.pbvi_tol,
                max_backups: args.max_backups,
            },
            seed,
        }),
        BackendKind::Rollout => ArmBackend::Rollout {
            config: RolloutConfig {
                horizon: args.horizon_h,
                trajectories: args.trajectories,
                base_policy: base_policy(args.base, args.base_action),
                ..RolloutConfig::default()
            },
            seed,
        },
    }
}

fn build_policy(name: &str, inst: &RmabInstance, args: &PolicyArgs, seed: u64) -> Result<Box<dyn JointPolicy>> {
    Ok(match name {
        "greedy" => Box::new(GreedyPolicy {
            removal: if args.per_arm_removal {
                CandidateRemoval::PerArm
            } else {
                CandidateRemoval::Shared
            },
        }),
        "lagrangian" => {
            let top = *LambdaGrid::default_for(inst).points().last().expect("non-empty");
            let grid = LambdaGrid::geometric(1e-3, top, args.grid_points)?;
            let mode = match args.mode {
                ModeArg::Penalized => LagrangianMode::Penalized,
                ModeArg::Unpenalized => LagrangianMode::Unpenalized,
            };
            Box::new(LagrangianPolicy {
                planner: LagrangianPlanner::new(inst, grid, &backend(&args.backend, seed), mode)?,
            })
        }
        "rollout-improved" => Box::new(RolloutImprovedPolicy {
            config: RolloutConfig {
                horizon: args.backend.horizon_h,
                trajectories: args.backend.trajectories,
                base_policy: base_policy(args.backend.base, args.backend.base_action),
                lambda: args.lambda,
                ..RolloutConfig::default()
            },
        }),
        "random" => Box::new(RandomPolicy),
        "fixed" => Box::new(FixedPolicy::uniform(inst, args.fixed_action)),
        "passive" => Box::new(FixedPolicy::passive(inst.num_arms())),
        other => {
            return Err(invalid(format!(
                "unknown policy `{other}` (greedy | lagrangian | rollout-improved | random | fixed | passive)"
            )))
        }
    })
}

fn parse_belief(text: &str) -> Result<Belief> {
    let probs = text
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("bad belief entry `{x}`"))))
        .collect::<Result<Vec<_>>>()?;
    Belief::new(probs)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let ctx = Ctx { cli };
    match &cli.command {
        Command::Validate(a) => validate(&ctx, a),
        Command::Gen(a) => gen(&ctx, a),
        Command::SolveArm(a) => solve_arm(&ctx, a),
        Command::Bound(a) => bound(&ctx, a),
        Command::Plan(a) => plan(&ctx, a),
        Command::Rollout(a) => rollout(&ctx, a),
        Command::Index(a) => index(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
    }
}

fn validate(ctx: &Ctx, a: &ValidateArgs) -> Result<()> {
    match read_instance(&a.instance)? {
        Loaded::Valid(inst) => {
            let dims: Vec<String> = inst
                .arms
                .iter()
                .map(|m| format!("{}x{}x{}", m.num_states(), m.num_actions(), m.num_observations()))
                .collect();
            ctx.emit(&format!(
                "ok: {} arm(s) [{}], budget {}, discount {}\n",
                inst.num_arms(),
                dims.join(" "),
                inst.budget,
                inst.discount
            ))
        }
        Loaded::Invalid(violations) => {
            let mut out = String::new();
            for v in &violations {
                let _ = writeln!(out, "{v}");
            }
            ctx.emit(&out)?;
            // already printed; exit status 2 without repeating them
            Err(Error::InvalidModel(Vec::new()))
        }
    }
}

fn gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let spec = GeneratorSpec {
        kind: match a.kind {
            GenKind::RandomDirichlet => GeneratorKind::RandomDirichlet,
            GenKind::HealthcareOrdered => GeneratorKind::HealthcareOrdered,
        },
        arms: a.arms,
        states: a.states,
        actions: a.actions,
        observations: a.observations,
        budget: a.budget,
        discount: a.discount,
        seed: ctx.cli.seed,
    };
    let inst = generate_instance(&spec)?;
    ctx.emit_json(serde_json::to_value(InstanceFile::from(&inst))?)
}

fn solve_arm(ctx: &Ctx, a: &SolveArmArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let model = arm_of(&inst, a.arm)?;
    let beta = inst.discount;
    let cfg = PbviConfig {
        belief_points: a.belief_points,
        stop: StopRule {
            tol: a.tol,
            max_backups: a.max_backups,
        },
        seed: ctx.cli.seed,
    };
    let start = inst.start_belief().per_arm[a.arm].clone();
    let started = Instant::now();
    let (set, stats, beliefs) = match a.solver {
        SolverKind::Pbvi => {
            let s = solve_arm_pbvi(model, beta, a.lambda, &cfg, &InitialSet::LowerBound);
            (s.set, s.stats, s.beliefs)
        }
        SolverKind::Exact => {
            let check = cfg.belief_set(model);
            let (set, stats) = exact_solve(model, beta, a.lambda, &check, cfg.stop, &InitialSet::Immediate, SondikConfig::default())?;
            (set, stats, check)
        }
    };
    let delta = if model.num_states() == 2 {
        exact_two_state_density(&beliefs)
    } else {
        let mut r = rng::stream(ctx.cli.seed, rng::tag::DENSITY, &[a.arm as u64]);
        belief_set_density(&beliefs, a.probes.max(1), &mut r).delta
    };
    let bounds = pbvi_error_bounds_for(model, a.lambda, beta, delta);
    let vectors: Vec<Value> = set
        .vectors
        .iter()
        .map(|v| json!({ "action": v.action, "weights": v.weights }))
        .collect();
    ctx.emit_json(json!({
        "arm": a.arm,
        "lambda": a.lambda,
        "value_at_start": set.value(&start),
        "backups": stats.backups,
        "converged": stats.converged,
        "final_sup_change": stats.final_sup_change,
        "belief_points": beliefs.len(),
        "covering_radius": delta,
        "error_bounds": bounds,
        "wall_ms": ctx.wall(started),
        "vectors": vectors,
    }))
}

fn bound(ctx: &Ctx, a: &BoundArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let schedule = LambdaSchedule {
        lambda0: a.lambda0,
        eta: a.eta,
        tolerance: a.tol,
        max_iters: a.max_iters,
        update_rule: match a.rule {
            RuleArg::Descent => UpdateRule::Descent,
            RuleArg::Ascent => UpdateRule::Ascent,
            RuleArg::Relaxation => UpdateRule::Relaxation,
        },
    };
    let backend = backend(&a.backend, ctx.cli.seed);
    let result: BoundResult = match lagrangian_bound(&inst, &inst.start_belief(), &schedule, &backend) {
        Ok(r) => r,
        Err(Error::NoConvergence { best }) => *best,
        Err(e) => return Err(e),
    };
    let mut out = ctx.csv_header();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iter".to_string(), "lambda".into(), "bound".into(), "gradient".into()];
    header.extend((0..inst.num_arms()).map(|n| format!("v_{n}")));
    header.extend(["wall_ms".to_string(), "status".into()]);
    w.write_record(&header)?;
    for row in &result.trace {
        let mut rec = vec![
            row.iter.to_string(),
            fmt_f64(row.lambda),
            fmt_f64(row.bound),
            row.gradient.map(fmt_f64).unwrap_or_default(),
        ];
        rec.extend(row.per_arm.iter().map(|v| fmt_f64(*v)));
        rec.push(if ctx.cli.timing { fmt_f64(row.wall_ms) } else { "0".into() });
        rec.push(row.status.as_str().into());
        w.write_record(&rec)?;
    }
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| invalid(e.to_string()))?).expect("utf-8 csv"));
    if result.status == TraceStatus::NoConvergence {
        eprintln!(
            "warning: iteration cap reached; best bound {} at lambda {}",
            fmt_f64(result.bound_value),
            fmt_f64(result.lambda_star)
        );
    }
    ctx.emit(&out)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| invalid(e.to_string()))?).expect("utf-8 csv"))
}

fn plan(ctx: &Ctx, a: &PlanArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let policy = build_policy(&a.policy, &inst, &a.policy_args, ctx.cli.seed)?;
    let belief = inst.start_belief();
    let mut r = rng::stream(ctx.cli.seed, rng::tag::EPISODE_POLICY, &[0]);
    let action = policy.act(&inst, &belief, &mut r)?;
    action.check(inst.budget)?;
    let rewards = immediate_rewards(&inst, &belief);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["arm", "action", "immediate_reward"])?;
    for (n, &act) in action.actions.iter().enumerate() {
        w.write_record([n.to_string(), act.to_string(), fmt_f64(rewards[n][act])])?;
    }
    ctx.emit(&(ctx.csv_header() + &finish_csv(w)?))
}

fn rollout(ctx: &Ctx, a: &RolloutArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let model = arm_of(&inst, a.arm)?;
    let belief = match &a.belief {
        Some(t) => parse_belief(t)?,
        None => inst.start_belief().per_arm[a.arm].clone(),
    };
    if belief.len() != model.num_states() {
        return Err(invalid("belief length does not match the arm's state count"));
    }
    let trajectories = match a.epsilon {
        None => a.trajectories,
        Some(eps) => {
            let (lo, hi) = model.penalized_reward_range(a.lambda);
            if !(hi > lo) {
                return Err(invalid("trajectory sizing needs a non-degenerate reward range"));
            }
            let l = if a.standard_hoeffding {
                standard_hoeffding_trajectories(eps, a.delta, inst.discount, a.horizon, hi, lo)
            } else {
                required_trajectories(eps, a.delta, inst.discount, a.horizon, hi, lo)
            };
            (l.max(1)).min(usize::MAX as u64) as usize
        }
    };
    let config = RolloutConfig {
        horizon: a.horizon,
        trajectories,
        base_policy: base_policy(a.base, a.base_action),
        lambda: a.lambda,
        reward_mode: match a.reward_mode {
            RewardModeArg::Expected => RewardMode::Expected,
            RewardModeArg::Realized => RewardMode::Realized,
        },
        common_random_numbers: !a.no_crn,
    };
    let seed = rng::derive_seed(ctx.cli.seed, rng::tag::ROLLOUT, &[a.arm as u64]);
    let (best, qs) = improve_action(model, inst.discount, &belief, &config, seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["action", "mean", "half_width", "selected"])?;
    for (act, q) in qs.iter().enumerate() {
        w.write_record([act.to_string(), fmt_f64(q.mean), fmt_f64(q.half_width), u8::from(act == best).to_string()])?;
    }
    ctx.emit(&(ctx.csv_header() + &finish_csv(w)?))
}

/// Belief grid for the index table: an even grid for two states, otherwise
/// vertices, the center and uniform draws.
fn belief_grid(m: usize, size: usize, seed: u64, arm: usize) -> Vec<Belief> {
    if m == 2 {
        return BeliefSet::two_state_grid(size.max(2)).points().to_vec();
    }
    let mut set = BeliefSet::vertices(m);
    set.insert(Belief::uniform(m));
    let mut r = rng::stream(seed, rng::tag::PROBE, &[arm as u64]);
    while set.len() < size {
        set.insert(sample_simplex(m, &mut r));
    }
    set.points().iter().take(size.max(1)).cloned().collect()
}

fn index(ctx: &Ctx, a: &IndexArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let arms: Vec<usize> = match a.arm {
        Some(n) => {
            arm_of(&inst, n)?;
            vec![n]
        }
        None => (0..inst.num_arms()).collect(),
    };
    let top = match a.grid_max {
        Some(t) => t,
        None => *LambdaGrid::default_for(&inst).points().last().expect("non-empty"),
    };
    let grid = LambdaGrid::linear(0.0, top, a.grid_points.max(2))?;
    let backend = backend(&a.backend, ctx.cli.seed);
    let mut all = arm_solvers(&inst, &backend);
    let mut solvers: Vec<_> = arms.iter().map(|&n| all[n].clone()).collect();
    all.clear();
    let beliefs: Vec<Vec<Belief>> = arms
        .iter()
        .map(|&n| belief_grid(inst.arms[n].num_states(), a.belief_grid, ctx.cli.seed, n))
        .collect();
    let table = IndexTable::build(&mut solvers, &beliefs, grid.points())?;
    let mut reports = Vec::new();
    for (s, b) in solvers.iter_mut().zip(&beliefs) {
        reports.push(full_indexability_check(s, b, grid.points())?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["arm", "belief", "activity", "index", "resolution", "indexable"])?;
    for e in &table.entries {
        let belief: Vec<String> = e.belief.iter().map(|x| fmt_f64(*x)).collect();
        let pass = reports[e.arm].levels[e.activity].pass;
        w.write_record([
            arms[e.arm].to_string(),
            belief.join(","),
            e.activity.to_string(),
            e.index.map(fmt_f64).unwrap_or_else(|| "not-attained".into()),
            fmt_f64(e.resolution),
            u8::from(pass).to_string(),
        ])?;
    }
    ctx.emit(&(ctx.csv_header() + &finish_csv(w)?))
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    report: &'a crate::sim::EvalReport,
    wall_ms: String,
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let inst = load(&a.inst)?;
    let started = Instant::now();
    let policy = build_policy(&a.policy, &inst, &a.policy_args, ctx.cli.seed)?;
    let report = evaluate_policy(&inst, policy.as_ref(), a.horizon, a.episodes, ctx.cli.seed)?;
    let logs = (0..a.log_episodes.min(a.episodes))
        .map(|e| run_episode(&inst, policy.as_ref(), a.horizon, &inst.start_belief(), ctx.cli.seed, e as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut doc = serde_json::to_value(ReportDoc {
        report: &report,
        wall_ms: ctx.wall(started),
    })?;
    doc["episodes"] = serde_json::to_value(&logs)?;
    ctx.emit_json(doc)
}

fn compare(ctx: &Ctx, a: &CompareArgs) -> Result<()> {
    let names: Vec<&str> = a.policies.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(invalid("--policies is empty"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["policy", "instance", "seed", "mean", "se", "ci95", "budget_utilization", "wall_ms"])?;
    for path in &a.instances {
        let inst = load(&InstanceArgs {
            instance: path.clone(),
            beta: a.beta,
            budget: a.budget,
        })?;
        for name in &names {
            let started = Instant::now();
            let policy = build_policy(name, &inst, &a.policy_args, ctx.cli.seed)?;
            let r = evaluate_policy(&inst, policy.as_ref(), a.horizon, a.episodes, ctx.cli.seed)?;
            w.write_record([
                name.to_string(),
                path.display().to_string(),
                ctx.cli.seed.to_string(),
                fmt_f64(r.mean_return),
                fmt_f64(r.std_error),
                fmt_f64(r.ci95),
                fmt_f64(r.budget_utilization),
                ctx.wall(started),
            ])?;
        }
    }
    ctx.emit(&(ctx.csv_header() + &finish_csv(w)?))
}
