use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pormab::backup::PbviConfig;
use pormab::bound::ArmBackend;
use pormab::model::Belief;
use pormab::par;
use pormab::policies::{LagrangianMode, LagrangianPlanner, LambdaGrid};
use pormab::rollout::{improve_action, RolloutConfig};
use pormab::sim::{evaluate_policy, generate_instance, GeneratorKind, GeneratorSpec, RandomPolicy};

fn instance() -> pormab::RmabInstance {
    generate_instance(&GeneratorSpec {
        kind: GeneratorKind::RandomDirichlet,
        arms: 8,
        states: 3,
        actions: 3,
        observations: 3,
        budget: 4,
        discount: 0.9,
        seed: 7,
    })
    .unwrap()
}

// every case runs once per mode; results are identical, only wall time differs
fn modes() -> [(&'static str, bool); 2] {
    [("sequential", true), ("rayon", false)]
}

fn bench_rollout(c: &mut Criterion) {
    let inst = instance();
    let cfg = RolloutConfig {
        horizon: 30,
        trajectories: 4096,
        ..RolloutConfig::default()
    };
    let b = Belief::uniform(3);
    let mut g = c.benchmark_group("improve_action");
    for (name, seq) in modes() {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| black_box(improve_action(&inst.arms[0], 0.9, &b, &cfg, 1).unwrap()))
        });
    }
    g.finish();
    par::set_sequential(false);
}

fn bench_episodes(c: &mut Criterion) {
    let inst = instance();
    let mut g = c.benchmark_group("evaluate_policy");
    for (name, seq) in modes() {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| black_box(evaluate_policy(&inst, &RandomPolicy, 40, 400, 3).unwrap().mean_return))
        });
    }
    g.finish();
    par::set_sequential(false);
}

fn bench_planner(c: &mut Criterion) {
    let inst = instance();
    let grid = LambdaGrid::geometric(1e-3, 12.5, 16).unwrap();
    let backend = ArmBackend::Pbvi(PbviConfig::default());
    let mut g = c.benchmark_group("lagrangian_planner");
    g.sample_size(10);
    for (name, seq) in modes() {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| black_box(LagrangianPlanner::new(&inst, grid.clone(), &backend, LagrangianMode::Penalized).unwrap()))
        });
    }
    g.finish();
    par::set_sequential(false);
}

criterion_group!(benches, bench_rollout, bench_episodes, bench_planner);
criterion_main!(benches);
