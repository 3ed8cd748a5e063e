mod common;

use pormab::backup::{
    exact_solve, exact_two_state_density, initial_alpha_set, pbvi_backup, pbvi_error_bounds_for, pbvi_solve,
    sample_simplex, sondik_backup, BeliefSet, InitialSet, PbviConfig, SondikConfig, StopRule,
};
use pormab::model::Belief;
use pormab::sim::arm_expectimax_value;
use proptest::prelude::*;
use rand::SeedableRng;

use common::{random_model, stream, toy_a};

fn grid(n: usize) -> Vec<Belief> {
    (0..n)
        .map(|i| {
            let p = i as f64 / (n - 1) as f64;
            Belief::new(vec![p, 1.0 - p]).unwrap()
        })
        .collect()
}

#[test]
fn one_exact_backup_is_two_step_expectimax() {
    let m = toy_a();
    let v2 = sondik_backup(&initial_alpha_set(&m, 0.0), &m, 0.9, SondikConfig::default()).unwrap();
    for b in grid(21) {
        let want = arm_expectimax_value(&m, 0.9, &b, 2, 0.0).unwrap();
        assert!((v2.value(&b) - want).abs() < 1e-12, "{b:?}");
    }
}

#[test]
fn exact_backups_track_expectimax_with_a_penalty() {
    let mut r = stream(20, &[0]);
    let m = random_model(2, 3, 2, &mut r);
    let mut set = initial_alpha_set(&m, 0.2);
    for h in 2..=4 {
        set = sondik_backup(&set, &m, 0.8, SondikConfig::default()).unwrap();
        for b in grid(11) {
            let want = arm_expectimax_value(&m, 0.8, &b, h, 0.2).unwrap();
            assert!((set.value(&b) - want).abs() < 1e-10);
        }
    }
}

#[test]
fn pruning_does_not_change_the_value() {
    let mut r = stream(21, &[0]);
    let m = random_model(3, 2, 2, &mut r);
    let set = sondik_backup(&initial_alpha_set(&m, 0.0), &m, 0.9, SondikConfig::default()).unwrap();
    let loose = SondikConfig {
        prune: false,
        ..SondikConfig::default()
    };
    let a = sondik_backup(&set, &m, 0.9, SondikConfig::default()).unwrap();
    let b = sondik_backup(&set, &m, 0.9, loose).unwrap();
    assert!(a.len() <= b.len());
    for _ in 0..500 {
        let p = sample_simplex(3, &mut r);
        assert!((a.value(&p) - b.value(&p)).abs() < 1e-10);
    }
}

/// Tabular value iteration on the fully observed chain.
fn mdp_values(m: &pormab::ArmModel, beta: f64) -> Vec<f64> {
    let n = m.num_states();
    let mut v = vec![0.0; n];
    for _ in 0..2000 {
        v = (0..n)
            .map(|s| {
                (0..m.num_actions())
                    .map(|a| m.reward(s, a) + beta * (0..n).map(|t| m.transition(a, s, t) * v[t]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    v
}

#[test]
fn toy_vertices_match_the_observed_chain() {
    // the revealing action keeps vertices closed, and with r(s,a)=s acting is
    // never worse than watching, so vertex values equal the MDP values
    let m = toy_a();
    let cfg = PbviConfig {
        stop: StopRule {
            tol: 1e-9,
            max_backups: 1000,
        },
        ..PbviConfig::default()
    };
    let solved = pormab::backup::solve_arm_pbvi(&m, 0.9, 0.0, &cfg, &InitialSet::LowerBound);
    let mdp = mdp_values(&m, 0.9);
    for s in 0..2 {
        assert!((solved.set.value(&Belief::vertex(2, s)) - mdp[s]).abs() < 1e-6);
    }
}

#[test]
fn pbvi_within_its_certificate_of_exact() {
    for i in 0..4u64 {
        let mut r = stream(22, &[i]);
        let m = random_model(2, 2, 3, &mut r);
        let points = BeliefSet::two_state_grid(9);
        let stop = StopRule {
            tol: 1e-8,
            max_backups: 800,
        };
        let (pbvi, _) = pbvi_solve(&m, 0.85, 0.1, &points, stop, &InitialSet::LowerBound);
        let (exact, _) = exact_solve(
            &m,
            0.85,
            0.1,
            &BeliefSet::two_state_grid(51),
            stop,
            &InitialSet::LowerBound,
            SondikConfig::default(),
        )
        .unwrap();
        let bound = pbvi_error_bounds_for(&m, 0.1, 0.85, exact_two_state_density(&points)).total;
        for b in grid(201) {
            let gap = exact.value(&b) - pbvi.value(&b);
            // the point-based set is a subset of the exact backup, so it never overshoots
            assert!(gap > -1e-6, "pbvi above exact by {}", -gap);
            assert!(gap < bound + 1e-6);
        }
    }
}

#[test]
fn warm_start_reaches_the_same_fixed_point() {
    let m = toy_a();
    let cfg = PbviConfig::default();
    let points = cfg.belief_set(&m);
    let stop = StopRule {
        tol: 1e-10,
        max_backups: 2000,
    };
    let (cold, _) = pbvi_solve(&m, 0.9, 0.3, &points, stop, &InitialSet::LowerBound);
    let (other, _) = pbvi_solve(&m, 0.9, 0.0, &points, stop, &InitialSet::LowerBound);
    let (warm, stats) = pbvi_solve(&m, 0.9, 0.3, &points, stop, &InitialSet::Warm(other));
    assert!(stats.converged);
    for b in points.points() {
        assert!((cold.value(b) - warm.value(b)).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn value_non_increasing_in_lambda(seed in any::<u64>(), l1 in 0.0f64..2.0, dl in 0.0f64..2.0) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(3, 3, 2, &mut r);
        let points = PbviConfig::default().belief_set(&m);
        let stop = StopRule { tol: 1e-9, max_backups: 2000 };
        let (a, _) = pbvi_solve(&m, 0.8, l1, &points, stop, &InitialSet::LowerBound);
        let (b, _) = pbvi_solve(&m, 0.8, l1 + dl, &points, stop, &InitialSet::LowerBound);
        for _ in 0..50 {
            let p = sample_simplex(3, &mut r);
            prop_assert!(b.value(&p) <= a.value(&p) + 1e-7);
        }
    }

    #[test]
    fn backups_are_convex_in_belief(seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(3, 2, 3, &mut r);
        let points = PbviConfig::default().belief_set(&m);
        let set = pbvi_backup(&initial_alpha_set(&m, 0.0), &points, &m, 0.9);
        let set = pbvi_backup(&set, &points, &m, 0.9);
        for _ in 0..100 {
            let (x, y) = (sample_simplex(3, &mut r), sample_simplex(3, &mut r));
            let mid = x.mix(&y, 0.5);
            prop_assert!(set.value(&mid) <= 0.5 * (set.value(&x) + set.value(&y)) + 1e-12);
        }
    }
}
