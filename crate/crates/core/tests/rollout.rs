mod common;

use pormab::model::{ArmModel, Belief};
use pormab::rollout::{
    improve_action, required_trajectories, required_trajectories_raw, rollout_q, rollout_value, simulate_trajectory,
    standard_hoeffding_trajectories, BasePolicy, RewardMode, RolloutConfig,
};
use pormab::sim::fixed_action_value;
use proptest::prelude::*;
use rand::SeedableRng;

use common::{random_model, stream, toy_a, trivial_arm};

/// Exact H-step value of "play `first`, then always play `then`".
fn exact_forced(model: &ArmModel, beta: f64, belief: &Belief, first: usize, then: usize, h: usize) -> f64 {
    let m = model.num_states();
    let p = belief.probs();
    let now: f64 = (0..m).map(|s| p[s] * model.reward(s, first)).sum();
    let mut next = vec![0.0; m];
    for s in 0..m {
        for t in 0..m {
            next[t] += p[s] * model.transition(first, s, t);
        }
    }
    now + beta * fixed_action_value(model, beta, &Belief::new(next).unwrap(), then, h - 1)
}

#[test]
fn passive_rollout_covers_the_chain_value() {
    let m = toy_a();
    let b = Belief::uniform(2);
    let cfg = RolloutConfig {
        horizon: 20,
        trajectories: 4000,
        ..RolloutConfig::default()
    };
    let exact = fixed_action_value(&m, 0.9, &b, 0, 20);
    let covered = (0..100u64)
        .filter(|&s| {
            let q = rollout_q(&m, 0.9, &b, 0, &RolloutConfig { reward_mode: RewardMode::Realized, ..cfg }, s).unwrap();
            (q.mean - exact).abs() <= q.half_width
        })
        .count();
    assert!(covered >= 93, "{covered}/100");
}

#[test]
fn improvement_only_picks_near_best_actions() {
    let m = toy_a();
    let b = Belief::vertex(2, 1);
    let cfg = RolloutConfig {
        horizon: 3,
        trajectories: 2000,
        reward_mode: RewardMode::Realized,
        ..RolloutConfig::default()
    };
    for seed in 0..10 {
        let (a, q) = improve_action(&m, 0.9, &b, &cfg, seed).unwrap();
        let exact: Vec<f64> = (0..2).map(|x| exact_forced(&m, 0.9, &b, x, 0, 3)).collect();
        let best = exact.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(best - exact[a] <= 2.0 * q[a].half_width + 1e-12);
    }
}

#[test]
fn estimates_track_exact_forced_values() {
    let mut r = stream(50, &[0]);
    let m = random_model(3, 3, 2, &mut r);
    let b = Belief::new(vec![0.2, 0.5, 0.3]).unwrap();
    let cfg = RolloutConfig {
        horizon: 12,
        trajectories: 8000,
        base_policy: BasePolicy::FixedAction(2),
        reward_mode: RewardMode::Realized,
        ..RolloutConfig::default()
    };
    for a in 0..3 {
        let q = rollout_q(&m, 0.8, &b, a, &cfg, 3).unwrap();
        let exact = exact_forced(&m, 0.8, &b, a, 2, 12);
        assert!((q.mean - exact).abs() < 2.0 * q.half_width, "a={a}: {} vs {exact}", q.mean);
    }
}

#[test]
fn same_seed_same_estimates() {
    let m = toy_a();
    let cfg = RolloutConfig::default();
    let b = Belief::uniform(2);
    assert_eq!(improve_action(&m, 0.9, &b, &cfg, 4).unwrap(), improve_action(&m, 0.9, &b, &cfg, 4).unwrap());
    assert_ne!(rollout_q(&m, 0.9, &b, 0, &cfg, 4).unwrap(), rollout_q(&m, 0.9, &b, 0, &cfg, 5).unwrap());
    pormab::par::set_sequential(true);
    let seq = improve_action(&m, 0.9, &b, &cfg, 4).unwrap();
    pormab::par::set_sequential(false);
    assert_eq!(seq, improve_action(&m, 0.9, &b, &cfg, 4).unwrap());
}

#[test]
fn common_numbers_cancel_shared_dynamics() {
    let mut r = stream(51, &[0]);
    let c = 0.35;
    let m = trivial_arm(3, 2, c, &mut r);
    let b = Belief::uniform(3);
    let cfg = RolloutConfig {
        horizon: 15,
        trajectories: 300,
        ..RolloutConfig::default()
    };
    let (_, q) = improve_action(&m, 0.9, &b, &cfg, 0).unwrap();
    assert!((q[1].mean - q[0].mean - c).abs() < 1e-12);
    let indep = RolloutConfig {
        common_random_numbers: false,
        ..cfg
    };
    let (_, q) = improve_action(&m, 0.9, &b, &indep, 0).unwrap();
    assert!((q[1].mean - q[0].mean - c).abs() > 1e-9);
}

#[test]
fn heavy_penalty_means_passive() {
    let m = toy_a();
    let cfg = RolloutConfig {
        lambda: 100.0,
        base_policy: BasePolicy::GreedyImmediate,
        ..RolloutConfig::default()
    };
    for p in [0.0, 0.3, 1.0] {
        let b = Belief::new(vec![p, 1.0 - p]).unwrap();
        assert_eq!(improve_action(&m, 0.9, &b, &cfg, 1).unwrap().0, 0);
        assert_eq!(rollout_value(&m, 0.9, &b, &cfg, 1).unwrap().1, 0);
    }
}

#[test]
fn bad_configs_are_rejected() {
    let m = toy_a();
    let b = Belief::uniform(2);
    let cfg = RolloutConfig {
        trajectories: 0,
        ..RolloutConfig::default()
    };
    assert!(rollout_q(&m, 0.9, &b, 0, &cfg, 0).is_err());
    assert!(rollout_q(&m, 0.9, &b, 5, &RolloutConfig::default(), 0).is_err());
}

#[test]
fn sizing_expressions() {
    // 2·1·(1 − 0.81) / (1·(1 − 0.9²)·ln 40) = 2/ln 40
    let raw = required_trajectories_raw(1.0, 0.05, 0.9, 2, 1.0, 0.0);
    assert!((raw - 2.0 / 40f64.ln()).abs() < 1e-12);
    assert_eq!(required_trajectories(1.0, 0.05, 0.9, 2, 1.0, 0.0), 1);
    // width 1.9, 1.9²·ln 40 / 2 = 6.658…
    assert_eq!(standard_hoeffding_trajectories(1.0, 0.05, 0.9, 2, 1.0, 0.0), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_beliefs_are_the_filter(seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(3, 3, 3, &mut r);
        let b = pormab::backup::sample_simplex(3, &mut r);
        let cfg = RolloutConfig { horizon: 8, base_policy: BasePolicy::GreedyImmediate, lambda: 0.1, ..RolloutConfig::default() };
        let log = simulate_trajectory(&m, 0.9, &b, 2, &cfg, &mut r);
        let mut cur = b.clone();
        let mut ret = 0.0;
        for h in 0..8 {
            prop_assert_eq!(&log.beliefs[h], &cur);
            let want = if h == 0 { 2 } else { cfg.base_policy.act(&m, &cur, 0.1) };
            prop_assert_eq!(log.actions[h], want);
            ret += 0.9f64.powi(h as i32) * log.rewards[h];
            cur = m.belief_update(&cur, log.actions[h], log.observations[h]).unwrap();
        }
        prop_assert!((ret - log.discounted_return).abs() < 1e-12);
    }

    #[test]
    fn myopic_and_constant_closed_forms(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(2, 3, 2, &mut r);
        let b = pormab::backup::sample_simplex(2, &mut r);
        let cfg = RolloutConfig { horizon: 6, trajectories: 16, lambda, ..RolloutConfig::default() };
        for a in 0..3 {
            let q = rollout_q(&m, 0.0, &b, a, &cfg, seed).unwrap();
            prop_assert!((q.mean - m.lagrangian_reward(&b, a, lambda)).abs() < 1e-12);
        }
    }
}
