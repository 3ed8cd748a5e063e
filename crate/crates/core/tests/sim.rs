mod common;

use pormab::model::{ArmModel, Belief, JointBelief, RmabInstance};
use pormab::policies::exact_one_step;
use pormab::sim::{
    arm_expectimax_value, brute_force_constrained_value, brute_force_with_cap, evaluate_policy, feasible_joint_actions,
    fixed_action_value, generate_instance, replay_beliefs, run_episode, FixedPolicy, GeneratorKind, GeneratorSpec,
    GreedyPolicy, RandomPolicy,
};
use pormab::Error;
use proptest::prelude::*;

use common::{random_model, stream, toy_a};

fn instance(seed: u64, arms: usize, budget: usize) -> RmabInstance {
    let mut r = stream(70, &[seed]);
    let arms = (0..arms).map(|_| random_model(2, 2, 2, &mut r)).collect();
    RmabInstance::new(arms, budget, 0.9).unwrap()
}

#[test]
fn horizon_one_is_the_expected_immediate_reward() {
    let inst = instance(0, 3, 2);
    let policy = FixedPolicy {
        action: pormab::policies::JointAction::new(vec![1, 0, 1]),
    };
    let report = evaluate_policy(&inst, &policy, 1, 20_000, 5).unwrap();
    let b = inst.start_belief();
    let want: f64 = (0..3).map(|n| inst.arms[n].expected_reward(&b.per_arm[n], policy.action.actions[n])).sum();
    assert!((report.mean_return - want).abs() < 4.0 * report.std_error + 1e-12);
}

#[test]
fn constant_rewards_give_the_geometric_sum() {
    let base = random_model(3, 2, 2, &mut stream(71, &[0]));
    let arm = ArmModel::new(&base.transition_nested(), &base.observation_nested(), &vec![vec![0.5, 0.5]; 3]).unwrap();
    let inst = RmabInstance::new(vec![arm.clone(), arm], 1, 0.8).unwrap();
    let report = evaluate_policy(&inst, &RandomPolicy, 12, 10, 0).unwrap();
    let want = 2.0 * 0.5 * (1.0 - 0.8f64.powi(12)) / 0.2;
    assert!(report.returns.iter().all(|r| (r - want).abs() < 1e-12));
    assert_eq!(report.std_error, 0.0);
}

#[test]
fn episodes_are_reproducible_and_thread_independent() {
    let inst = instance(1, 3, 1);
    let a = evaluate_policy(&inst, &RandomPolicy, 15, 40, 9).unwrap();
    pormab::par::set_sequential(true);
    let b = evaluate_policy(&inst, &RandomPolicy, 15, 40, 9).unwrap();
    pormab::par::set_sequential(false);
    assert_eq!(a.returns, b.returns);
    let c = evaluate_policy(&inst, &RandomPolicy, 15, 40, 10).unwrap();
    assert_ne!(a.returns, c.returns);
}

#[test]
fn policies_share_environment_noise() {
    // passive and a policy that is passive on arm 0 see identical arm-0
    // observations in every episode
    let inst = instance(2, 2, 1);
    let acts = pormab::policies::JointAction::new(vec![0, 1]);
    let (p, q) = (FixedPolicy::passive(2), FixedPolicy { action: acts });
    for e in 0..10 {
        let x = run_episode(&inst, &p, 10, &inst.start_belief(), 3, e).unwrap();
        let y = run_episode(&inst, &q, 10, &inst.start_belief(), 3, e).unwrap();
        for (s, t) in x.steps.iter().zip(&y.steps) {
            assert_eq!(s.observations[0], t.observations[0]);
        }
    }
}

#[test]
fn logged_beliefs_replay_through_the_filter() {
    let inst = generate_instance(&GeneratorSpec {
        kind: GeneratorKind::HealthcareOrdered,
        arms: 3,
        states: 3,
        actions: 3,
        observations: 3,
        budget: 2,
        discount: 0.9,
        seed: 4,
    })
    .unwrap();
    let log = run_episode(&inst, &GreedyPolicy::default(), 25, &inst.start_belief(), 1, 0).unwrap();
    let replayed = replay_beliefs(&inst, &log).unwrap();
    for (s, b) in log.steps.iter().zip(&replayed) {
        assert_eq!(&s.belief, b);
        assert!(s.action.cost <= inst.budget);
    }
}

#[test]
fn infeasible_fixed_policy_is_an_error() {
    let inst = instance(3, 2, 1);
    let err = evaluate_policy(&inst, &FixedPolicy::uniform(&inst, 1), 5, 2, 0).unwrap_err();
    assert!(matches!(err, Error::InfeasibleAction { cost: 2, budget: 1 }));
}

#[test]
fn horizon_one_oracle_is_the_one_step_knapsack() {
    for seed in 0..10 {
        let inst = instance(seed, 3, 2);
        let mut r = stream(72, &[seed]);
        let b = JointBelief::new((0..3).map(|_| pormab::backup::sample_simplex(2, &mut r)).collect());
        let bf = brute_force_constrained_value(&inst, &b, 1).unwrap();
        assert!((bf - exact_one_step(&inst, &b).1).abs() < 1e-12);
    }
}

#[test]
fn slack_oracle_is_the_sum_of_arm_oracles() {
    let inst = instance(4, 2, 2);
    let b = inst.start_belief();
    for h in 1..=4 {
        let joint = brute_force_constrained_value(&inst, &b, h).unwrap();
        let split: f64 = inst
            .arms
            .iter()
            .zip(&b.per_arm)
            .map(|(m, w)| arm_expectimax_value(m, 0.9, w, h, 0.0).unwrap())
            .sum();
        assert!((joint - split).abs() < 1e-10);
    }
}

#[test]
fn oracle_grows_with_horizon_for_nonnegative_rewards() {
    let inst = instance(5, 2, 1);
    let b = inst.start_belief();
    let vals: Vec<f64> = (1..=4).map(|h| brute_force_constrained_value(&inst, &b, h).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn oracle_refuses_large_trees() {
    let inst = instance(6, 3, 3);
    let b = inst.start_belief();
    assert!(matches!(brute_force_constrained_value(&inst, &b, 7), Err(Error::TooLarge { .. })));
    assert!(matches!(brute_force_with_cap(&inst, &b, 3, 10.0), Err(Error::TooLarge { .. })));
}

#[test]
fn passive_value_on_toy_by_hand() {
    // two rounds from state 1 under action 0: 1 + 0.9·0.6
    let v = fixed_action_value(&toy_a(), 0.9, &Belief::vertex(2, 1), 0, 2);
    assert!((v - 1.54).abs() < 1e-15);
}

#[test]
fn standard_error_shrinks_with_more_episodes() {
    let inst = instance(7, 3, 2);
    let small = evaluate_policy(&inst, &RandomPolicy, 20, 400, 0).unwrap();
    let large = evaluate_policy(&inst, &RandomPolicy, 20, 1600, 0).unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    assert!((large.ci95 - 1.96 * large.std_error).abs() < 1e-15);
}

#[test]
fn feasible_joint_actions_are_complete() {
    let inst = instance(8, 3, 2);
    let all = feasible_joint_actions(&inst);
    // Σ a ≤ 2 over three binary arms: 1 + 3 + 3
    assert_eq!(all.len(), 7);
    assert!(all.windows(2).all(|w| w[0].actions < w[1].actions));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_instances_are_valid(seed in any::<u64>(), arms in 1usize..4, m in 1usize..4, j in 1usize..4, k in 1usize..4) {
        for kind in [GeneratorKind::RandomDirichlet, GeneratorKind::HealthcareOrdered] {
            let inst = generate_instance(&GeneratorSpec { kind, arms, states: m, actions: j, observations: k, budget: 2, discount: 0.9, seed }).unwrap();
            for a in &inst.arms {
                prop_assert!(a.validate().is_empty());
            }
        }
    }

    #[test]
    fn random_policy_is_budget_feasible(seed in 0u64..500, budget in 0usize..4) {
        let inst = instance(seed, 3, budget);
        let rep = evaluate_policy(&inst, &RandomPolicy, 6, 4, seed).unwrap();
        prop_assert!(rep.max_round_cost <= budget);
    }
}
