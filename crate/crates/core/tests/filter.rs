mod common;

use pormab::backup::sample_simplex;
use pormab::model::{ArmModel, Belief};
use pormab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use common::{random_model, toy_a};

// forward pass over states, kept separate from the filter's own loop order
fn forward(model: &ArmModel, prior: &[f64], history: &[(usize, usize)]) -> Vec<f64> {
    let m = model.num_states();
    let mut alpha = prior.to_vec();
    for &(a, o) in history {
        let mut next = vec![0.0; m];
        for t in 0..m {
            for s in 0..m {
                next[t] += alpha[s] * model.observation(a, s, o) * model.transition(a, s, t);
            }
        }
        alpha = next;
    }
    let z: f64 = alpha.iter().sum();
    alpha.iter().map(|x| x / z).collect()
}

#[test]
fn toy_perfect_signal_forces_vertex() {
    let m = toy_a();
    let post = m.belief_update(&Belief::uniform(2), 1, 0).unwrap();
    assert_eq!(post.probs(), &[0.0, 1.0]);
}

#[test]
fn passive_update_by_hand() {
    let m = toy_a();
    // P(o=0) = 0.5·0.8 + 0.5·0.3 = 0.55
    let lik = m.observation_likelihood(&Belief::uniform(2), 0);
    assert!((lik[0] - 0.55).abs() < 1e-15);
    let post = m.belief_update(&Belief::uniform(2), 0, 0).unwrap();
    // (0.4·[0.9, 0.1] + 0.15·[0.4, 0.6]) / 0.55
    let want = [(0.36 + 0.06) / 0.55, (0.04 + 0.09) / 0.55];
    for (x, y) in post.probs().iter().zip(want) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn zero_likelihood_signal_is_an_error() {
    let m = toy_a();
    let err = m.belief_update(&Belief::vertex(2, 1), 1, 0).unwrap_err();
    assert!(matches!(err, Error::ImpossibleObservation { action: 1, observation: 0 }));
}

proptest! {
    #[test]
    fn filter_matches_forward_pass(seed in any::<u64>(), m in 1usize..=4, j in 1usize..=4, k in 1usize..=4) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(m, j, k, &mut r);
        let prior = sample_simplex(m, &mut r);
        let mut state = prior.sample_state(&mut r);
        let mut belief = prior.clone();
        let mut history = Vec::new();
        for _ in 0..6 {
            let a = r.random_range(0..j);
            let out = model.sample_step(state, a, &mut r);
            history.push((a, out.observation));
            belief = model.belief_update(&belief, a, out.observation).unwrap();
            state = out.next_state;
            let want = forward(&model, prior.probs(), &history);
            for (x, y) in belief.probs().iter().zip(&want) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn posterior_stays_on_simplex(seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(3, 2, 3, &mut r);
        let b = sample_simplex(3, &mut r);
        for a in 0..2 {
            let lik = model.observation_likelihood(&b, a);
            prop_assert!((lik.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (o, &p) in lik.iter().enumerate() {
                if p > 0.0 {
                    let post = model.belief_update(&b, a, o).unwrap();
                    prop_assert!(post.probs().iter().all(|&x| x >= 0.0));
                    prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn averaging_posteriors_gives_the_prediction(seed in any::<u64>()) {
        // Σ_o P(o) τ(ω, a, o) = ω P_a
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(3, 2, 2, &mut r);
        let b = sample_simplex(3, &mut r);
        let a = r.random_range(0..2);
        let lik = model.observation_likelihood(&b, a);
        let mut avg = vec![0.0; 3];
        for (o, &p) in lik.iter().enumerate() {
            if p > 0.0 {
                for (x, y) in avg.iter_mut().zip(model.belief_update(&b, a, o).unwrap().probs()) {
                    *x += p * y;
                }
            }
        }
        for t in 0..3 {
            let pred: f64 = (0..3).map(|s| b.probs()[s] * model.transition(a, s, t)).sum();
            prop_assert!((avg[t] - pred).abs() < 1e-12);
        }
    }
}
