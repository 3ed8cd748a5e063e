#![allow(dead_code)]

use pormab::model::ArmModel;
use pormab::rng::{self, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

pub const TEST_TAG: u64 = 0x7465_7374;

pub fn stream(seed: u64, idx: &[u64]) -> StreamRng {
    rng::stream(seed, TEST_TAG, idx)
}

/// Two states, two actions. Passive drifts and is observed noisily; the
/// active action sends both states to 1 and reveals the state exactly.
/// r(s, a) = s.
pub fn toy_a() -> ArmModel {
    ArmModel::new(
        &[vec![vec![0.9, 0.1], vec![0.4, 0.6]], vec![vec![0.0, 1.0], vec![0.0, 1.0]]],
        &[vec![vec![0.8, 0.2], vec![0.3, 0.7]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        &[vec![0.0, 0.0], vec![1.0, 1.0]],
    )
    .unwrap()
}

pub fn simplex_row(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    let mut row: Vec<f64> = e.iter().map(|x| x / s).collect();
    let resid = 1.0 - row.iter().sum::<f64>();
    row[0] += resid;
    row
}

pub fn random_model(m: usize, j: usize, k: usize, rng: &mut impl Rng) -> ArmModel {
    let t: Vec<Vec<Vec<f64>>> = (0..j).map(|_| (0..m).map(|_| simplex_row(m, rng)).collect()).collect();
    let z: Vec<Vec<Vec<f64>>> = (0..j).map(|_| (0..m).map(|_| simplex_row(k, rng)).collect()).collect();
    let r: Vec<Vec<f64>> = (0..m).map(|_| (0..j).map(|_| rng.random::<f64>()).collect()).collect();
    ArmModel::new(&t, &z, &r).unwrap()
}

/// Both actions share dynamics and observations; action 1 pays `c` more.
pub fn trivial_arm(m: usize, k: usize, c: f64, rng: &mut impl Rng) -> ArmModel {
    let t0: Vec<Vec<f64>> = (0..m).map(|_| simplex_row(m, rng)).collect();
    let z0: Vec<Vec<f64>> = (0..m).map(|_| simplex_row(k, rng)).collect();
    let r: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let base = rng.random::<f64>();
            vec![base, base + c]
        })
        .collect();
    ArmModel::new(&[t0.clone(), t0], &[z0.clone(), z0], &r).unwrap()
}

/// Action-independent dynamics with rewards c_a strictly increasing in a.
pub fn threshold_arm(m: usize, j: usize, k: usize, rng: &mut impl Rng) -> ArmModel {
    let t0: Vec<Vec<f64>> = (0..m).map(|_| simplex_row(m, rng)).collect();
    let z0: Vec<Vec<f64>> = (0..m).map(|_| simplex_row(k, rng)).collect();
    let mut c = 0.0;
    let steps: Vec<f64> = (0..j)
        .map(|a| {
            if a > 0 {
                c += 0.1 + rng.random::<f64>();
            }
            c
        })
        .collect();
    let r: Vec<Vec<f64>> = (0..m).map(|_| steps.clone()).collect();
    ArmModel::new(&vec![t0; j], &vec![z0; j], &r).unwrap()
}
