//! Removal of alpha vectors that never attain the maximum.
//!
//! Two passes: exact and pointwise dominance, then a witness test that keeps a
//! vector only if it is the strict maximizer somewhere on the simplex. The
//! witness test is exact for two states (upper envelope of lines on [0, 1])
//! and uses a small LP otherwise.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::alpha::AlphaVector;

/// Vectors whose entries all agree within this are duplicates.
const SAME_TOL: f64 = 1e-12;

/// LP witness margin below which a vector is dropped. Dropping such a vector
/// lowers the value function by at most this amount anywhere.
pub const WITNESS_TOL: f64 = 1e-9;

/// Drops duplicates and vectors pointwise dominated by another vector.
/// Order of the survivors is preserved.
pub fn prune_dominated(vectors: Vec<AlphaVector>) -> Vec<AlphaVector> {
    let n = vectors.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        for j in 0..n {
            if i == j || !keep[j] {
                continue;
            }
            let vi = &vectors[i].weights;
            let vj = &vectors[j].weights;
            if vectors[i].same_weights(&vectors[j], SAME_TOL) {
                // keep the lower index
                if j > i {
                    keep[j] = false;
                }
                continue;
            }
            if vj.iter().zip(vi).all(|(b, a)| b >= a) {
                keep[i] = false;
                break;
            }
        }
    }
    vectors
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect()
}

/// Full pruning: dominance followed by the witness test.
pub fn prune(vectors: Vec<AlphaVector>) -> Vec<AlphaVector> {
    // the envelope subsumes dominance for two states
    let two = vectors.first().is_some_and(|v| v.weights.len() == 2);
    let vectors = if two { vectors } else { prune_dominated(vectors) };
    if vectors.len() <= 1 {
        return vectors;
    }
    let keep = if two {
        envelope_two_state(&vectors)
    } else {
        // one at a time, so near-copies cannot vouch for each other's removal
        let mut keep = vec![true; vectors.len()];
        for i in 0..vectors.len() {
            keep[i] = has_witness(&vectors, &keep, i);
        }
        keep
    };
    let kept: Vec<AlphaVector> = vectors
        .iter()
        .zip(&keep)
        .filter_map(|(v, &k)| k.then(|| v.clone()))
        .collect();
    if kept.is_empty() {
        // numerical corner: retain the maximizer at the barycenter
        let m = vectors[0].weights.len();
        let center = vec![1.0 / m as f64; m];
        let best = vectors
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                let x = v.dot(&center);
                if x > acc.1 { (i, x) } else { acc }
            })
            .0;
        return vec![vectors[best].clone()];
    }
    kept
}

/// For ω = (p, 1−p), each vector is the line α(1) + p(α(0) − α(1)). Builds
/// the upper envelope over the real line (slope order, monotone stack) and
/// keeps the lines whose envelope segment overlaps [0, 1] with positive length.
/// Interior lines that rise less than `WITNESS_TOL` above their neighbours are
/// then dropped one at a time.
fn envelope_two_state(vectors: &[AlphaVector]) -> Vec<bool> {
    let n = vectors.len();
    let s: Vec<f64> = vectors.iter().map(|v| v.weights[0] - v.weights[1]).collect();
    let c: Vec<f64> = vectors.iter().map(|v| v.weights[1]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // equal slopes: largest intercept first, then lowest index
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(c[b].total_cmp(&c[a])).then(a.cmp(&b)));
    // where line j (steeper) overtakes line i
    let meet = |i: usize, j: usize| (c[i] - c[j]) / (s[j] - s[i]);
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for &i in &order {
        if hull.last().is_some_and(|&l| s[l] == s[i]) {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if meet(a, i) <= meet(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let visible: Vec<usize> = (0..hull.len())
        .filter(|&k| {
            let lo = if k == 0 { f64::NEG_INFINITY } else { meet(hull[k - 1], hull[k]) };
            let hi = if k + 1 == hull.len() { f64::INFINITY } else { meet(hull[k], hull[k + 1]) };
            hi.min(1.0) - lo.max(0.0) > 1e-13
        })
        .map(|k| hull[k])
        .collect();
    let at = |i: usize, p: f64| c[i] + p * s[i];
    // b − max(a, c) is concave with its peak where a and c cross
    let rise = |a: usize, b: usize, d: usize| {
        let p = meet(a, d).clamp(0.0, 1.0);
        at(b, p) - at(a, p).max(at(d, p))
    };
    let mut kept: Vec<usize> = Vec::with_capacity(visible.len());
    for &i in &visible {
        kept.push(i);
        while kept.len() >= 3 {
            let l = kept.len();
            if rise(kept[l - 3], kept[l - 2], kept[l - 1]) < WITNESS_TOL {
                kept.remove(l - 2);
            } else {
                break;
            }
        }
    }
    let mut keep = vec![false; n];
    for i in kept {
        keep[i] = true;
    }
    keep
}

/// max d s.t. ⟨α_i − α_j, ω⟩ ≥ d for all active j ≠ i, ω on the simplex.
fn has_witness(vectors: &[AlphaVector], active: &[bool], i: usize) -> bool {
    let m = vectors[i].weights.len();
    let scale = vectors
        .iter()
        .flat_map(|v| v.weights.iter())
        .fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<_> = (0..m).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let d = lp.add_var(1.0, (-4.0, 4.0));
    let simplex: Vec<_> = w.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    for (j, other) in vectors.iter().enumerate() {
        if j == i || !active[j] {
            continue;
        }
        let mut row: Vec<_> = (0..m)
            .map(|s| (w[s], (vectors[i].weights[s] - other.weights[s]) / scale))
            .collect();
        row.push((d, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    match lp.solve() {
        Ok(out) => match out.solution() {
            Some(sol) => sol.objective() * scale > WITNESS_TOL,
            None => true,
        },
        Err(_) => true,
    }
}
