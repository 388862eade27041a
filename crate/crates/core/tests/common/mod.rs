//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use ortho_transfer::graph::{RbhConfig, ScoreEntry, ScoreTable};
use ortho_transfer::{BiadjacencyMatrix, Labels};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_diff(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + step;
            let up = f(&probe);
            probe[k] = x[k] - step;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, 1e-3)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// `(W ⊙ B) x` straight from dense matrices.
pub fn dense_masked_matvec(w: &[f64], mask: &[u8], n_t: usize, n_s: usize, x: &[f64]) -> Vec<f64> {
    (0..n_t)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n_s {
                acc += w[i * n_s + j] * f64::from(mask[i * n_s + j]) * x[j];
            }
            acc
        })
        .collect()
}

pub fn random_graph(r: &mut ChaCha8Rng, n_t: usize, n_s: usize, density: f64) -> BiadjacencyMatrix {
    let mut edges = Vec::new();
    for i in 0..n_t {
        for j in 0..n_s {
            if r.gen::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    BiadjacencyMatrix::new(ids("t", n_t), ids("s", n_s), edges).unwrap()
}

/// Scores drawn from a coarse grid so exact ties are common.
pub fn random_scores(
    r: &mut ChaCha8Rng,
    queries: &[String],
    subjects: &[String],
    fill: f64,
) -> ScoreTable {
    let mut entries = Vec::new();
    for q in queries {
        for s in subjects {
            if r.gen::<f64>() < fill {
                entries.push(ScoreEntry {
                    query: q.clone(),
                    subject: s.clone(),
                    score: f64::from(r.gen_range(0u32..=10)) / 10.0,
                });
            }
        }
    }
    ScoreTable::new("q", "s", entries).unwrap()
}

/// Reciprocal best hits by the definition: pair (i, j) qualifies when j's score
/// for i clears the threshold and is within the tie tolerance of i's best, and
/// the same holds in the reverse table.
pub fn brute_force_rbh(
    tq: &ScoreTable,
    qt: &ScoreTable,
    cfg: &RbhConfig,
    targets: &[String],
    sources: &[String],
) -> BTreeSet<(usize, usize)> {
    let lookup = |t: &ScoreTable| -> HashMap<(String, String), f64> {
        t.entries()
            .iter()
            .map(|e| ((e.query.clone(), e.subject.clone()), e.score))
            .collect()
    };
    let fwd = lookup(tq);
    let rev = lookup(qt);
    let is_hit =
        |table: &HashMap<(String, String), f64>, q: &String, s: &String, universe: &[String]| {
            let Some(&score) = table.get(&(q.clone(), s.clone())) else {
                return false;
            };
            let best = universe
                .iter()
                .filter_map(|o| table.get(&(q.clone(), o.clone())))
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            score >= cfg.threshold && score >= best - cfg.tie_tolerance
        };
    let mut edges = BTreeSet::new();
    for (i, t) in targets.iter().enumerate() {
        for (j, s) in sources.iter().enumerate() {
            if is_hit(&fwd, t, s, sources) && is_hit(&rev, s, t, targets) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

pub fn regression(values: &[f64]) -> Labels {
    Labels::Regression(values.to_vec())
}
