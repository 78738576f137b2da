//! Shared fixtures for the test suites: deterministic random DAGs and the
//! closed-form instance families.

use crate::graph::PrecedenceGraph;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG on `n` jobs: each forward pair (i, j) is an arc with
/// probability `p`.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p: f64) -> PrecedenceGraph {
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                arcs.push((i, j));
            }
        }
    }
    PrecedenceGraph::build(n, &arcs).unwrap()
}

pub fn chain(n: usize) -> PrecedenceGraph {
    let arcs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    PrecedenceGraph::build(n, &arcs).unwrap()
}

/// `k` disjoint chains of length `len` each.
pub fn chains(k: usize, len: usize) -> PrecedenceGraph {
    let mut arcs = Vec::new();
    for c in 0..k {
        for i in 1..len {
            arcs.push((c * len + i - 1, c * len + i));
        }
    }
    PrecedenceGraph::build(k * len, &arcs).unwrap()
}

pub fn antichain(n: usize) -> PrecedenceGraph {
    PrecedenceGraph::build(n, &[]).unwrap()
}

/// One source preceding `k` leaves.
pub fn outstar(k: usize) -> PrecedenceGraph {
    let arcs: Vec<_> = (1..=k).map(|i| (0, i)).collect();
    PrecedenceGraph::build(k + 1, &arcs).unwrap()
}
