//! Densest-κ-Subgraph hardness-instance generator.
//!
//! From a DκS instance `(G, κ, ℓ)` on `N` vertices with `M` edges and
//! maximum degree `Δ`, builds a scheduling instance on `m = 2ΔN + 1`
//! machines whose makespan is 3 exactly when some κ vertices of `G` induce
//! at least `ℓ` edges. Vertex jobs precede their edge jobs; three fully
//! chained placeholder layers pad every slot to capacity, forcing the three
//! timeslots to be exactly full.

use crate::graph::PrecedenceGraph;
use crate::jobset::MAX_JOBS;
use crate::types::{Instance, SolveError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DksError {
    #[error("vertex {v} out of range for {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("edge ({u}, {v}) is a self-loop")]
    SelfLoop { u: usize, v: usize },
    #[error("vertex {v} is isolated; DκS inputs must have minimum degree 1")]
    IsolatedVertex { v: usize },
    #[error("kappa = {kappa} exceeds the vertex count {n}")]
    KappaTooLarge { kappa: usize, n: usize },
    #[error("layer {layer} would have negative size {size}")]
    NegativeLayer { layer: usize, size: i64 },
    #[error("instance too large: {0}")]
    TooLarge(String),
}

/// An undirected graph with a subset size `kappa` and an edge target `ell`.
#[derive(Clone, Debug)]
pub struct DksInstance {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub kappa: usize,
    pub ell: usize,
}

impl DksInstance {
    pub fn new(
        n_vertices: usize,
        edges: Vec<(usize, usize)>,
        kappa: usize,
        ell: usize,
    ) -> Result<DksInstance, DksError> {
        let inst = DksInstance {
            n_vertices,
            edges,
            kappa,
            ell,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<(), DksError> {
        let n = self.n_vertices;
        if self.kappa > n {
            return Err(DksError::KappaTooLarge { kappa: self.kappa, n });
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in &self.edges {
            if u >= n {
                return Err(DksError::VertexOutOfRange { v: u, n });
            }
            if v >= n {
                return Err(DksError::VertexOutOfRange { v, n });
            }
            if u == v {
                return Err(DksError::SelfLoop { u, v });
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        if let Some(v) = (0..n).find(|&v| degree[v] == 0) {
            return Err(DksError::IsolatedVertex { v });
        }
        Ok(())
    }

    pub fn max_degree(&self) -> usize {
        let mut degree = vec![0usize; self.n_vertices];
        for &(u, v) in &self.edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        degree.into_iter().max().unwrap_or(0)
    }
}

/// The reduced scheduling instance plus the construction's bookkeeping.
#[derive(Clone, Debug)]
pub struct DksReduction {
    pub instance: Instance,
    pub m: usize,
    /// Placeholder layer sizes `[|L1|, |L2|, |L3|]`.
    pub layer_sizes: [usize; 3],
    /// Job-ID ranges: vertices, edges, then the three layers.
    pub vertex_jobs: std::ops::Range<usize>,
    pub edge_jobs: std::ops::Range<usize>,
    pub layers: [std::ops::Range<usize>; 3],
}

/// Builds the scheduling instance. `Δ` is the actual maximum degree of the
/// input (the tightest valid machine count).
pub fn reduce_dks(d: &DksInstance) -> Result<DksReduction, DksError> {
    d.validate()?;
    let n_v = d.n_vertices;
    let n_e = d.edges.len();
    let delta = d.max_degree();
    let m = 2 * delta * n_v + 1;
    let l1 = m as i64 - d.kappa as i64;
    let l2 = m as i64 + d.kappa as i64 - d.ell as i64 - n_v as i64;
    let l3 = m as i64 + d.ell as i64 - n_e as i64;
    for (layer, size) in [(1, l1), (2, l2), (3, l3)] {
        if size < 0 {
            return Err(DksError::NegativeLayer { layer, size });
        }
    }
    let (l1, l2, l3) = (l1 as usize, l2 as usize, l3 as usize);
    let n = n_v + n_e + l1 + l2 + l3;
    debug_assert_eq!(n, 3 * m, "layer sizes balance the job count to 3m");
    if n > MAX_JOBS {
        return Err(DksError::TooLarge(format!(
            "reduction needs {n} jobs, capacity is {MAX_JOBS}"
        )));
    }

    let vertex_jobs = 0..n_v;
    let edge_jobs = n_v..n_v + n_e;
    let l1_jobs = n_v + n_e..n_v + n_e + l1;
    let l2_jobs = l1_jobs.end..l1_jobs.end + l2;
    let l3_jobs = l2_jobs.end..l2_jobs.end + l3;

    let mut arcs = Vec::new();
    for (i, &(u, v)) in d.edges.iter().enumerate() {
        arcs.push((u, edge_jobs.start + i));
        arcs.push((v, edge_jobs.start + i));
    }
    for a in l1_jobs.clone() {
        for b in l2_jobs.clone() {
            arcs.push((a, b));
        }
    }
    for b in l2_jobs.clone() {
        for c in l3_jobs.clone() {
            arcs.push((b, c));
        }
    }
    let graph = PrecedenceGraph::build(n, &arcs)
        .expect("the reduction emits a DAG within capacity");
    Ok(DksReduction {
        instance: Instance { graph, m },
        m,
        layer_sizes: [l1, l2, l3],
        vertex_jobs,
        edge_jobs,
        layers: [l1_jobs, l2_jobs, l3_jobs],
    })
}

/// Brute-force DκS optimum: the maximum number of edges induced by any
/// κ-subset. Guarded to `N <= 16`.
pub fn den_kappa_oracle(d: &DksInstance) -> Result<usize, SolveError> {
    let n = d.n_vertices;
    if n > 16 {
        return Err(SolveError::InstanceTooLarge {
            algo: "den-kappa",
            reason: format!("N = {n} exceeds the guard 16"),
        });
    }
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != d.kappa {
            continue;
        }
        let induced = d
            .edges
            .iter()
            .filter(|&&(u, v)| mask >> u & 1 == 1 && mask >> v & 1 == 1)
            .count();
        best = best.max(induced);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn triangle() -> Vec<(usize, usize)> {
        vec![(0, 1), (1, 2), (0, 2)]
    }

    #[test]
    fn triangle_layer_arithmetic() {
        // K3 with kappa = 3, ell = 3, Delta = 2: m = 13, layers 10/10/13.
        let d = DksInstance::new(3, triangle(), 3, 3).unwrap();
        let r = reduce_dks(&d).unwrap();
        assert_eq!(r.m, 13);
        assert_eq!(r.layer_sizes, [10, 10, 13]);
        assert_eq!(r.instance.n(), 39);
        assert_eq!(r.instance.n(), 3 * r.m);
    }

    #[test]
    fn path_layer_arithmetic() {
        // Single edge, kappa = 2, ell = 1, Delta = 1: m = 5, layers 3/4/5.
        let d = DksInstance::new(2, vec![(0, 1)], 2, 1).unwrap();
        let r = reduce_dks(&d).unwrap();
        assert_eq!(r.m, 5);
        assert_eq!(r.layer_sizes, [3, 4, 5]);
        assert_eq!(r.instance.n(), 15);
        assert_eq!(r.instance.n(), 3 * r.m);
    }

    #[test]
    fn oracle_on_triangle() {
        let d3 = DksInstance::new(3, triangle(), 3, 1).unwrap();
        assert_eq!(den_kappa_oracle(&d3).unwrap(), 3);
        let d2 = DksInstance::new(3, triangle(), 2, 1).unwrap();
        assert_eq!(den_kappa_oracle(&d2).unwrap(), 1);
    }

    #[test]
    fn oracle_matches_reversed_iteration() {
        // Independent recomputation with a different subset iteration order.
        let mut rng = crate::testutil::rng(71);
        for _ in 0..30 {
            let n = rng.gen_range(2..=8usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.45) {
                        edges.push((u, v));
                    }
                }
            }
            for v in 0..n {
                if !edges.iter().any(|&(a, b)| a == v || b == v) {
                    edges.push((v, (v + 1) % n));
                }
            }
            let kappa = rng.gen_range(1..=n);
            let d = DksInstance::new(n, edges.clone(), kappa, 1).unwrap();
            let fast = den_kappa_oracle(&d).unwrap();
            let mut slow = 0;
            for mask in (0u32..(1u32 << n)).rev() {
                if mask.count_ones() as usize == kappa {
                    let cnt = edges
                        .iter()
                        .filter(|&&(u, v)| mask >> u & 1 == 1 && mask >> v & 1 == 1)
                        .count();
                    slow = slow.max(cnt);
                }
            }
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            DksInstance::new(3, vec![(0, 0)], 1, 1),
            Err(DksError::SelfLoop { .. })
        ));
        assert!(matches!(
            DksInstance::new(3, vec![(0, 1)], 1, 1),
            Err(DksError::IsolatedVertex { v: 2 })
        ));
        assert!(matches!(
            DksInstance::new(2, vec![(0, 1)], 3, 1),
            Err(DksError::KappaTooLarge { .. })
        ));
    }

    #[test]
    fn layer_triples_form_chains() {
        let d = DksInstance::new(2, vec![(0, 1)], 2, 1).unwrap();
        let r = reduce_dks(&d).unwrap();
        let g = &r.instance.graph;
        // Every L1 x L2 x L3 triple is a chain in the closed graph.
        for a in r.layers[0].clone() {
            for b in r.layers[1].clone() {
                assert!(g.succ_of(a).contains(b));
            }
            for c in r.layers[2].clone() {
                assert!(g.succ_of(a).contains(c), "closure adds L1 -> L3");
            }
        }
        for b in r.layers[1].clone() {
            for c in r.layers[2].clone() {
                assert!(g.succ_of(b).contains(c));
            }
        }
        // Edge jobs sit above both endpoints.
        for (i, &(u, v)) in d.edges.iter().enumerate() {
            let e = r.edge_jobs.start + i;
            assert!(g.succ_of(u).contains(e));
            assert!(g.succ_of(v).contains(e));
        }
    }
}
