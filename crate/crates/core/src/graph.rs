//! Precedence graphs: transitively closed DAGs over dense job IDs with
//! cached predecessor/successor sets, plus the poset algebra the solvers
//! run on (antichain tests, intervals, sinks of induced subgraphs).

use crate::jobset::{JobSet, MAX_JOBS};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("instance has {n} jobs, capacity is {max}", max = MAX_JOBS)]
    TooManyJobs { n: usize },
    #[error("arc endpoint {job} out of range for {n} jobs")]
    JobOutOfRange { job: usize, n: usize },
    #[error("precedence relation is cyclic (job {job} lies on a cycle)")]
    CycleDetected { job: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
}

/// A transitively closed DAG over jobs `0..n`.
///
/// Immutable after construction; all queries are bit-parallel over cached
/// reachability sets.
#[derive(Clone, Debug)]
pub struct PrecedenceGraph {
    n: usize,
    /// Strict successors of each job under the transitive closure.
    succ: Vec<JobSet>,
    /// Strict predecessors of each job.
    pred: Vec<JobSet>,
    sources: JobSet,
    sinks: JobSet,
    all: JobSet,
    topo: Vec<usize>,
}

/// `Int⟨A,B⟩`: the induced subgraph on `succ(A) ∩ pred[B]` (open variant)
/// or `succ[A] ∩ pred[B]` (closed variant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub source_slot: JobSet,
    pub sink_slot: JobSet,
    pub jobs: JobSet,
    pub closed: bool,
}

impl PrecedenceGraph {
    /// Builds the transitive closure of the given arc relation.
    ///
    /// Duplicate and implied arcs are accepted; self-loops and cycles are
    /// rejected, naming one job on a cycle.
    pub fn build(n: usize, arcs: &[(usize, usize)]) -> Result<PrecedenceGraph, GraphError> {
        if n > MAX_JOBS {
            return Err(GraphError::TooManyJobs { n });
        }
        let mut direct: Vec<JobSet> = vec![JobSet::EMPTY; n];
        let mut indegree = vec![0usize; n];
        for &(u, v) in arcs {
            if u >= n {
                return Err(GraphError::JobOutOfRange { job: u, n });
            }
            if v >= n {
                return Err(GraphError::JobOutOfRange { job: v, n });
            }
            if u == v {
                return Err(GraphError::CycleDetected { job: u });
            }
            if !direct[u].contains(v) {
                direct[u].insert(v);
                indegree[v] += 1;
            }
        }

        // Kahn's algorithm; leftover jobs lie on cycles.
        let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            topo.push(v);
            for w in direct[v].iter() {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push(w);
                }
            }
        }
        if topo.len() != n {
            let job = (0..n).find(|&v| indegree[v] > 0).unwrap();
            return Err(GraphError::CycleDetected { job });
        }

        // Closure by bit-parallel OR in reverse topological order.
        let mut succ = vec![JobSet::EMPTY; n];
        for &v in topo.iter().rev() {
            let mut reach = direct[v];
            for w in direct[v].iter() {
                reach.union_in_place(&succ[w]);
            }
            succ[v] = reach;
        }
        let mut pred = vec![JobSet::EMPTY; n];
        for v in 0..n {
            for w in succ[v].iter() {
                pred[w].insert(v);
            }
        }
        let mut sources = JobSet::EMPTY;
        let mut sinks = JobSet::EMPTY;
        for v in 0..n {
            if pred[v].is_empty() {
                sources.insert(v);
            }
            if succ[v].is_empty() {
                sinks.insert(v);
            }
        }
        Ok(PrecedenceGraph {
            n,
            succ,
            pred,
            sources,
            sinks,
            all: JobSet::all_below(n),
            topo,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn all_jobs(&self) -> JobSet {
        self.all
    }

    pub fn sources(&self) -> JobSet {
        self.sources
    }

    pub fn sinks(&self) -> JobSet {
        self.sinks
    }

    /// Jobs in topological order (every job precedes its successors).
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    #[inline]
    pub fn succ_of(&self, v: usize) -> &JobSet {
        &self.succ[v]
    }

    #[inline]
    pub fn pred_of(&self, v: usize) -> &JobSet {
        &self.pred[v]
    }

    /// `succ(s)`: union of strict successors over the members of `s`.
    pub fn succ_set(&self, s: &JobSet) -> JobSet {
        let mut out = JobSet::EMPTY;
        for v in s.iter() {
            out.union_in_place(&self.succ[v]);
        }
        out
    }

    /// `succ[s] = succ(s) ∪ s`.
    pub fn succ_closed(&self, s: &JobSet) -> JobSet {
        self.succ_set(s).union(s)
    }

    /// `pred(s)`: union of strict predecessors.
    pub fn pred_set(&self, s: &JobSet) -> JobSet {
        let mut out = JobSet::EMPTY;
        for v in s.iter() {
            out.union_in_place(&self.pred[v]);
        }
        out
    }

    /// `pred[s] = pred(s) ∪ s`.
    pub fn pred_closed(&self, s: &JobSet) -> JobSet {
        self.pred_set(s).union(s)
    }

    #[inline]
    pub fn comparable(&self, u: usize, v: usize) -> bool {
        self.succ[u].contains(v) || self.succ[v].contains(u)
    }

    /// True iff no two members of `s` are comparable.
    pub fn is_antichain(&self, s: &JobSet) -> bool {
        for v in s.iter() {
            if self.succ[v].intersects(s) {
                return false;
            }
        }
        true
    }

    /// Sinks of the induced subgraph on `sub`: members with no successor
    /// inside `sub`. These are the maximal elements, hence an antichain.
    pub fn sinks_of(&self, sub: &JobSet) -> JobSet {
        let mut out = JobSet::EMPTY;
        for v in sub.iter() {
            if !self.succ[v].intersects(sub) {
                out.insert(v);
            }
        }
        out
    }

    /// Sources of the induced subgraph on `sub`.
    pub fn sources_of(&self, sub: &JobSet) -> JobSet {
        let mut out = JobSet::EMPTY;
        for v in sub.iter() {
            if !self.pred[v].intersects(sub) {
                out.insert(v);
            }
        }
        out
    }

    /// `Int⟨A,B⟩ = G[succ(A) ∩ pred[B]]`, or `G[succ[A] ∩ pred[B]]` when
    /// `closed` is set.
    pub fn interval(&self, a: &JobSet, b: &JobSet, closed: bool) -> Result<Interval, GraphError> {
        if !self.is_antichain(a) || !self.is_antichain(b) {
            return Err(GraphError::PreconditionViolated(
                "interval slots must be antichains",
            ));
        }
        let succ_a = self.succ_set(a);
        if !b.is_subset_of(&succ_a) {
            return Err(GraphError::PreconditionViolated(
                "interval requires B ⊆ succ(A)",
            ));
        }
        let base = if closed { succ_a.union(a) } else { succ_a };
        let jobs = base.intersect(&self.pred_closed(b));
        debug_assert_eq!(self.sinks_of(&jobs), *b, "B must be the interval's sinks");
        Ok(Interval {
            source_slot: *a,
            sink_slot: *b,
            jobs,
            closed,
        })
    }

    /// `NewSinks(X,Y) = sinks(G[jobs ∩ succ(X) \ (succ(Y) ∪ b)])`.
    pub fn new_sinks(
        &self,
        jobs: &JobSet,
        b: &JobSet,
        x: &JobSet,
        y: &JobSet,
    ) -> Result<JobSet, GraphError> {
        if !x.is_subset_of(jobs) || !y.is_subset_of(jobs) {
            return Err(GraphError::PreconditionViolated(
                "new_sinks requires X, Y ⊆ jobs",
            ));
        }
        if !self.is_antichain(x) || !self.is_antichain(y) {
            return Err(GraphError::PreconditionViolated(
                "new_sinks slots must be antichains",
            ));
        }
        if !y.is_subset_of(&self.succ_set(x)) {
            return Err(GraphError::PreconditionViolated(
                "new_sinks requires Y ⊆ succ(X)",
            ));
        }
        let rest = jobs
            .intersect(&self.succ_set(x))
            .minus(&self.succ_set(y).union(b));
        Ok(self.sinks_of(&rest))
    }

    /// All antichains `X ⊆ jobs` with `|X| <= max_size`, the empty set
    /// included, ordered lexicographically by ascending member lists.
    pub fn antichains_within(&self, jobs: &JobSet, max_size: usize) -> Vec<JobSet> {
        let mut out = vec![JobSet::EMPTY];
        if max_size == 0 {
            return out;
        }
        let members: Vec<usize> = jobs.iter().collect();
        // Depth-first extension by ascending job ID yields lexicographic order.
        fn extend(
            g: &PrecedenceGraph,
            members: &[usize],
            cur: JobSet,
            allowed: JobSet,
            from: usize,
            max_size: usize,
            out: &mut Vec<JobSet>,
        ) {
            for (idx, &v) in members.iter().enumerate().skip(from) {
                if !allowed.contains(v) {
                    continue;
                }
                let mut next = cur;
                next.insert(v);
                out.push(next);
                if next.len() < max_size {
                    // Remove everything comparable to v from the candidate pool.
                    let blocked = g.succ[v].union(&g.pred[v]);
                    extend(g, members, next, allowed.minus(&blocked), idx + 1, max_size, out);
                }
            }
        }
        extend(self, &members, JobSet::EMPTY, *jobs, 0, max_size, &mut out);
        out
    }

    /// Every pair of antichains `X, Y ⊆ jobs` with `|X|,|Y| <= m` and
    /// `Y ⊆ succ(X)`, each exactly once, in deterministic order. Pairs with
    /// empty `X` or `Y` are included.
    pub fn enumerate_slot_pairs(&self, jobs: &JobSet, m: usize) -> Vec<(JobSet, JobSet)> {
        let mut out = Vec::new();
        for x in self.antichains_within(jobs, m) {
            let targets = self.succ_set(&x).intersect(jobs);
            for y in self.antichains_within(&targets, m) {
                out.push((x, y));
            }
        }
        out
    }

    /// Induced subgraph on `keep`, with jobs renumbered densely.
    /// Returns the graph and the map from new IDs to old IDs.
    pub fn induced(&self, keep: &JobSet) -> (PrecedenceGraph, Vec<usize>) {
        let old_ids: Vec<usize> = keep.iter().collect();
        let mut new_id = vec![usize::MAX; self.n];
        for (new, &old) in old_ids.iter().enumerate() {
            new_id[old] = new;
        }
        let mut arcs = Vec::new();
        for &old in &old_ids {
            for w in self.succ[old].intersect(keep).iter() {
                arcs.push((new_id[old], new_id[w]));
            }
        }
        let g = PrecedenceGraph::build(old_ids.len(), &arcs)
            .expect("induced subgraph of a DAG is a DAG");
        (g, old_ids)
    }
}
