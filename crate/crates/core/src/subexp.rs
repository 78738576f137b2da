//! Memoized divide and conquer over graph intervals.
//!
//! `schedule(A, B)` computes the optimal makespan of the interval
//! `Int⟨A,B⟩ = G[succ(A) ∩ pred[B]]`. A super-source is prepended so the
//! whole graph is the interval `Int⟨{s0}, sinks(G)⟩`. Each call enumerates
//! candidate consecutive separator slots `(X, Y)` inside its interval,
//! recurses on the subschedule job sets they determine, and folds the
//! results with the reconstruction DP on the closed interval, subtracting
//! one slot for the sources.
//!
//! The lookup table is keyed by `A ∪ B`: since `B ⊆ succ(A)`, the split is
//! recovered as the members with a predecessor inside the union.
//!
//! Calls form a branching tree. With a parameter `lambda`, the non-leaf
//! calls with `|B| <= lambda` are "red"; deleting the edges above red nodes
//! splits the tree into subtrees whose number and height obey closed-form
//! binomial bounds, which [`report_tree_bounds`] checks after a run.

use crate::graph::PrecedenceGraph;
use crate::jobset::{JobSet, MAX_JOBS};
use crate::reconstruct::{expand_witness_in, reconstruct_in, Reconstruction};
use crate::schedule::Schedule;
use crate::types::{Counters, Instance, SolveError, SolveReport};
use crate::util::{binom_at_most, isqrt, FxHashMap};
use std::time::Instant;

/// Branching-tree instrumentation for one solve.
#[derive(Clone, Debug, Default)]
pub struct BranchStats {
    pub lambda: usize,
    /// Job count of the instrumented graph (includes the super-source).
    pub n_jobs: usize,
    pub m: usize,
    /// Every invocation of `schedule(A, B)`, leaves included.
    pub total_calls: u64,
    /// Calls answered by the lookup table or the empty base case.
    pub leaf_calls: u64,
    pub nonleaf_calls: u64,
    pub memo_hits: u64,
    pub base_cases: u64,
    /// Non-leaf calls with `|B| <= lambda`.
    pub red_nonleaves: u64,
    /// Largest number of recursive calls issued by a single node.
    pub max_children: u64,
    /// Largest node depth within any subtree of the lambda decomposition.
    pub max_tree_height: u64,
    /// Slot pairs enumerated across all calls.
    pub pairs_enumerated: u64,
    /// Largest number of slot combinations one reconstruction consulted.
    pub max_reconstruct_pairs: u64,
}

/// Measured values against the proven bounds.
#[derive(Clone, Debug)]
pub struct TreeBoundsReport {
    pub red_nonleaves: u64,
    pub bound_red_nonleaves: u64,
    pub max_tree_height: u64,
    pub bound_height: u64,
    pub max_children: u64,
    pub bound_children: u64,
    pub max_reconstruct_pairs: u64,
    pub bound_reconstruct_pairs: u64,
    pub pass: bool,
}

/// Checks the branching-tree accounting of a completed solve: the number of
/// red non-leaves, the height of every subtree in the decomposition, and the
/// per-node child count, each against its binomial bound.
pub fn report_tree_bounds(stats: &BranchStats) -> TreeBoundsReport {
    let n = stats.n_jobs as u64;
    let m = stats.m as u64;
    let lambda = stats.lambda.max(1) as u64;
    let bound_red_nonleaves = binom_at_most(n, m + lambda).saturating_add(1);
    let bound_height = n / lambda + 1;
    let bound_children = binom_at_most(n, 2 * m);
    let pass = stats.red_nonleaves <= bound_red_nonleaves
        && stats.max_tree_height <= bound_height
        && stats.max_children <= bound_children
        && stats.max_reconstruct_pairs <= bound_children;
    TreeBoundsReport {
        red_nonleaves: stats.red_nonleaves,
        bound_red_nonleaves,
        max_tree_height: stats.max_tree_height,
        bound_height,
        max_children: stats.max_children,
        bound_children,
        max_reconstruct_pairs: stats.max_reconstruct_pairs,
        bound_reconstruct_pairs: bound_children,
        pass,
    }
}

struct Solver<'g> {
    g: &'g PrecedenceGraph,
    m: usize,
    lambda: usize,
    memo: FxHashMap<JobSet, u32>,
    stats: BranchStats,
}

/// One in-flight `schedule(A, B)` call on the explicit work stack.
struct Frame {
    key: JobSet,
    sinks: JobSet,
    /// Sources of the closed interval: `A ∩ pred[B]`.
    sources: JobSet,
    /// Open-interval job set `succ(A) ∩ pred[B]`.
    jobs: JobSet,
    depth: u64,
    /// Deduplicated recursive targets, keyed by their memo key.
    children: Vec<JobSet>,
    next_child: usize,
    /// Subschedule slot pair -> memo key of the recursive call computing it.
    table: Vec<((JobSet, JobSet), JobSet)>,
}

enum Call {
    Leaf(u32),
    Expand(Frame),
}

impl<'g> Solver<'g> {
    fn new(g: &'g PrecedenceGraph, m: usize, lambda: usize) -> Solver<'g> {
        Solver {
            g,
            m,
            lambda,
            memo: FxHashMap::default(),
            stats: BranchStats {
                lambda,
                n_jobs: g.n(),
                m,
                ..BranchStats::default()
            },
        }
    }

    /// Enumerates the subschedule slot pairs of the interval `(A, B)` and the
    /// recursive target of each. Entries come in two groups: pairs headed by
    /// the interval's own source slot (the opening segment of a separator)
    /// and pairs of slots drawn from the interval's interior.
    fn plan(&self, a: &JobSet, b: &JobSet) -> (JobSet, JobSet, Vec<((JobSet, JobSet), (JobSet, JobSet))>) {
        let pred_b = self.g.pred_closed(b);
        let sources = a.intersect(&pred_b);
        let jobs = self.g.succ_set(a).intersect(&pred_b);
        let interior = jobs.minus(b);
        let mut pairs = Vec::new();
        let slots = self.g.antichains_within(&interior, self.m);
        for x in &slots {
            // sigma[A', X]: everything in the interval before slot X.
            let w = jobs.minus(&self.g.succ_closed(x).union(b));
            pairs.push(((sources, *x), (sources, self.g.sinks_of(&w))));
        }
        for y in &slots {
            let later = self.g.succ_set(y).intersect(&interior);
            for x in self.g.antichains_within(&later, self.m) {
                // sigma[Y, X]: jobs strictly between slots Y and X.
                let w = jobs
                    .intersect(&self.g.succ_set(y))
                    .minus(&self.g.succ_closed(&x).union(b));
                pairs.push(((*y, x), (*y, self.g.sinks_of(&w))));
            }
        }
        (sources, jobs, pairs)
    }

    /// Starts a call: answers directly from the table or the base case, or
    /// opens a frame with its recursion plan.
    fn begin(&mut self, a: JobSet, b: JobSet, parent_depth: u64, is_root: bool) -> Call {
        self.stats.total_calls += 1;
        let key = a.union(&b);
        if let Some(&v) = self.memo.get(&key) {
            self.stats.leaf_calls += 1;
            self.stats.memo_hits += 1;
            self.note_depth(parent_depth + 1);
            return Call::Leaf(v);
        }
        let (sources, jobs, pairs) = self.plan(&a, &b);
        if jobs.is_empty() {
            self.stats.leaf_calls += 1;
            self.stats.base_cases += 1;
            self.note_depth(parent_depth + 1);
            self.memo.insert(key, 0);
            return Call::Leaf(0);
        }
        self.stats.nonleaf_calls += 1;
        let red = b.len() <= self.lambda;
        if red {
            self.stats.red_nonleaves += 1;
        }
        // Red non-leaves root a fresh subtree of the decomposition.
        let depth = if is_root || red { 0 } else { parent_depth + 1 };
        self.note_depth(depth);
        self.stats.pairs_enumerated += pairs.len() as u64;

        let mut children = Vec::new();
        let mut seen: FxHashMap<JobSet, ()> = FxHashMap::default();
        let mut table = Vec::with_capacity(pairs.len());
        for ((earlier, later), (call_slot, call_sinks)) in pairs {
            let child_key = call_slot.union(&call_sinks);
            table.push(((earlier, later), child_key));
            if seen.insert(child_key, ()).is_none() {
                children.push(child_key);
            }
        }
        self.stats.max_children = self.stats.max_children.max(children.len() as u64);
        Call::Expand(Frame {
            key,
            sinks: b,
            sources,
            jobs,
            depth,
            children,
            next_child: 0,
            table,
        })
    }

    fn note_depth(&mut self, d: u64) {
        self.stats.max_tree_height = self.stats.max_tree_height.max(d);
    }

    /// Splits a memo key back into `(A, B)`: `B` is the set of members with
    /// a predecessor inside the union.
    fn split_key(&self, key: &JobSet) -> (JobSet, JobSet) {
        let mut b = JobSet::EMPTY;
        for v in key.iter() {
            if self.g.pred_of(v).intersects(key) {
                b.insert(v);
            }
        }
        (key.minus(&b), b)
    }

    /// All children solved: fold the subschedule table with the
    /// reconstruction DP on the closed interval and drop the source slot.
    fn finish(&mut self, frame: &Frame) -> Result<u32, SolveError> {
        let rec = self.fold(frame)?;
        let value = rec.makespan - 1;
        self.memo.insert(frame.key, value);
        Ok(value)
    }

    fn fold(&mut self, frame: &Frame) -> Result<Reconstruction, SolveError> {
        let within = frame.jobs.union(&frame.sources);
        let lookup_map: FxHashMap<(JobSet, JobSet), JobSet> =
            frame.table.iter().copied().collect();
        let rec = {
            let memo = &self.memo;
            reconstruct_in(self.g, &within, self.m, &mut |x, y| {
                lookup_map
                    .get(&(*x, *y))
                    .and_then(|key| memo.get(key).copied())
            })?
        };
        self.stats.max_reconstruct_pairs =
            self.stats.max_reconstruct_pairs.max(rec.pairs_consulted);
        debug_assert!(rec.makespan >= 1);
        Ok(rec)
    }

    /// Every interval shrinks by at least `|B|` in each recursive call.
    fn assert_progress(&self, frame: &Frame, child_key: &JobSet) {
        if cfg!(debug_assertions) {
            let (ca, cb) = self.split_key(child_key);
            let child_jobs = self
                .g
                .succ_set(&ca)
                .intersect(&self.g.pred_closed(&cb));
            debug_assert!(child_jobs.is_subset_of(&frame.jobs));
            debug_assert!(child_jobs.is_disjoint(&frame.sinks));
            debug_assert!(child_jobs.len() + frame.sinks.len() <= frame.jobs.len());
        }
    }

    fn run(&mut self, a: JobSet, b: JobSet) -> Result<u32, SolveError> {
        let root = match self.begin(a, b, 0, true) {
            Call::Leaf(v) => return Ok(v),
            Call::Expand(f) => f,
        };
        let mut stack = vec![root];
        loop {
            let next = {
                let frame = stack.last_mut().expect("stack never empties mid-run");
                if frame.next_child < frame.children.len() {
                    let key = frame.children[frame.next_child];
                    frame.next_child += 1;
                    Some((key, frame.depth))
                } else {
                    None
                }
            };
            match next {
                Some((child_key, depth)) => {
                    if self.memo.contains_key(&child_key) {
                        self.stats.total_calls += 1;
                        self.stats.leaf_calls += 1;
                        self.stats.memo_hits += 1;
                        self.note_depth(depth + 1);
                        continue;
                    }
                    if cfg!(debug_assertions) {
                        let parent: &Frame = stack.last().expect("nonempty");
                        self.assert_progress(parent, &child_key);
                    }
                    let (ca, cb) = self.split_key(&child_key);
                    match self.begin(ca, cb, depth, false) {
                        Call::Leaf(_) => {}
                        Call::Expand(f) => stack.push(f),
                    }
                }
                None => {
                    let frame = stack.pop().expect("nonempty");
                    let value = self.finish(&frame)?;
                    if stack.is_empty() {
                        return Ok(value);
                    }
                }
            }
        }
    }

    /// Rebuilds the witness schedule for the interval `(A, B)` from the
    /// completed memo: rerun the fold to recover the winning choices, then
    /// expand each chosen subschedule recursively.
    fn witness(&mut self, a: JobSet, b: JobSet) -> Result<Schedule, SolveError> {
        let (sources, jobs, pairs) = self.plan(&a, &b);
        if jobs.is_empty() {
            return Ok(Schedule::new(vec![], self.m));
        }
        let within = jobs.union(&sources);
        let mut call_of: FxHashMap<(JobSet, JobSet), (JobSet, JobSet)> = FxHashMap::default();
        let mut key_of: FxHashMap<(JobSet, JobSet), JobSet> = FxHashMap::default();
        for ((earlier, later), (call_slot, call_sinks)) in pairs {
            call_of.insert((earlier, later), (call_slot, call_sinks));
            key_of.insert((earlier, later), call_slot.union(&call_sinks));
        }
        let g = self.g;
        let m = self.m;
        let rec = {
            let memo = &self.memo;
            reconstruct_in(g, &within, m, &mut |x, y| {
                key_of.get(&(*x, *y)).and_then(|key| memo.get(key).copied())
            })?
        };
        let mut fetch = |x: &JobSet, y: &JobSet| -> Result<Schedule, SolveError> {
            let &(ca, cb) = call_of
                .get(&(*x, *y))
                .ok_or(SolveError::WitnessUnavailable)?;
            self.witness(ca, cb)
        };
        let closed = expand_witness_in(g, &within, m, &rec, &mut fetch)?;
        // The closed interval's schedule opens with its source slot; the
        // interval itself excludes it.
        debug_assert_eq!(closed.slots.first(), Some(&sources));
        Ok(Schedule::new(closed.slots[1..].to_vec(), self.m))
    }
}

/// Builds the graph with a super-source `s0` (job ID `n`) preceding every
/// job of `g`.
fn augment(g: &PrecedenceGraph) -> Result<PrecedenceGraph, SolveError> {
    let n = g.n();
    if n + 1 > MAX_JOBS {
        return Err(SolveError::InstanceTooLarge {
            algo: "subexp",
            reason: format!("{n} jobs plus a super-source exceeds capacity {MAX_JOBS}"),
        });
    }
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in g.succ_of(u).iter() {
            arcs.push((u, v));
        }
        arcs.push((n, u));
    }
    Ok(PrecedenceGraph::build(n + 1, &arcs).expect("augmented graph stays acyclic"))
}

/// Exact makespan by memoized interval decomposition.
///
/// `lambda` only partitions the instrumentation tree; it never affects the
/// answer. It defaults to `floor(sqrt(n*m))`.
pub fn solve_subexp(inst: &Instance, cfg: &crate::portfolio::SolverConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let n = inst.n();
    let m = inst.m;
    if n == 0 {
        let mut report = SolveReport::new(0, "subexp");
        report.witness = cfg.want_witness.then(|| Schedule::new(vec![], m));
        return Ok(report);
    }
    let aug = augment(&inst.graph)?;
    let lambda = cfg.lambda.unwrap_or_else(|| isqrt((n * m) as u64) as usize).max(1);
    let mut solver = Solver::new(&aug, m, lambda);
    let root_slot = JobSet::singleton(n);
    let root_sinks = aug.sinks();
    let makespan = solver.run(root_slot, root_sinks)?;
    let witness = if cfg.want_witness {
        let w = solver.witness(root_slot, root_sinks)?;
        Some(Schedule::new(w.slots, m))
    } else {
        None
    };
    let bounds = report_tree_bounds(&solver.stats);
    debug_assert!(bounds.pass, "branching-tree bounds violated: {bounds:?}");
    let mut report = SolveReport::new(makespan, "subexp");
    report.witness = witness;
    report.counters = Counters {
        memo_hits: solver.stats.memo_hits,
        states: solver.memo.len() as u64,
        wall: start.elapsed(),
    };
    report.branch = Some(solver.stats);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{self, SolverConfig};
    use crate::schedule::check_feasible;
    use crate::testutil;
    use rand::prelude::*;

    fn solve(g: &PrecedenceGraph, m: usize) -> u32 {
        let inst = Instance::new(g.clone(), m).unwrap();
        solve_subexp(&inst, &SolverConfig::default()).unwrap().makespan
    }

    #[test]
    fn closed_form_families() {
        assert_eq!(solve(&testutil::chains(3, 3), 3), 3);
        assert_eq!(solve(&testutil::antichain(7), 3), 3, "ceil(7/3)");
        assert_eq!(solve(&testutil::chain(5), 2), 5);
        assert_eq!(solve(&testutil::outstar(6), 3), 3, "1 + ceil(6/3)");
        assert_eq!(solve(&testutil::antichain(0), 1), 0);
        assert_eq!(solve(&testutil::antichain(1), 1), 1);
    }

    #[test]
    fn single_sink_interval_example() {
        let g = testutil::chain(1);
        assert_eq!(solve(&g, 1), 1);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = testutil::rng(41);
        for round in 0..150 {
            let n = rng.gen_range(1..=10);
            let g = testutil::random_dag(&mut rng, n, 0.3);
            let m = rng.gen_range(1..=4);
            let inst = Instance::new(g.clone(), m).unwrap();
            let brute = portfolio::solve_brute(&inst, &SolverConfig::default())
                .unwrap()
                .makespan;
            assert_eq!(solve(&g, m), brute, "round={round} n={n} m={m}");
        }
    }

    #[test]
    fn witness_verifies() {
        let mut rng = testutil::rng(42);
        let cfg = SolverConfig { want_witness: true, ..SolverConfig::default() };
        for _ in 0..60 {
            let n = rng.gen_range(1..=9);
            let g = testutil::random_dag(&mut rng, n, 0.35);
            let m = rng.gen_range(1..=3);
            let inst = Instance::new(g.clone(), m).unwrap();
            let report = solve_subexp(&inst, &cfg).unwrap();
            let w = report.witness.expect("witness requested");
            assert_eq!(check_feasible(&g, &w, &g.all_jobs()), Ok(()));
            assert_eq!(w.makespan() as u32, report.makespan);
        }
    }

    #[test]
    fn answer_invariant_under_lambda() {
        let mut rng = testutil::rng(43);
        for _ in 0..25 {
            let n = rng.gen_range(1..=9);
            let g = testutil::random_dag(&mut rng, n, 0.3);
            let m = rng.gen_range(1..=3);
            let inst = Instance::new(g.clone(), m).unwrap();
            let lambdas = [
                Some(1),
                None,
                Some(((0.15 * n as f64) as usize).max(1)),
            ];
            let answers: Vec<u32> = lambdas
                .iter()
                .map(|l| {
                    let cfg = SolverConfig { lambda: *l, ..SolverConfig::default() };
                    solve_subexp(&inst, &cfg).unwrap().makespan
                })
                .collect();
            assert!(answers.windows(2).all(|w| w[0] == w[1]), "{answers:?}");
        }
    }

    #[test]
    fn rerun_reproduces_answers() {
        // Fresh memo tables give identical results: determinism.
        let g = testutil::chains(3, 4);
        let inst = Instance::new(g, 3).unwrap();
        let a = solve_subexp(&inst, &SolverConfig::default()).unwrap();
        let b = solve_subexp(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(a.makespan, b.makespan);
        let (sa, sb) = (a.branch.unwrap(), b.branch.unwrap());
        assert_eq!(sa.total_calls, sb.total_calls);
        assert_eq!(sa.memo_hits, sb.memo_hits);
    }

    #[test]
    fn tree_bounds_hold_on_sweep() {
        let mut rng = testutil::rng(44);
        // Families plus random graphs, lambda at its default.
        let mut cases: Vec<(PrecedenceGraph, usize)> = vec![
            (testutil::outstar(5), 2),
            (testutil::chains(3, 6), 3),
            (testutil::chains(2, 5), 2),
        ];
        for _ in 0..40 {
            let n = rng.gen_range(1..=12);
            cases.push((testutil::random_dag(&mut rng, n, 0.3), rng.gen_range(1..=4)));
        }
        for (g, m) in cases {
            let inst = Instance::new(g, m).unwrap();
            let report = solve_subexp(&inst, &SolverConfig::default()).unwrap();
            let stats = report.branch.unwrap();
            let lambda_default = isqrt((inst.n() * m) as u64) as usize;
            assert_eq!(stats.lambda, lambda_default.max(1));
            let bounds = report_tree_bounds(&stats);
            assert!(bounds.pass, "bounds violated: {bounds:?}");
        }
    }

    #[test]
    fn chains_lambda_example() {
        // chains(3, 6), m = 3: lambda defaults to floor(sqrt(18 * 3)) = 7.
        let g = testutil::chains(3, 6);
        let inst = Instance::new(g, 3).unwrap();
        let report = solve_subexp(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(report.makespan, 6);
        let stats = report.branch.unwrap();
        assert_eq!(stats.lambda, 7);
        assert!(report_tree_bounds(&stats).pass);
        assert!(report.counters.memo_hits > 0);
    }
}
