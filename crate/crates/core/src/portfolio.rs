//! Baseline oracles, sink peeling, and the combined solver.
//!
//! `solve_brute` exhaustively searches feasible slot sequences and serves as
//! the ground-truth oracle for everything else. `solve_antichain_dp` is a
//! dynamic program over downward-closed job sets (equivalently, their
//! antichain frontiers), sped up with interchangeable-job canonicalization
//! and a lower-bound pruned search. `solve_combined` peels sink layers and
//! then routes to the subset-convolution or interval solver.

use crate::graph::PrecedenceGraph;
use crate::jobset::JobSet;
use crate::reconstruct::{SubEntry, SubscheduleTable, INF};
use crate::schedule::Schedule;
use crate::types::{Counters, Instance, SolveError, SolveReport};
use crate::util::FxHashMap;
use std::time::Instant;

/// Machine-count threshold of the combined solver, as a fraction of n:
/// alpha = 1 - log2(1.9969) <= 0.002238. With m >= alpha*n (and at least m
/// sinks after peeling), the subset-convolution solver's 2^(n-m) bound beats
/// the interval solver's; below it the interval solver wins.
pub const ALPHA: f64 = 0.002238;

/// Size guards and knobs for the solvers. Guards fail hard rather than
/// silently truncating.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// `solve_brute` refuses instances with more jobs than this.
    pub brute_max_n: usize,
    /// `solve_antichain_dp` refuses instances with more jobs than this.
    pub antichain_max_n: usize,
    /// `solve_subset_conv` refuses instances with `n - |sinks|` beyond this.
    pub conv_max_width: usize,
    /// Instrumentation split for the interval solver; `None` means
    /// `floor(sqrt(n*m))`. Never affects answers.
    pub lambda: Option<usize>,
    pub want_witness: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            brute_max_n: 12,
            antichain_max_n: 30,
            conv_max_width: 24,
            lambda: None,
            want_witness: false,
        }
    }
}

/// Exhaustive search over feasible slot sequences, memoized on the set of
/// already-processed jobs. Returns `(makespan, witness, states)`.
pub(crate) fn brute_in(
    g: &PrecedenceGraph,
    within: &JobSet,
    m: usize,
    want_witness: bool,
) -> (u32, Option<Schedule>, u64) {
    struct Ctx<'g> {
        g: &'g PrecedenceGraph,
        within: JobSet,
        m: usize,
        memo: FxHashMap<JobSet, (u32, JobSet)>,
    }
    fn go(ctx: &mut Ctx, done: JobSet) -> u32 {
        if done == ctx.within {
            return 0;
        }
        if let Some(&(v, _)) = ctx.memo.get(&done) {
            return v;
        }
        let avail: Vec<usize> = ctx
            .within
            .minus(&done)
            .iter()
            .filter(|&v| ctx.g.pred_of(v).intersect(&ctx.within).is_subset_of(&done))
            .collect();
        debug_assert!(!avail.is_empty(), "a DAG always has an available job");
        let full = (1usize << avail.len()) - 1;
        let mut best = INF;
        let mut choice = JobSet::EMPTY;
        for mask in 1..=full {
            if mask.count_ones() as usize > ctx.m {
                continue;
            }
            let mut slot = JobSet::EMPTY;
            for (bit, &job) in avail.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    slot.insert(job);
                }
            }
            let v = go(ctx, done.union(&slot)).saturating_add(1);
            if v < best {
                best = v;
                choice = slot;
            }
        }
        ctx.memo.insert(done, (best, choice));
        best
    }

    let mut ctx = Ctx {
        g,
        within: *within,
        m,
        memo: FxHashMap::default(),
    };
    let makespan = go(&mut ctx, JobSet::EMPTY);
    let witness = want_witness.then(|| {
        let mut slots = Vec::new();
        let mut done = JobSet::EMPTY;
        while done != ctx.within {
            let (_, slot) = ctx.memo[&done];
            slots.push(slot);
            done.union_in_place(&slot);
        }
        Schedule::new(slots, m)
    });
    (makespan, witness, ctx.memo.len() as u64)
}

/// Ground-truth oracle: full enumeration of schedulable slot prefixes.
/// Guarded to small n.
pub fn solve_brute(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    if inst.n() > cfg.brute_max_n {
        return Err(SolveError::InstanceTooLarge {
            algo: "brute",
            reason: format!("n = {} exceeds the guard {}", inst.n(), cfg.brute_max_n),
        });
    }
    let (makespan, witness, states) =
        brute_in(&inst.graph, &inst.graph.all_jobs(), inst.m, true);
    let mut report = SolveReport::new(makespan, "brute");
    report.witness = witness;
    report.counters = Counters {
        memo_hits: 0,
        states,
        wall: start.elapsed(),
    };
    Ok(report)
}

/// Fills the whole subschedule table by brute force: every antichain pair
/// `(X, Y)` with `Y ⊆ succ(X)` and `|X|,|Y| <= m` gets the optimal makespan
/// of `succ(X) \ (succ[Y] ∪ sinks)`.
pub fn brute_subschedule_table(
    g: &PrecedenceGraph,
    m: usize,
    with_schedules: bool,
) -> SubscheduleTable {
    let mut table = SubscheduleTable::new();
    let sinks = g.sinks();
    for x in g.antichains_within(&g.all_jobs(), m) {
        let succ_x = g.succ_set(&x);
        for y in g.antichains_within(&succ_x, m) {
            let jobs = succ_x.minus(&g.succ_closed(&y).union(&sinks));
            let (makespan, schedule, _) = brute_in(g, &jobs, m, with_schedules);
            table.insert(x, y, SubEntry { makespan, schedule });
        }
    }
    table
}

/// Jobs with identical predecessor and successor sets are interchangeable;
/// the DP canonicalizes states per class so symmetric instances collapse.
struct Classes {
    sets: Vec<JobSet>,
}

impl Classes {
    fn build(g: &PrecedenceGraph) -> Classes {
        let mut by_signature: FxHashMap<(JobSet, JobSet), JobSet> = FxHashMap::default();
        for v in 0..g.n() {
            by_signature
                .entry((*g.pred_of(v), *g.succ_of(v)))
                .or_insert(JobSet::EMPTY)
                .insert(v);
        }
        let mut sets: Vec<JobSet> = by_signature.into_values().collect();
        sets.sort();
        Classes { sets }
    }

    /// Replaces the members of each class by its smallest IDs, preserving
    /// counts. Downward closure survives because predecessor sets are
    /// unions of whole classes.
    fn canonical(&self, ideal: &JobSet) -> JobSet {
        let mut out = JobSet::EMPTY;
        for class in &self.sets {
            let k = class.intersect(ideal).len();
            if k > 0 {
                out.union_in_place(&class.take_smallest(k));
            }
        }
        out
    }
}

struct DpSolver<'g> {
    g: &'g PrecedenceGraph,
    m: usize,
    classes: Classes,
    memo: FxHashMap<JobSet, DpEntry>,
    memo_hits: u64,
}

#[derive(Clone, Copy)]
struct DpEntry {
    value: u32,
    exact: bool,
    choice: JobSet,
}

impl<'g> DpSolver<'g> {
    /// max(size bound, longest chain) on the induced subgraph.
    fn lower_bound(&self, ideal: &JobSet) -> u32 {
        let size_lb = (ideal.len() as u32).div_ceil(self.m as u32);
        let mut chain_lb = 0u32;
        let mut lp = vec![0u32; self.g.n()];
        for &v in self.g.topo_order() {
            if !ideal.contains(v) {
                continue;
            }
            let mut best = 0;
            for u in self.g.pred_of(v).intersect(ideal).iter() {
                best = best.max(lp[u]);
            }
            lp[v] = best + 1;
            chain_lb = chain_lb.max(lp[v]);
        }
        size_lb.max(chain_lb)
    }

    /// Full-size last slots: any optimal schedule can be normalized so its
    /// last slot takes min(m, |maxima|) maximal jobs, so only those are
    /// enumerated, by per-class counts.
    fn slot_choices(&self, ideal: &JobSet) -> Vec<JobSet> {
        let maxima = self.g.sinks_of(ideal);
        let size = self.m.min(maxima.len());
        let avail: Vec<JobSet> = self
            .classes
            .sets
            .iter()
            .map(|c| c.intersect(&maxima))
            .filter(|c| !c.is_empty())
            .collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, size, JobSet::EMPTY)];
        while let Some((idx, left, acc)) = stack.pop() {
            if left == 0 {
                out.push(acc);
                continue;
            }
            if idx >= avail.len() {
                continue;
            }
            let remaining: usize = avail[idx..].iter().map(|c| c.len()).sum();
            if remaining < left {
                continue;
            }
            let take_max = avail[idx].len().min(left);
            for take in 0..=take_max {
                let mut next = acc;
                if take > 0 {
                    next.union_in_place(&avail[idx].take_smallest(take));
                }
                stack.push((idx + 1, left - take, next));
            }
        }
        out.sort();
        out
    }

    /// Exact makespan of `ideal` when the result is below `budget`;
    /// otherwise a valid lower bound that is at least `budget`.
    fn solve(&mut self, ideal: JobSet, budget: u32) -> u32 {
        if ideal.is_empty() {
            return 0;
        }
        let canon = self.classes.canonical(&ideal);
        let mut known_lb = 0;
        if let Some(e) = self.memo.get(&canon) {
            if e.exact || e.value >= budget {
                self.memo_hits += 1;
                return e.value;
            }
            known_lb = e.value;
        }
        let lb = self.lower_bound(&canon).max(known_lb);
        if lb >= budget {
            self.memo.insert(canon, DpEntry { value: lb, exact: false, choice: JobSet::EMPTY });
            return lb;
        }
        // Order children by their lower bound so good completions come first.
        let mut children: Vec<(u32, JobSet, JobSet)> = self
            .slot_choices(&canon)
            .into_iter()
            .map(|slot| {
                let child = self.classes.canonical(&canon.minus(&slot));
                (self.lower_bound(&child), slot, child)
            })
            .collect();
        children.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut best = INF;
        let mut best_choice = JobSet::EMPTY;
        for (child_lb, slot, child) in children {
            let cap = best.min(budget);
            if child_lb.saturating_add(1) >= cap {
                break; // sorted ascending: nothing further can improve
            }
            let v = self.solve(child, cap - 1).saturating_add(1);
            if v < best {
                best = v;
                best_choice = slot;
            }
            if best <= lb {
                break; // already matches a valid lower bound
            }
        }
        if best < budget {
            self.memo.insert(canon, DpEntry { value: best, exact: true, choice: best_choice });
            best
        } else {
            let bound = budget.max(lb);
            self.memo.insert(canon, DpEntry { value: bound, exact: false, choice: JobSet::EMPTY });
            bound
        }
    }

    /// Replays the exact choices on the real (non-canonical) job sets.
    fn witness(&self, full: &JobSet) -> Schedule {
        let mut slots_rev = Vec::new();
        let mut cur = *full;
        while !cur.is_empty() {
            let canon = self.classes.canonical(&cur);
            let entry = self.memo[&canon];
            debug_assert!(entry.exact);
            let maxima = self.g.sinks_of(&cur);
            let mut slot = JobSet::EMPTY;
            for class in &self.classes.sets {
                let need = entry.choice.intersect(class).len();
                if need > 0 {
                    slot.union_in_place(&class.intersect(&maxima).take_smallest(need));
                }
            }
            slots_rev.push(slot);
            cur = cur.minus(&slot);
        }
        slots_rev.reverse();
        Schedule::new(slots_rev, self.m)
    }
}

/// Dynamic programming over downward-closed job sets (states keyed by their
/// antichain frontier), with interchangeable-job canonicalization and
/// lower-bound pruning. Exact on any instance, guarded by configuration.
pub fn solve_antichain_dp(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    if inst.n() > cfg.antichain_max_n {
        return Err(SolveError::InstanceTooLarge {
            algo: "antichain-dp",
            reason: format!("n = {} exceeds the guard {}", inst.n(), cfg.antichain_max_n),
        });
    }
    let mut solver = DpSolver {
        g: &inst.graph,
        m: inst.m,
        classes: Classes::build(&inst.graph),
        memo: FxHashMap::default(),
        memo_hits: 0,
    };
    let full = inst.graph.all_jobs();
    let makespan = solver.solve(full, INF);
    let witness = cfg.want_witness.then(|| solver.witness(&full));
    debug_assert!(witness
        .as_ref()
        .is_none_or(|w| w.makespan() as u32 == makespan));
    let mut report = SolveReport::new(makespan, "antichain-dp");
    report.witness = witness;
    report.counters = Counters {
        memo_hits: solver.memo_hits,
        states: solver.memo.len() as u64,
        wall: start.elapsed(),
    };
    Ok(report)
}

/// Result of sink peeling: the residual instance (jobs renumbered), the
/// number of peeled rounds, the peeled sink sets in peel order (original
/// IDs), and the map from residual IDs back to original IDs.
pub struct PeelOutcome {
    pub residual: Instance,
    pub rounds: u32,
    pub layers: Vec<JobSet>,
    pub id_map: Vec<usize>,
}

/// While at most `m` sinks remain, all of them can be processed in one
/// final slot, so they are removed and the target makespan drops by one.
pub fn peel_sinks(inst: &Instance) -> PeelOutcome {
    let g = &inst.graph;
    let mut alive = g.all_jobs();
    let mut layers = Vec::new();
    loop {
        let sinks = g.sinks_of(&alive);
        if sinks.is_empty() || sinks.len() > inst.m {
            break;
        }
        layers.push(sinks);
        alive = alive.minus(&sinks);
    }
    let (graph, id_map) = g.induced(&alive);
    PeelOutcome {
        residual: Instance {
            graph,
            m: inst.m,
        },
        rounds: layers.len() as u32,
        layers,
        id_map,
    }
}

/// Which solver the combined algorithm dispatches to after peeling. A pure
/// function of the residual size, residual sink count, and m.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    SubsetConv,
    Subexp,
}

pub fn combined_route(residual_n: usize, residual_sinks: usize, m: usize) -> Route {
    if residual_sinks >= m && m as f64 >= ALPHA * residual_n as f64 {
        Route::SubsetConv
    } else {
        Route::Subexp
    }
}

/// Sink peeling plus dispatch: the convolution solver when sinks stay
/// plentiful and m is at least `ALPHA * n`, the interval solver otherwise.
/// Exact on either branch.
pub fn solve_combined(inst: &Instance, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let peel = peel_sinks(inst);
    let mut report = if peel.residual.n() == 0 {
        let mut r = SolveReport::new(peel.rounds, "combined:peeled");
        r.witness = cfg.want_witness.then(|| {
            let slots: Vec<JobSet> = peel.layers.iter().rev().copied().collect();
            Schedule::new(slots, inst.m)
        });
        r
    } else {
        let residual_sinks = peel.residual.graph.sinks().len();
        let route = combined_route(peel.residual.n(), residual_sinks, inst.m);
        let mut sub = match route {
            Route::SubsetConv => {
                let mut r = crate::convolution::solve_subset_conv(&peel.residual, cfg)?;
                r.algo = "combined:subsetconv";
                r
            }
            Route::Subexp => {
                let mut r = crate::subexp::solve_subexp(&peel.residual, cfg)?;
                r.algo = "combined:subexp";
                r
            }
        };
        sub.makespan += peel.rounds;
        sub.witness = sub.witness.take().map(|w| {
            let mut slots: Vec<JobSet> = w
                .slots
                .iter()
                .map(|slot| slot.iter().map(|j| peel.id_map[j]).collect())
                .collect();
            slots.extend(peel.layers.iter().rev().copied());
            Schedule::new(slots, inst.m)
        });
        sub
    };
    report.counters.wall = start.elapsed();
    Ok(report)
}
