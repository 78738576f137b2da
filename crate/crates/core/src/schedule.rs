//! Schedules and their structure: feasibility checking, conflicts, the
//! conflict-resolution normalization, and proper-separator decompositions.

use crate::graph::PrecedenceGraph;
use crate::jobset::JobSet;
use thiserror::Error;

/// An ordered sequence of timeslots, each a set of at most `m` jobs.
/// The makespan is the number of slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub slots: Vec<JobSet>,
    pub m: usize,
}

impl Schedule {
    pub fn new(slots: Vec<JobSet>, m: usize) -> Schedule {
        Schedule { slots, m }
    }

    pub fn makespan(&self) -> usize {
        self.slots.len()
    }

    /// Union of all slots.
    pub fn jobs(&self) -> JobSet {
        let mut out = JobSet::EMPTY;
        for slot in &self.slots {
            out.union_in_place(slot);
        }
        out
    }

    /// Concatenation (the ⊕ operator on schedules).
    pub fn concat(mut self, other: Schedule) -> Schedule {
        self.slots.extend(other.slots);
        self
    }
}

/// First violated feasibility condition, in check order: coverage,
/// duplicates, capacity, precedence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Coverage { missing: JobSet, extra: JobSet },
    Duplicate { job: usize },
    Capacity { slot: usize, size: usize, m: usize },
    Precedence { pred: usize, succ: usize, pred_slot: usize, succ_slot: usize },
}

impl Violation {
    /// Short tag used by the CLI verifier diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Coverage { .. } => "coverage",
            Violation::Duplicate { .. } => "coverage",
            Violation::Capacity { .. } => "capacity",
            Violation::Precedence { .. } => "precedence",
        }
    }
}

/// Checks that `s` is a feasible schedule of exactly `jobs`: slots cover
/// `jobs` without repetition, respect the capacity `m`, and schedule every
/// job strictly after all of its scheduled predecessors.
pub fn check_feasible(g: &PrecedenceGraph, s: &Schedule, jobs: &JobSet) -> Result<(), Violation> {
    let covered = s.jobs();
    if covered != *jobs {
        return Err(Violation::Coverage {
            missing: jobs.minus(&covered),
            extra: covered.minus(jobs),
        });
    }
    let total: usize = s.slots.iter().map(|t| t.len()).sum();
    if total != covered.len() {
        let mut seen = JobSet::EMPTY;
        for slot in &s.slots {
            let dup = slot.intersect(&seen);
            if let Some(job) = dup.first() {
                return Err(Violation::Duplicate { job });
            }
            seen.union_in_place(slot);
        }
    }
    for (i, slot) in s.slots.iter().enumerate() {
        if slot.len() > s.m {
            return Err(Violation::Capacity { slot: i, size: slot.len(), m: s.m });
        }
    }
    // Precedence: each job's scheduled predecessors must lie strictly before.
    let mut before = JobSet::EMPTY;
    for (i, slot) in s.slots.iter().enumerate() {
        for v in slot.iter() {
            let late = g.pred_of(v).intersect(&covered).minus(&before);
            if let Some(u) = late.first() {
                let pred_slot = s
                    .slots
                    .iter()
                    .position(|t| t.contains(u))
                    .expect("u is covered");
                return Err(Violation::Precedence { pred: u, succ: v, pred_slot, succ_slot: i });
            }
        }
        before.union_in_place(slot);
    }
    Ok(())
}

/// A conflict: non-sink `job` sits in a slot after `slot`, all its
/// predecessors are done strictly before `slot`, and `slot` holds fewer
/// than `m` non-sinks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub job: usize,
    pub slot: usize,
}

/// Returns the lexicographically smallest conflict (slot index first, then
/// job ID), or `None` for a conflict-free schedule.
pub fn find_conflict(g: &PrecedenceGraph, s: &Schedule) -> Option<Conflict> {
    let sinks = g.sinks();
    let mut suffix = vec![JobSet::EMPTY; s.slots.len() + 1];
    for i in (0..s.slots.len()).rev() {
        suffix[i] = suffix[i + 1].union(&s.slots[i]);
    }
    let mut prefix = JobSet::EMPTY; // jobs strictly before slot i
    for i in 0..s.slots.len() {
        if s.slots[i].minus(&sinks).len() < s.m {
            // Iteration is ascending, so the first hit is the smallest job.
            let job = suffix[i + 1]
                .minus(&sinks)
                .iter()
                .find(|&v| g.pred_of(v).is_subset_of(&prefix));
            if let Some(job) = job {
                return Some(Conflict { job, slot: i });
            }
        }
        prefix.union_in_place(&s.slots[i]);
    }
    None
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("input schedule is infeasible: {0:?}")]
    InfeasibleInput(Violation),
    #[error("schedule has an unresolved conflict: job {job} with slot {slot}")]
    NotConflictFree { job: usize, slot: usize },
    #[error("first slot must hold exactly the sources")]
    BadFirstSlot,
}

/// Repeatedly resolves conflicts by moving the conflicting non-sink into the
/// earlier slot (into a free space if one exists, otherwise swapping it with
/// the smallest-ID sink there). The result is feasible, conflict-free, and
/// no longer than the input; trailing empty slots are trimmed.
///
/// When the graph has at most `m` sources, all sources are first gathered
/// into the opening slot, so the output starts with `T1 = sources`.
pub fn resolve_conflicts(g: &PrecedenceGraph, s: &Schedule) -> Result<Schedule, ScheduleError> {
    let jobs = s.jobs();
    check_feasible(g, s, &jobs).map_err(ScheduleError::InfeasibleInput)?;
    let mut out = s.clone();
    if out.slots.is_empty() {
        return Ok(out);
    }

    // Gather sources into the first slot. The first slot of any feasible
    // schedule contains only sources, and all sources fit when
    // |sources| <= m.
    let sources = g.sources().intersect(&jobs);
    if sources.len() <= out.m {
        for slot in out.slots.iter_mut().skip(1) {
            *slot = slot.minus(&sources);
        }
        out.slots[0].union_in_place(&sources);
    }

    let n = g.n();
    let max_iter = n * out.slots.len();
    let mut iterations = 0usize;
    while let Some(Conflict { job, slot }) = find_conflict(g, &out) {
        iterations += 1;
        assert!(iterations <= max_iter, "conflict resolution exceeded the n*M iteration bound");
        let from = out
            .slots
            .iter()
            .position(|t| t.contains(job))
            .expect("conflicting job is scheduled");
        debug_assert!(from > slot);
        if out.slots[slot].len() < out.m {
            out.slots[from].remove(job);
            out.slots[slot].insert(job);
        } else {
            let sink = out.slots[slot]
                .intersect(&g.sinks())
                .first()
                .expect("a full slot with < m non-sinks holds a sink");
            out.slots[slot].remove(sink);
            out.slots[slot].insert(job);
            out.slots[from].remove(job);
            out.slots[from].insert(sink);
        }
    }

    while out.slots.last().is_some_and(|t| t.is_empty()) {
        out.slots.pop();
    }
    debug_assert_eq!(check_feasible(g, &out, &jobs), Ok(()));
    Ok(out)
}

/// Slot positions of the separator slots `S1..Sl` within a schedule
/// (0-based, strictly increasing, never the opening slot).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatorDecomposition {
    pub sep_slots: Vec<usize>,
}

impl SeparatorDecomposition {
    /// Number of separator slots.
    pub fn ell(&self) -> usize {
        self.sep_slots.len()
    }

    /// Slot index of `S_i` for `i` in `0..=ell` (`S_0` is slot 0).
    fn slot_index(&self, i: usize) -> usize {
        if i == 0 {
            0
        } else {
            self.sep_slots[i - 1]
        }
    }

    /// Jobs of segment `sigma_i`: the slots strictly between `S_i` and
    /// `S_{i+1}` (or everything after `S_ell` for the last segment).
    pub fn segment_jobs(&self, s: &Schedule, i: usize) -> JobSet {
        let lo = self.slot_index(i) + 1;
        let hi = if i == self.ell() {
            s.slots.len()
        } else {
            self.slot_index(i + 1)
        };
        let mut out = JobSet::EMPTY;
        for slot in &s.slots[lo..hi] {
            out.union_in_place(slot);
        }
        out
    }

    pub fn slot_jobs(&self, s: &Schedule, i: usize) -> JobSet {
        s.slots[self.slot_index(i)]
    }

    /// Jobs of the prefix `S0 ⊕ sigma_0 ⊕ ... ⊕ S_q`.
    pub fn prefix_jobs(&self, s: &Schedule, q: usize) -> JobSet {
        let mut out = JobSet::EMPTY;
        for slot in &s.slots[..=self.slot_index(q)] {
            out.union_in_place(slot);
        }
        out
    }
}

/// Extracts the separator decomposition of a conflict-free schedule: `S_ell`
/// is the last slot holding a non-sink, and the earlier separator slots are
/// those interior slots with fewer than `m` non-sinks. Degenerate inputs
/// where only the opening slot holds non-sinks give `ell = 0`.
pub fn extract_separator(
    g: &PrecedenceGraph,
    s: &Schedule,
) -> Result<SeparatorDecomposition, ScheduleError> {
    let jobs = s.jobs();
    check_feasible(g, s, &jobs).map_err(ScheduleError::InfeasibleInput)?;
    if let Some(c) = find_conflict(g, s) {
        return Err(ScheduleError::NotConflictFree { job: c.job, slot: c.slot });
    }
    if !s.slots.is_empty() && s.slots[0] != g.sources().intersect(&jobs) {
        return Err(ScheduleError::BadFirstSlot);
    }
    let sinks = g.sinks();
    let t = s
        .slots
        .iter()
        .rposition(|slot| !slot.minus(&sinks).is_empty());
    let mut sep_slots = Vec::new();
    if let Some(t) = t {
        if t > 0 {
            for i in 1..t {
                if s.slots[i].minus(&sinks).len() < s.m {
                    sep_slots.push(i);
                }
            }
            sep_slots.push(t);
        }
    }
    Ok(SeparatorDecomposition { sep_slots })
}

/// Condition that failed during [`validate_proper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProperViolation {
    /// Decomposition indices out of range or not increasing.
    BadIndices,
    /// `S0` is not the source set.
    SourceSlot,
    /// Condition (A): segment `i` is not `succ(S_i) \ (succ[S_{i+1}] ∪ sinks)`.
    SegmentJobs(usize),
    /// Condition (B): `S_j ⊄ succ(S_i) ∪ sinks` for some `i < j`.
    SlotReach(usize, usize),
    /// Condition (C): the last segment contains a non-sink.
    TailNotSinks,
}

/// Checks conditions (A), (B), (C) of a proper separator, plus
/// `S0 = sources`. Returns the first failed condition.
pub fn validate_proper(
    g: &PrecedenceGraph,
    s: &Schedule,
    d: &SeparatorDecomposition,
) -> Result<(), ProperViolation> {
    let ell = d.ell();
    let mut last = 0usize;
    for &idx in &d.sep_slots {
        if idx <= last || idx >= s.slots.len() {
            return Err(ProperViolation::BadIndices);
        }
        last = idx;
    }
    let jobs = s.jobs();
    if !s.slots.is_empty() && s.slots[0] != g.sources().intersect(&jobs) {
        return Err(ProperViolation::SourceSlot);
    }
    let sinks = g.sinks();
    for i in 0..ell {
        let si = d.slot_jobs(s, i);
        let snext = d.slot_jobs(s, i + 1);
        let expected = g
            .succ_set(&si)
            .minus(&g.succ_closed(&snext).union(&sinks));
        if d.segment_jobs(s, i) != expected {
            return Err(ProperViolation::SegmentJobs(i));
        }
    }
    for i in 0..ell {
        let si = d.slot_jobs(s, i);
        let reach = g.succ_set(&si).union(&sinks);
        for j in (i + 1)..=ell {
            if !d.slot_jobs(s, j).is_subset_of(&reach) {
                return Err(ProperViolation::SlotReach(i, j));
            }
        }
    }
    if !d.segment_jobs(s, ell).is_subset_of(&sinks) {
        return Err(ProperViolation::TailNotSinks);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    fn sched(m: usize, slots: &[&[usize]]) -> Schedule {
        Schedule::new(
            slots.iter().map(|s| s.iter().copied().collect()).collect(),
            m,
        )
    }

    #[test]
    fn empty_schedule_feasible_for_empty_jobs() {
        let g = testutil::antichain(0);
        let s = Schedule::new(vec![], 2);
        assert_eq!(check_feasible(&g, &s, &JobSet::EMPTY), Ok(()));
    }

    #[test]
    fn same_slot_precedence_violation() {
        let g = testutil::chain(2);
        let s = sched(2, &[&[0, 1]]);
        let got = check_feasible(&g, &s, &g.all_jobs());
        assert!(matches!(got, Err(Violation::Precedence { pred: 0, succ: 1, .. })));
    }

    #[test]
    fn capacity_violation_reported() {
        let g = testutil::antichain(3);
        let s = sched(2, &[&[0, 1, 2]]);
        let got = check_feasible(&g, &s, &g.all_jobs());
        assert!(matches!(got, Err(Violation::Capacity { slot: 0, size: 3, m: 2 })));
    }

    #[test]
    fn coverage_violation_reported() {
        let g = testutil::antichain(3);
        let s = sched(2, &[&[0, 1]]);
        assert!(matches!(
            check_feasible(&g, &s, &g.all_jobs()),
            Err(Violation::Coverage { .. })
        ));
    }

    #[test]
    fn single_slot_schedule_has_no_conflict() {
        let g = testutil::antichain(2);
        let s = sched(2, &[&[0, 1]]);
        assert_eq!(find_conflict(&g, &s), None);
    }

    // A sink b parked alone in the middle slot, a non-sink c behind it whose
    // predecessor finished in slot one: c conflicts with b's slot. (Only a
    // non-sink can conflict, so c carries a successor d.)
    #[test]
    fn conflict_detected_and_resolved() {
        // jobs: 0 = a, 1 = b (sink), 2 = c, 3 = d; a ≺ b, a ≺ c ≺ d.
        let g = PrecedenceGraph::build(4, &[(0, 1), (0, 2), (2, 3)]).unwrap();
        let s = sched(2, &[&[0], &[1], &[2], &[3]]);
        assert_eq!(check_feasible(&g, &s, &g.all_jobs()), Ok(()));
        let c = find_conflict(&g, &s).expect("conflict expected");
        assert_eq!(c, Conflict { job: 2, slot: 1 });

        let resolved = resolve_conflicts(&g, &s).unwrap();
        assert_eq!(find_conflict(&g, &resolved), None);
        assert_eq!(check_feasible(&g, &resolved, &g.all_jobs()), Ok(()));
        assert_eq!(resolved.slots[1], [1usize, 2].into_iter().collect(), "c moves beside b");
    }

    #[test]
    fn conflict_free_input_unchanged() {
        let g = PrecedenceGraph::build(3, &[(0, 2)]).unwrap();
        // Opening slot already holds both sources (job 1 is isolated).
        let s = sched(2, &[&[0, 1], &[2]]);
        assert_eq!(find_conflict(&g, &s), None);
        let resolved = resolve_conflicts(&g, &s).unwrap();
        assert_eq!(resolved, s);
    }

    #[test]
    fn resolve_is_idempotent_and_monotone_on_random_schedules() {
        let mut rng = testutil::rng(21);
        use rand::prelude::*;
        for round in 0..200 {
            let n = rng.gen_range(1..=10);
            let g = testutil::random_dag(&mut rng, n, 0.3);
            let m = rng.gen_range(1..=3);
            // Random feasible schedule: repeatedly pick a random nonempty
            // subset of available jobs.
            let mut slots = Vec::new();
            let mut done = JobSet::EMPTY;
            while done != g.all_jobs() {
                let avail: Vec<usize> = g
                    .all_jobs()
                    .minus(&done)
                    .iter()
                    .filter(|&v| g.pred_of(v).is_subset_of(&done))
                    .collect();
                let take = rng.gen_range(1..=avail.len().min(m));
                let mut slot = JobSet::EMPTY;
                for &v in avail.iter().take(take) {
                    slot.insert(v);
                }
                // Random chance of a deliberately sparse slot.
                if rng.gen_bool(0.3) && slot.len() > 1 {
                    let v = slot.first().unwrap();
                    slot = JobSet::singleton(v);
                }
                done.union_in_place(&slot);
                slots.push(slot);
            }
            let s = Schedule::new(slots, m);
            if g.sources().len() > m {
                continue;
            }
            let r1 = resolve_conflicts(&g, &s).unwrap();
            assert!(r1.makespan() <= s.makespan(), "round {round}");
            assert_eq!(check_feasible(&g, &r1, &g.all_jobs()), Ok(()));
            assert_eq!(find_conflict(&g, &r1), None);
            assert_eq!(r1.slots[0], g.sources());
            let r2 = resolve_conflicts(&g, &r1).unwrap();
            assert_eq!(r1, r2, "idempotence, round {round}");
        }
    }

    #[test]
    fn outstar_extracts_empty_separator() {
        let g = testutil::outstar(4);
        // One slot for the center, then the sinks; m = 3.
        let s = sched(3, &[&[0], &[1, 2, 3], &[4]]);
        let d = extract_separator(&g, &s).unwrap();
        assert_eq!(d.ell(), 0);
        assert_eq!(validate_proper(&g, &s, &d), Ok(()));
        assert!(d.segment_jobs(&s, 0).is_subset_of(&g.sinks()));
    }

    #[test]
    fn three_chains_level_schedule_extraction() {
        let g = testutil::chains(3, 3);
        // Level schedule on m = 3: {heads}, {middles}, {tails}.
        let s = sched(3, &[&[0, 3, 6], &[1, 4, 7], &[2, 5, 8]]);
        assert_eq!(find_conflict(&g, &s), None);
        let d = extract_separator(&g, &s).unwrap();
        // Slot 1 is the last slot holding a non-sink, so it is S_ell; no
        // interior slot qualifies before it.
        assert_eq!(d.sep_slots, vec![1]);
        assert_eq!(validate_proper(&g, &s, &d), Ok(()));
    }

    #[test]
    fn tail_with_non_sink_fails_condition_c() {
        let g = testutil::chain(3);
        let s = sched(1, &[&[0], &[1], &[2]]);
        // Claim the separator ends at slot 0; segment after it holds job 1,
        // a non-sink.
        let d = SeparatorDecomposition { sep_slots: vec![] };
        assert_eq!(validate_proper(&g, &s, &d), Err(ProperViolation::TailNotSinks));
    }

    #[test]
    fn partial_prefix_identity_on_random_instances() {
        let mut rng = testutil::rng(22);
        use rand::prelude::*;
        let mut rounds = 0;
        while rounds < 100 {
            let n = rng.gen_range(1..=10);
            let g = testutil::random_dag(&mut rng, n, 0.3);
            let m = rng.gen_range(1..=3);
            if g.sources().len() > m {
                continue;
            }
            rounds += 1;
            // Greedy level schedule, then normalize.
            let mut slots = Vec::new();
            let mut done = JobSet::EMPTY;
            while done != g.all_jobs() {
                let avail: JobSet = g
                    .all_jobs()
                    .minus(&done)
                    .iter()
                    .filter(|&v| g.pred_of(v).is_subset_of(&done))
                    .collect();
                let slot = avail.take_smallest(avail.len().min(m));
                done.union_in_place(&slot);
                slots.push(slot);
            }
            let s = resolve_conflicts(&g, &Schedule::new(slots, m)).unwrap();
            let d = extract_separator(&g, &s).unwrap();
            assert_eq!(validate_proper(&g, &s, &d), Ok(()));
            let sinks = g.sinks();
            for q in 0..=d.ell() {
                let prefix = d.prefix_jobs(&s, q);
                let sq = d.slot_jobs(&s, q);
                assert_eq!(
                    prefix.minus(&sinks),
                    g.all_jobs().minus(&g.succ_set(&sq).union(&sinks)),
                    "prefix identity at q={q}"
                );
            }
        }
    }
}
