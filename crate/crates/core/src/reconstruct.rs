//! The reconstruction dynamic program: combines optimal subschedule
//! makespans into the optimal makespan of the whole graph.
//!
//! A subschedule `σ[X,Y]` (for antichain slots `X`, `Y` with `Y ⊆ succ(X)`)
//! is an optimal schedule of the jobs `succ(X) \ (succ[Y] ∪ sinks)`. Given
//! the makespans of all such subschedules, `DP[X,k]` is the shortest partial
//! schedule that ends with a slot whose non-sink part is exactly `X` and has
//! processed `k` sinks so far; the answer folds in the trailing all-sink
//! slots.

use crate::graph::PrecedenceGraph;
use crate::jobset::JobSet;
use crate::schedule::Schedule;
use crate::types::SolveError;
use crate::util::FxHashMap;

/// Sentinel strictly greater than any feasible makespan; additions saturate.
pub const INF: u32 = u32::MAX;

/// One subschedule: its optimal makespan and, when available, a witness.
#[derive(Clone, Debug)]
pub struct SubEntry {
    pub makespan: u32,
    pub schedule: Option<Schedule>,
}

/// Makespans of `σ[X,Y]` keyed by `(X, Y)` with `Y ⊆ succ(X)`; the first
/// slot is the earlier one.
#[derive(Default)]
pub struct SubscheduleTable {
    map: FxHashMap<(JobSet, JobSet), SubEntry>,
}

impl SubscheduleTable {
    pub fn new() -> SubscheduleTable {
        SubscheduleTable::default()
    }

    pub fn insert(&mut self, x: JobSet, y: JobSet, entry: SubEntry) {
        self.map.insert((x, y), entry);
    }

    pub fn get(&self, x: &JobSet, y: &JobSet) -> Option<&SubEntry> {
        self.map.get(&(*x, *y))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Per-entry choice records, enough to rebuild a witness schedule.
#[derive(Clone, Debug, Default)]
pub struct ChoiceLog {
    pub base_slot: JobSet,
    pub base_k: u32,
    pub final_slot: JobSet,
    /// Sinks packed into the trailing all-sink slots.
    pub final_trailing: u32,
    /// `(X, k) -> (Y, k')`: the winning predecessor slot and how many sinks
    /// ride along with `X` in its slot.
    pub steps: FxHashMap<(JobSet, u32), (JobSet, u32)>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub makespan: u32,
    pub choices: ChoiceLog,
    /// Distinct (Y, X) slot combinations consulted by the DP.
    pub pairs_consulted: u64,
}

/// Runs the DP over the whole graph with subschedule values taken from a
/// fully populated table.
pub fn reconstruct(
    g: &PrecedenceGraph,
    m: usize,
    subs: &SubscheduleTable,
) -> Result<Reconstruction, SolveError> {
    reconstruct_in(g, &g.all_jobs(), m, &mut |x, y| {
        subs.get(x, y).map(|e| e.makespan)
    })
}

/// DP over the subgraph induced by `within`. `lookup(X, Y)` must return the
/// optimal makespan of `succ(X) ∩ within \ (succ[Y] ∪ sinks(within))`; a
/// `None` on a reachable combination aborts with `MissingSubschedule`.
pub(crate) fn reconstruct_in(
    g: &PrecedenceGraph,
    within: &JobSet,
    m: usize,
    lookup: &mut dyn FnMut(&JobSet, &JobSet) -> Option<u32>,
) -> Result<Reconstruction, SolveError> {
    reconstruct_impl(g, within, m, lookup, None)
}

/// Test hook: also returns the filled DP rows per slot.
#[cfg(test)]
pub(crate) fn reconstruct_capture(
    g: &PrecedenceGraph,
    within: &JobSet,
    m: usize,
    lookup: &mut dyn FnMut(&JobSet, &JobSet) -> Option<u32>,
) -> Result<(Reconstruction, Vec<(JobSet, Vec<u32>)>), SolveError> {
    let mut rows = Vec::new();
    let rec = reconstruct_impl(g, within, m, lookup, Some(&mut rows))?;
    Ok((rec, rows))
}

fn reconstruct_impl(
    g: &PrecedenceGraph,
    within: &JobSet,
    m: usize,
    lookup: &mut dyn FnMut(&JobSet, &JobSet) -> Option<u32>,
    mut capture: Option<&mut Vec<(JobSet, Vec<u32>)>>,
) -> std::result::Result<Reconstruction, SolveError> {
    if within.is_empty() {
        return Ok(Reconstruction {
            makespan: 0,
            choices: ChoiceLog::default(),
            pairs_consulted: 0,
        });
    }
    let sinks = g.sinks_of(within);
    let sources = g.sources_of(within);
    if sources.len() > m {
        return Err(SolveError::SourceOverflow { count: sources.len(), m });
    }
    let nonsinks = within.minus(&sinks);
    let base_slot = sources.minus(&sinks);
    let base_k = sources.intersect(&sinks).len() as u32;
    let kmax = sinks.len() as u32;

    let slots = g.antichains_within(&nonsinks, m);
    let idx_of: FxHashMap<JobSet, usize> =
        slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    // succ within the subgraph, and the count of sinks whose predecessors
    // avoid succ[X] (the schedulability filter for k).
    let succ_in: Vec<JobSet> = slots
        .iter()
        .map(|x| g.succ_set(x).intersect(within))
        .collect();
    let avail: Vec<u32> = slots
        .iter()
        .zip(&succ_in)
        .map(|(x, sx)| {
            let allowed = within.minus(&sx.union(x));
            sinks
                .iter()
                .filter(|&v| g.pred_of(v).intersect(within).is_subset_of(&allowed))
                .count() as u32
        })
        .collect();

    // Incoming pairs: for each later slot X, the earlier slots Y with
    // X ⊆ succ(Y). Enumerating antichains inside succ_in(Y) makes the pair
    // count output-sensitive (bounded by the unions of size <= 2m).
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for (yi, sy) in succ_in.iter().enumerate() {
        for x in g.antichains_within(&sy.intersect(&nonsinks), m) {
            let xi = idx_of[&x];
            incoming[xi].push(yi);
        }
    }
    let pairs_consulted: u64 = incoming.iter().map(|v| v.len() as u64).sum();

    // Process earlier slots first: X ⊆ succ(Y) forces |succ(Y)| > |succ(X)|.
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.sort_by(|&a, &b| {
        succ_in[b]
            .len()
            .cmp(&succ_in[a].len())
            .then_with(|| slots[a].cmp(&slots[b]))
    });

    let mut dp: Vec<Vec<u32>> = vec![Vec::new(); slots.len()];
    let mut steps: FxHashMap<(JobSet, u32), (JobSet, u32)> = FxHashMap::default();
    for &xi in &order {
        let x = slots[xi];
        let xlen = x.len();
        let mut row = vec![INF; kmax as usize + 1];
        let touches_sources = x.intersects(&sources);
        for k in 0..=kmax {
            if avail[xi] < k {
                continue; // INF: not enough schedulable sinks
            }
            let mut best = INF;
            if x == base_slot && k == base_k {
                best = 1;
            }
            if !touches_sources {
                // Slots holding a source occur only in the opening slot;
                // everything else extends an earlier partial schedule.
                for &yi in &incoming[xi] {
                    let same = yi == xi;
                    if !same && dp[yi].is_empty() {
                        continue; // all-INF row never materialized
                    }
                    let mut sub: Option<u32> = None;
                    let kp_max = (m - xlen).min(k as usize) as u32;
                    for kp in 0..=kp_max {
                        if same && kp == 0 {
                            continue;
                        }
                        let prev = if same {
                            row[(k - kp) as usize]
                        } else {
                            dp[yi][(k - kp) as usize]
                        };
                        if prev == INF {
                            continue;
                        }
                        let sub_v = match sub {
                            Some(v) => v,
                            None => {
                                let v = lookup(&slots[yi], &x)
                                    .ok_or(SolveError::MissingSubschedule)?;
                                sub = Some(v);
                                v
                            }
                        };
                        let cand = prev.saturating_add(sub_v).saturating_add(1);
                        if cand < best {
                            best = cand;
                            steps.insert((x, k), (slots[yi], kp));
                        }
                    }
                }
            }
            row[k as usize] = best;
        }
        if let Some(rows) = capture.as_mut() {
            rows.push((x, row.clone()));
        }
        if row.iter().any(|&v| v != INF) {
            dp[xi] = row;
        }
    }

    // Fold in the trailing all-sink slots.
    let mut best = INF;
    let mut final_slot = JobSet::EMPTY;
    let mut final_trailing = 0u32;
    for (xi, x) in slots.iter().enumerate() {
        if dp[xi].is_empty() || !succ_in[xi].is_subset_of(&sinks) {
            continue;
        }
        for k in 0..=kmax {
            let prefix = dp[xi][(kmax - k) as usize];
            if prefix == INF {
                continue;
            }
            let trailing = (k + m as u32 - 1) / m as u32;
            let cand = prefix.saturating_add(trailing);
            if cand < best {
                best = cand;
                final_slot = *x;
                final_trailing = k;
            }
        }
    }
    assert!(best != INF, "a graph with <= m sources always has a schedule");

    Ok(Reconstruction {
        makespan: best,
        choices: ChoiceLog {
            base_slot,
            base_k,
            final_slot,
            final_trailing,
            steps,
        },
        pairs_consulted,
    })
}

/// Expands a choice log into a concrete schedule, fetching subschedule
/// witnesses from `provider(Y, X)`.
pub fn expand_witness(
    g: &PrecedenceGraph,
    m: usize,
    rec: &Reconstruction,
    provider: &mut dyn FnMut(&JobSet, &JobSet) -> Result<Schedule, SolveError>,
) -> Result<Schedule, SolveError> {
    expand_witness_in(g, &g.all_jobs(), m, rec, provider)
}

pub(crate) fn expand_witness_in(
    g: &PrecedenceGraph,
    within: &JobSet,
    m: usize,
    rec: &Reconstruction,
    provider: &mut dyn FnMut(&JobSet, &JobSet) -> Result<Schedule, SolveError>,
) -> Result<Schedule, SolveError> {
    if within.is_empty() {
        return Ok(Schedule::new(vec![], m));
    }
    let sinks = g.sinks_of(within);
    let sources = g.sources_of(within);
    let ch = &rec.choices;

    // Walk the choice chain back from the final slot to the opening slot.
    let kmax = sinks.len() as u32;
    let mut chain: Vec<(JobSet, u32, u32)> = Vec::new(); // (slot, k, k')
    let mut cur = (ch.final_slot, kmax - ch.final_trailing);
    while !(cur.0 == ch.base_slot && cur.1 == ch.base_k) {
        let &(y, kp) = ch
            .steps
            .get(&cur)
            .ok_or(SolveError::WitnessUnavailable)?;
        chain.push((cur.0, cur.1, kp));
        cur = (y, cur.1 - kp);
    }
    chain.reverse();

    let mut slots: Vec<JobSet> = vec![sources];
    let mut used = sources.intersect(&sinks);
    let mut prev_slot = ch.base_slot;
    for (x, _k, kp) in chain {
        let seg = provider(&prev_slot, &x)?;
        slots.extend(seg.slots);
        // k' sinks ride along with X; pick the smallest schedulable ones.
        let allowed = within.minus(&g.succ_closed(&x).intersect(within));
        let ready: JobSet = sinks
            .minus(&used)
            .iter()
            .filter(|&v| g.pred_of(v).intersect(within).is_subset_of(&allowed))
            .collect();
        let riders = ready.take_smallest(kp as usize);
        slots.push(x.union(&riders));
        used.union_in_place(&riders);
        prev_slot = x;
    }

    // Trailing slots: the remaining sinks in chunks of m.
    let mut rest = sinks.minus(&used);
    assert_eq!(rest.len() as u32, ch.final_trailing, "sink accounting");
    while !rest.is_empty() {
        let slot = rest.take_smallest(rest.len().min(m));
        rest = rest.minus(&slot);
        slots.push(slot);
    }
    Ok(Schedule::new(slots, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{self, brute_subschedule_table as brute_table};
    use crate::schedule::check_feasible;
    use crate::testutil;
    use rand::prelude::*;

    #[test]
    fn outstar_reconstruction() {
        // source + k sinks: makespan 1 + ceil(k/m)
        for (k, m) in [(5usize, 3usize), (6, 3), (4, 2), (1, 1)] {
            let g = testutil::outstar(k);
            let table = brute_table(&g, m, true);
            let rec = reconstruct(&g, m, &table).unwrap();
            assert_eq!(rec.makespan as usize, 1 + k.div_ceil(m), "k={k} m={m}");
            let mut provider = |x: &JobSet, y: &JobSet| {
                table
                    .get(x, y)
                    .and_then(|e| e.schedule.clone())
                    .ok_or(SolveError::WitnessUnavailable)
            };
            let witness = expand_witness(&g, m, &rec, &mut provider).unwrap();
            assert_eq!(witness.makespan(), rec.makespan as usize);
            assert_eq!(check_feasible(&g, &witness, &g.all_jobs()), Ok(()));
        }
    }

    #[test]
    fn chain_reconstruction() {
        for len in 1..=6usize {
            let g = testutil::chain(len);
            for m in 1..=3usize {
                let table = brute_table(&g, m, false);
                let rec = reconstruct(&g, m, &table).unwrap();
                assert_eq!(rec.makespan as usize, len, "chain forces len slots");
            }
        }
    }

    #[test]
    fn empty_graph_reconstruction() {
        let g = testutil::antichain(0);
        let table = SubscheduleTable::new();
        let rec = reconstruct(&g, 2, &table).unwrap();
        assert_eq!(rec.makespan, 0);
    }

    #[test]
    fn source_overflow_rejected() {
        let g = testutil::antichain(5);
        let table = brute_table(&g, 2, false);
        assert_eq!(
            reconstruct(&g, 2, &table).unwrap_err(),
            SolveError::SourceOverflow { count: 5, m: 2 }
        );
    }

    #[test]
    fn missing_entry_detected() {
        let g = testutil::chain(3);
        let table = SubscheduleTable::new();
        assert_eq!(
            reconstruct(&g, 1, &table).unwrap_err(),
            SolveError::MissingSubschedule
        );
    }

    #[test]
    fn dp_monotone_in_k_and_matches_brute_on_random_instances() {
        let mut rng = testutil::rng(31);
        let mut rounds = 0;
        while rounds < 120 {
            let n = rng.gen_range(1..=9);
            let g = testutil::random_dag(&mut rng, n, 0.3);
            let m = rng.gen_range(1..=3);
            if g.sources().len() > m {
                continue;
            }
            rounds += 1;
            let table = brute_table(&g, m, true);
            // DP rows are non-decreasing in the sink count.
            let (_, rows) = reconstruct_capture(&g, &g.all_jobs(), m, &mut |x, y| {
                table.get(x, y).map(|e| e.makespan)
            })
            .unwrap();
            for (slot, row) in &rows {
                for w in row.windows(2) {
                    assert!(w[0] <= w[1], "DP[{slot:?}] not monotone: {row:?}");
                }
            }
            let rec = reconstruct(&g, m, &table).unwrap();
            let brute = portfolio::brute_in(&g, &g.all_jobs(), m, false).0;
            assert_eq!(rec.makespan, brute, "n={n} m={m}");
            // Work bound: pairs consulted <= binom(n, <= 2m).
            let bound = crate::util::binom_at_most(n as u64, 2 * m as u64);
            assert!(rec.pairs_consulted <= bound);
            let mut provider = |x: &JobSet, y: &JobSet| {
                table
                    .get(x, y)
                    .and_then(|e| e.schedule.clone())
                    .ok_or(SolveError::WitnessUnavailable)
            };
            let witness = expand_witness(&g, m, &rec, &mut provider).unwrap();
            assert_eq!(witness.makespan(), rec.makespan as usize);
            assert_eq!(check_feasible(&g, &witness, &g.all_jobs()), Ok(()));
        }
    }
}
