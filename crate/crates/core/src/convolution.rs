//! Boolean fast subset convolution and the layered DP it accelerates.
//!
//! The kernel computes `(f ⊛ g)(S) = OR over Z ⊆ S of f(Z) AND g(S \ Z)` for
//! every `S` in `2^|U| * poly(|U|)` time: both functions are split by subset
//! rank, zeta-transformed into the integer counting semiring, multiplied
//! pointwise per output rank, and inverted with the Möbius transform; a
//! positive count at matching rank means "true".
//!
//! The solver iterates layers `f_{i,t}(X)`: true when the non-sink set `X`
//! (which must be predecessor-closed) plus `i` of the sinks can be scheduled
//! within `t` slots. Each layer is a subset convolution of the previous one
//! (filtered by how many sinks are schedulable) with the antichain slot
//! indicators, so the whole solve runs in `O*(2^(n - |sinks|))`.

use crate::jobset::JobSet;
use crate::schedule::Schedule;
use crate::types::{Counters, Instance, SolveError, SolveReport};
use std::time::Instant;

/// Hard cap for the standalone kernel; the solver's cap is configuration.
pub const MAX_KERNEL_UNIVERSE: usize = 20;

/// A boolean function over all subsets of a fixed universe, stored as a
/// packed truth table of length `2^|U|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetFunction {
    universe: JobSet,
    members: Vec<usize>,
    bits: Vec<u64>,
}

impl SubsetFunction {
    pub fn new_false(universe: &JobSet) -> SubsetFunction {
        let members: Vec<usize> = universe.iter().collect();
        let u = members.len();
        assert!(
            u <= MAX_KERNEL_UNIVERSE,
            "kernel universe capped at {MAX_KERNEL_UNIVERSE} members"
        );
        SubsetFunction {
            universe: *universe,
            members,
            bits: vec![0; (1usize << u).div_ceil(64)],
        }
    }

    /// Indicator of the empty set: the identity element of ⊛.
    pub fn indicator_empty(universe: &JobSet) -> SubsetFunction {
        let mut f = SubsetFunction::new_false(universe);
        f.set_mask(0, true);
        f
    }

    pub fn universe(&self) -> &JobSet {
        &self.universe
    }

    pub fn width(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn get_mask(&self, mask: usize) -> bool {
        self.bits[mask / 64] >> (mask % 64) & 1 == 1
    }

    #[inline]
    pub fn set_mask(&mut self, mask: usize, value: bool) {
        if value {
            self.bits[mask / 64] |= 1u64 << (mask % 64);
        } else {
            self.bits[mask / 64] &= !(1u64 << (mask % 64));
        }
    }

    /// Bitmask of a subset of the universe, or `None` if it strays outside.
    pub fn mask_of(&self, subset: &JobSet) -> Option<usize> {
        if !subset.is_subset_of(&self.universe) {
            return None;
        }
        let mut mask = 0usize;
        for (bit, &job) in self.members.iter().enumerate() {
            if subset.contains(job) {
                mask |= 1 << bit;
            }
        }
        Some(mask)
    }

    pub fn get(&self, subset: &JobSet) -> Option<bool> {
        self.mask_of(subset).map(|m| self.get_mask(m))
    }

    pub fn set(&mut self, subset: &JobSet, value: bool) {
        let mask = self.mask_of(subset).expect("subset outside the universe");
        self.set_mask(mask, value);
    }
}

/// In-place zeta transform: `a[S] <- sum over T ⊆ S of a[T]`.
fn zeta<T: Copy + std::ops::AddAssign>(a: &mut [T], u: usize) {
    for b in 0..u {
        let bit = 1usize << b;
        for s in 0..a.len() {
            if s & bit != 0 {
                let prev = a[s ^ bit];
                a[s] += prev;
            }
        }
    }
}

/// In-place Möbius transform, the inverse of [`zeta`].
fn mobius<T: Copy + std::ops::SubAssign>(a: &mut [T], u: usize) {
    for b in 0..u {
        let bit = 1usize << b;
        for s in 0..a.len() {
            if s & bit != 0 {
                let prev = a[s ^ bit];
                a[s] -= prev;
            }
        }
    }
}

/// Boolean subset convolution via ranked zeta/Möbius transforms over the
/// counting semiring.
pub fn or_subset_convolve(
    f: &SubsetFunction,
    g: &SubsetFunction,
) -> Result<SubsetFunction, SolveError> {
    if f.universe != g.universe {
        return Err(SolveError::UniverseMismatch);
    }
    let u = f.width();
    let size = 1usize << u;
    let ranked = |func: &SubsetFunction| -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; size]; u + 1];
        for s in 0..size {
            if func.get_mask(s) {
                out[s.count_ones() as usize][s] = 1;
            }
        }
        for slice in &mut out {
            zeta(slice, u);
        }
        out
    };
    let fz = ranked(f);
    let gz = ranked(g);
    let mut result = SubsetFunction::new_false(&f.universe);
    let mut acc = vec![0u64; size];
    for r in 0..=u {
        acc.iter_mut().for_each(|v| *v = 0);
        for k in 0..=r {
            let (fk, gk) = (&fz[k], &gz[r - k]);
            for s in 0..size {
                acc[s] += fk[s] * gk[s];
            }
        }
        mobius(&mut acc, u);
        for s in 0..size {
            if s.count_ones() as usize == r && acc[s] > 0 {
                result.set_mask(s, true);
            }
        }
    }
    Ok(result)
}

#[inline]
fn bit_get(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1u64 << (i % 64);
}

/// Dense tables for the layered solver: non-sinks remapped to bits in
/// topological order, per-subset closure and antichain indicators, and
/// per-subset counts of schedulable sinks.
struct ConvTables {
    /// Bit index -> non-sink job ID, topologically ordered.
    members: Vec<usize>,
    u: usize,
    size: usize,
    /// Successors within the universe, per bit.
    succ_mask: Vec<usize>,
    /// Sink job IDs (ascending) with their predecessor masks.
    sinks: Vec<(usize, usize)>,
    /// `X = pred[X]` indicator, packed.
    closed: Vec<u64>,
    /// Antichain indicator, packed.
    antichain: Vec<u64>,
    /// Sinks schedulable after processing exactly `X`.
    cnt: Vec<u16>,
}

impl ConvTables {
    fn build(inst: &Instance) -> ConvTables {
        let g = &inst.graph;
        let nonsinks = g.all_jobs().minus(&g.sinks());
        let members: Vec<usize> = g
            .topo_order()
            .iter()
            .copied()
            .filter(|&v| nonsinks.contains(v))
            .collect();
        let u = members.len();
        let size = 1usize << u;
        let mut bit_of = vec![usize::MAX; g.n()];
        for (bit, &job) in members.iter().enumerate() {
            bit_of[job] = bit;
        }
        let to_mask = |s: &JobSet| -> usize {
            let mut mask = 0usize;
            for v in s.intersect(&nonsinks).iter() {
                mask |= 1 << bit_of[v];
            }
            mask
        };
        // Predecessors of any job are non-sinks, so these masks are exact.
        let pred_mask: Vec<usize> = members.iter().map(|&v| to_mask(g.pred_of(v))).collect();
        let succ_mask: Vec<usize> = members.iter().map(|&v| to_mask(g.succ_of(v))).collect();
        let comp_mask: Vec<usize> = (0..u).map(|b| pred_mask[b] | succ_mask[b]).collect();
        let words = size.div_ceil(64);
        let mut closed = vec![0u64; words];
        let mut antichain = vec![0u64; words];
        bit_set(&mut closed, 0);
        bit_set(&mut antichain, 0);
        for s in 1..size {
            let hb = usize::BITS as usize - 1 - s.leading_zeros() as usize;
            let rest = s ^ (1 << hb);
            // Bits follow topological order: the highest set bit has all its
            // predecessors strictly below, so closure peels off the top.
            if bit_get(&closed, rest) && pred_mask[hb] & s == pred_mask[hb] {
                bit_set(&mut closed, s);
            }
            if bit_get(&antichain, rest) && comp_mask[hb] & rest == 0 {
                bit_set(&mut antichain, s);
            }
        }
        let mut cnt = vec![0u16; size];
        let mut sinks = Vec::new();
        for v in g.sinks().iter() {
            let pm = to_mask(g.pred_of(v));
            cnt[pm] += 1;
            sinks.push((v, pm));
        }
        zeta(&mut cnt, u);
        ConvTables {
            members,
            u,
            size,
            succ_mask,
            sinks,
            closed,
            antichain,
            cnt,
        }
    }

    fn mask_to_set(&self, mask: usize) -> JobSet {
        let mut out = JobSet::EMPTY;
        for (bit, &job) in self.members.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                out.insert(job);
            }
        }
        out
    }
}

/// One time layer: for each scheduled-sink count `i`, the packed truth
/// table of `f_{i,t}`.
type Layer = Vec<Vec<u64>>;

struct ConvSolver {
    t: ConvTables,
    m: usize,
    s_count: usize,
    /// Ranked zeta transforms of the antichain indicator, ranks `0..=m`.
    anti_z: Vec<Vec<u32>>,
    /// Scratch: ranked zeta of the current `p` function.
    p_ranked: Vec<Vec<u32>>,
    /// Scratch: transform-space accumulators, one per output rank.
    acc_ranked: Vec<Vec<u64>>,
}

impl ConvSolver {
    fn new(inst: &Instance) -> ConvSolver {
        let t = ConvTables::build(inst);
        let m = inst.m;
        let s_count = t.sinks.len();
        let rank_cap = m.min(t.u);
        let mut anti_z = Vec::with_capacity(rank_cap + 1);
        for r in 0..=rank_cap {
            let mut slice = vec![0u32; t.size];
            for s in 0..t.size {
                if s.count_ones() as usize == r && bit_get(&t.antichain, s) {
                    slice[s] = 1;
                }
            }
            zeta(&mut slice, t.u);
            anti_z.push(slice);
        }
        let p_ranked = vec![vec![0u32; t.size]; t.u + 1];
        let acc_ranked = vec![vec![0u64; t.size]; t.u + 1];
        ConvSolver {
            t,
            m,
            s_count,
            anti_z,
            p_ranked,
            acc_ranked,
        }
    }

    fn empty_layer(&self) -> Layer {
        vec![vec![0u64; self.t.size.div_ceil(64)]; self.s_count + 1]
    }

    /// `f_{i,0}(X)` is true only at `i = 0`, `X = ∅`.
    fn base_layer(&self) -> Layer {
        let mut layer = self.empty_layer();
        bit_set(&mut layer[0], 0);
        layer
    }

    /// Computes layer `t` from layer `t-1` through the transform-space
    /// intermediates `p_{i,j,t}(Z) = f_{i-j,t-1}(Z) AND (cnt(Z) >= i)` and
    /// `q_{i,j,t} = p_{i,j,t} ⊛ a_j`, then
    /// `f_{i,t}(X) = (X = pred[X]) AND OR_j q_{i,j,t}(X)`.
    fn advance(&mut self, prev: &Layer, t_idx: usize) -> Layer {
        let u = self.t.u;
        let size = self.t.size;
        let mut cur = self.empty_layer();
        // At most m jobs fit per slot, capping the reachable subset ranks.
        let pcap = u.min((t_idx - 1) * self.m);
        let rcap = u.min(t_idx * self.m);
        let mut nonzero = vec![false; u + 1];
        for i in 0..=self.s_count {
            for acc in self.acc_ranked.iter_mut().take(rcap + 1) {
                acc.iter_mut().for_each(|v| *v = 0);
            }
            let jmax = self.m.min(i);
            for j in 0..=jmax {
                let f_prev = &prev[i - j];
                for slice in self.p_ranked.iter_mut().take(pcap + 1) {
                    slice.iter_mut().for_each(|v| *v = 0);
                }
                nonzero.iter_mut().for_each(|v| *v = false);
                for s in 0..size {
                    let r = s.count_ones() as usize;
                    if r <= pcap && bit_get(f_prev, s) && self.t.cnt[s] as usize >= i {
                        self.p_ranked[r][s] = 1;
                        nonzero[r] = true;
                    }
                }
                for r in 0..=pcap {
                    if nonzero[r] {
                        zeta(&mut self.p_ranked[r], u);
                    }
                }
                // a_j admits antichain ranks up to m - j; accumulate each
                // product into its output rank's transform-space array.
                let amax = (self.m - j).min(self.anti_z.len() - 1);
                for k in 0..=pcap {
                    if !nonzero[k] {
                        continue;
                    }
                    let p_k = &self.p_ranked[k];
                    for (ar, a_r) in self.anti_z.iter().enumerate().take(amax + 1) {
                        let out_r = k + ar;
                        if out_r > rcap {
                            break;
                        }
                        let acc = &mut self.acc_ranked[out_r];
                        for s in 0..size {
                            acc[s] += p_k[s] as u64 * a_r[s] as u64;
                        }
                    }
                }
            }
            for r in 0..=rcap {
                let acc = &mut self.acc_ranked[r];
                mobius(acc, u);
                for s in 0..size {
                    if acc[s] > 0
                        && s.count_ones() as usize == r
                        && bit_get(&self.t.closed, s)
                    {
                        bit_set(&mut cur[i], s);
                    }
                }
            }
        }
        cur
    }
}

/// Exact makespan via the layered subset-convolution DP. The table width is
/// `n - |sinks|`; instances beyond the configured cap are rejected.
pub fn solve_subset_conv(
    inst: &Instance,
    cfg: &crate::portfolio::SolverConfig,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let n = inst.n();
    if n == 0 {
        let mut report = SolveReport::new(0, "subsetconv");
        report.witness = cfg.want_witness.then(|| Schedule::new(vec![], inst.m));
        return Ok(report);
    }
    let width = n - inst.graph.sinks().len();
    if width > cfg.conv_max_width {
        return Err(SolveError::InstanceTooLarge {
            algo: "subsetconv",
            reason: format!(
                "n - |sinks| = {width} exceeds the table-width cap {}",
                cfg.conv_max_width
            ),
        });
    }
    let mut solver = ConvSolver::new(inst);
    let full = solver.t.size - 1;
    let s_count = solver.s_count;
    let keep_layers = cfg.want_witness;
    let mut history: Vec<Layer> = Vec::new();
    let mut prev = solver.base_layer();
    let mut makespan = None;
    let mut layers_computed = 0u64;
    for t in 1..=n {
        let cur = solver.advance(&prev, t);
        layers_computed += (s_count + 1) as u64;
        let done = bit_get(&cur[s_count], full);
        if keep_layers {
            history.push(std::mem::replace(&mut prev, cur));
        } else {
            prev = cur;
        }
        if done {
            makespan = Some(t as u32);
            break;
        }
    }
    let makespan = makespan.expect("a DAG on n jobs schedules within n slots");
    let witness = if cfg.want_witness {
        history.push(prev);
        Some(extract_witness(&solver, &history, makespan, inst.m)?)
    } else {
        None
    };
    let mut report = SolveReport::new(makespan, "subsetconv");
    report.witness = witness;
    report.counters = Counters {
        memo_hits: 0,
        states: layers_computed * solver.t.size as u64,
        wall: start.elapsed(),
    };
    Ok(report)
}

/// Walks the retained layers backwards: at each step pick a slot
/// `Y ⊆ maxima(X)` and a sink count `j` consistent with the previous layer,
/// then assign concrete sinks forward by smallest ID.
fn extract_witness(
    solver: &ConvSolver,
    history: &[Layer],
    makespan: u32,
    m: usize,
) -> Result<Schedule, SolveError> {
    let t = &solver.t;
    let u = t.u;
    let mut x = t.size - 1;
    let mut i = solver.s_count;
    let mut steps: Vec<(usize, usize)> = Vec::new(); // (slot mask, sink count)
    for step in (1..=makespan as usize).rev() {
        let prev = &history[step - 1];
        // Removing an up-set antichain keeps the rest closed, so candidate
        // slots are exactly the subsets of the maximal elements of X.
        let mut maxima = 0usize;
        for b in 0..u {
            if x >> b & 1 == 1 && t.succ_mask[b] & x == 0 {
                maxima |= 1 << b;
            }
        }
        let mut found = false;
        let mut y = 0usize;
        loop {
            if y.count_ones() as usize <= m {
                let rest = x ^ y;
                let jcap = (m - y.count_ones() as usize).min(i);
                for j in 0..=jcap {
                    if bit_get(&prev[i - j], rest) && t.cnt[rest] as usize >= i {
                        steps.push((y, j));
                        x = rest;
                        i -= j;
                        found = true;
                        break;
                    }
                }
            }
            if found || y == maxima {
                break;
            }
            y = y.wrapping_sub(maxima) & maxima;
        }
        if !found {
            return Err(SolveError::WitnessUnavailable);
        }
    }
    assert_eq!(x, 0, "walk must end at the empty set");
    assert_eq!(i, 0, "walk must consume all counted sinks");
    steps.reverse();
    // Forward pass: attach concrete sinks by smallest ID. Availability only
    // grows with the processed set, so the greedy choice always fits.
    let mut used = JobSet::EMPTY;
    let mut processed = 0usize;
    let mut slots = Vec::with_capacity(makespan as usize);
    for (y, j) in steps {
        let mut slot = solver.t.mask_to_set(y);
        let ready: JobSet = t
            .sinks
            .iter()
            .filter(|&&(job, pm)| pm & processed == pm && !used.contains(job))
            .map(|&(job, _)| job)
            .collect();
        let riders = ready.take_smallest(j);
        used.union_in_place(&riders);
        slot.union_in_place(&riders);
        slots.push(slot);
        processed |= y;
    }
    Ok(Schedule::new(slots, m))
}
