//! Instance and report types shared by all solvers.

use crate::graph::{GraphError, PrecedenceGraph};
use crate::schedule::Schedule;
use crate::subexp::BranchStats;
use std::time::Duration;
use thiserror::Error;

/// A scheduling instance: a transitively closed precedence graph plus the
/// machine count.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: PrecedenceGraph,
    pub m: usize,
}

impl Instance {
    pub fn new(graph: PrecedenceGraph, m: usize) -> Result<Instance, SolveError> {
        if m == 0 {
            return Err(SolveError::MachineCountZero);
        }
        Ok(Instance { graph, m })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("machine count must be at least 1")]
    MachineCountZero,
    #[error("instance too large for {algo}: {reason}")]
    InstanceTooLarge { algo: &'static str, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("subschedule table is missing an entry")]
    MissingSubschedule,
    #[error("graph has {count} sources, more than m = {m}")]
    SourceOverflow { count: usize, m: usize },
    #[error("no witness schedule is available for this entry")]
    WitnessUnavailable,
    #[error("subset functions live on different universes")]
    UniverseMismatch,
}

/// Cheap instrumentation every solver fills in as far as it applies.
#[derive(Clone, Debug, Default)]
pub struct Counters {
    /// Lookup-table hits (memoized solvers).
    pub memo_hits: u64,
    /// Distinct DP states or memo entries materialized.
    pub states: u64,
    pub wall: Duration,
}

/// Result of a solve: the optimal makespan, which algorithm produced it, an
/// optional witness schedule, and instrumentation.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub makespan: u32,
    pub algo: &'static str,
    pub witness: Option<Schedule>,
    pub counters: Counters,
    /// Branching-tree statistics; present for the interval solver.
    pub branch: Option<BranchStats>,
}

impl SolveReport {
    pub fn new(makespan: u32, algo: &'static str) -> SolveReport {
        SolveReport {
            makespan,
            algo,
            witness: None,
            counters: Counters::default(),
            branch: None,
        }
    }
}
