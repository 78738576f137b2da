//! Exact makespan minimization for unit-length jobs with precedence
//! constraints on `m` identical machines (`P|prec,p_j=1|C_max`).
//!
//! The crate provides four exact solvers plus supporting machinery:
//!
//! * [`portfolio::solve_brute`] — exhaustive search over feasible slot
//!   sequences, memoized on the processed set (small-instance oracle).
//! * [`portfolio::solve_antichain_dp`] — dynamic programming over
//!   downward-closed job sets (states keyed by antichain frontiers).
//! * [`subexp::solve_subexp`] — memoized divide and conquer over graph
//!   intervals, combining subschedule makespans with a reconstruction DP.
//! * [`convolution::solve_subset_conv`] — layered boolean DP over subsets of
//!   the non-sink jobs, accelerated with fast subset convolution.
//! * [`portfolio::solve_combined`] — sink peeling plus a dispatch rule that
//!   picks between the interval solver and the convolution solver.
//!
//! [`dks`] generates scheduling instances from Densest-κ-Subgraph inputs such
//! that the instance has makespan 3 exactly when the DκS optimum reaches the
//! requested edge count.

pub mod convolution;
pub mod dks;
pub mod graph;
pub mod jobset;
pub mod portfolio;
pub mod reconstruct;
pub mod schedule;
pub mod subexp;
pub mod types;
pub(crate) mod util;

#[cfg(test)]
pub(crate) mod testutil;

pub use graph::{Interval, PrecedenceGraph};
pub use jobset::{JobSet, MAX_JOBS};
pub use portfolio::{
    peel_sinks, solve_antichain_dp, solve_brute, solve_combined, SolverConfig, ALPHA,
};
pub use schedule::Schedule;
pub use types::{Instance, SolveError, SolveReport};
