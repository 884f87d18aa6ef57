//! Time-dependent graphs and the optimal travel-time policy solver.
//!
//! [`solve`] runs value iteration directly over piecewise-constant tables:
//! each sweep chains every edge function into its successor's previous row
//! and takes the labelled pointwise minimum. Sweeps are Jacobi-style, so the
//! result is independent of the order (or parallelism) in which rows are
//! updated.

mod graph;
mod path;
mod solver;

pub use graph::{k_max, GraphError, TimedGraph};
pub use path::{best_departure, extract_path, BestDeparture, PathError, PathResult};
pub use solver::{
    default_cap, evaluate_policy, evaluate_policy_with, iterate, solve, solve_with, PolicyTable, Solution,
    SolveError, SolveOptions, SweepStats, TravelTable,
};
