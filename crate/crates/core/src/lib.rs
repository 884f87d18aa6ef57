//! Piecewise-constant time functions and optimal policies on time-dependent
//! graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`scalar`]: exact fixed-point and `f64` time types with a first-class `∞`.
//! - [`pcf`]: piecewise-constant functions and their algebra (chain, labelled
//!   minimum, simplify, comparison).
//! - [`tdsp`]: timed graphs, the value-iteration solver, policy evaluation
//!   and path extraction.
//! - [`oracle`]: brute-force walk enumeration used to check the solver.
//! - [`flow`]: a time-varying planar flow field, vehicle rollouts and roadmap
//!   construction that turn a scene into a timed graph.

pub mod scalar;
pub mod pcf;
pub mod tdsp;
pub mod oracle;
pub mod io;
pub mod random;
pub mod fixtures;
pub mod flow;

pub use pcf::{min_with_witness, PiecewiseConstant, PolicyFn, TimeFn};
pub use scalar::{Fixed, Float, Scalar};
