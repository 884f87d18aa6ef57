//! Time-optimal planning in a time-varying planar flow.
//!
//! A [`FlowScene`] describes a Taylor-Green gyre whose strength follows a
//! piecewise-constant schedule `w(t)`, a vehicle moving at constant speed
//! relative to the water, and a PRM* sampling setup. [`prm_star`] samples the
//! roadmap and turns every connection into a piecewise-constant edge-time
//! function by rolling the vehicle out over a grid of departure times.

mod roadmap;
mod scene;
mod vehicle;

pub use roadmap::{
    build_edge_fn, departure_grid, fifo_violation, prm_star, sample_positions, sample_time, segment_trajectory, FlowError,
    Roadmap, GOAL, START,
};
pub use scene::{Domain, EdgeBuild, FlowScene, Gyre, Modulation, Sampling, SceneError, Vehicle, DIMENSION};
pub use vehicle::{
    bearing, edge_hit, edge_rollout, edge_time, flow_snapshot, gyre_velocity, rollout, EdgeHit, FlowSample,
    Trajectory, TrajectorySample,
};

#[cfg(test)]
mod tests;
