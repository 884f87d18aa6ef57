//! Seeded random instances for property tests and oracle checks.
//!
//! All constants are multiples of a fixed grid step so that fixed-point
//! arithmetic stays exact and ties are common.

use rand::seq::index::sample;
use rand::Rng;

use crate::pcf::TimeFn;
use crate::scalar::Scalar;
use crate::tdsp::TimedGraph;

/// Shape of random time-dependent graphs.
#[derive(Debug, Clone, Copy)]
pub struct InstanceConfig {
    pub min_states: usize,
    pub max_states: usize,
    pub max_pieces: usize,
    /// Edge values are `step · k` for `k` in `1..=max_value_steps`.
    pub max_value_steps: u32,
    /// Breakpoints are `step · k` for `k` in `1..=max_breakpoint_steps`.
    pub max_breakpoint_steps: u32,
    pub step: f64,
    pub edge_probability: f64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            min_states: 2,
            max_states: 5,
            max_pieces: 3,
            max_value_steps: 6,
            max_breakpoint_steps: 12,
            step: 0.5,
            edge_probability: 0.4,
        }
    }
}

/// Edge function finite on all of `t > 0` with up to `max_pieces` pieces.
pub fn random_edge_fn<T: Scalar>(rng: &mut impl Rng, cfg: &InstanceConfig) -> TimeFn<T> {
    let pieces = rng.gen_range(1..=cfg.max_pieces);
    let mut breakpoints: Vec<u32> = sample(rng, cfg.max_breakpoint_steps as usize, pieces - 1)
        .into_iter()
        .map(|k| k as u32 + 1)
        .collect();
    breakpoints.sort_unstable_by(|a, b| b.cmp(a));
    breakpoints.push(0);
    let raw = breakpoints
        .into_iter()
        .map(|k| {
            let v = rng.gen_range(1..=cfg.max_value_steps);
            (T::from_f64(k as f64 * cfg.step), T::from_f64(v as f64 * cfg.step))
        })
        .collect();
    TimeFn::new(raw, T::INFINITY).expect("breakpoints generated descending")
}

/// Random graph with ids `0..n` and goal `n - 1`. The edges `i -> i + 1`
/// are always present so every state reaches the goal; other ordered pairs,
/// self-loops included, appear with `edge_probability`. The goal has no
/// outgoing edges.
pub fn random_graph<T: Scalar>(rng: &mut impl Rng, cfg: &InstanceConfig) -> TimedGraph<T> {
    let n = rng.gen_range(cfg.min_states..=cfg.max_states);
    let goal = n - 1;
    let mut edges = Vec::new();
    for s in 0..goal {
        for t in 0..n {
            if t == s + 1 || rng.gen_bool(cfg.edge_probability) {
                edges.push((s as u64, t as u64, random_edge_fn(rng, cfg)));
            }
        }
    }
    let states: Vec<u64> = (0..n as u64).collect();
    TimedGraph::new(&states, &[goal as u64], edges).expect("generated graph is valid")
}

/// Random graph whose every edge is a single piece `v if t > 0`.
pub fn random_static_graph<T: Scalar>(rng: &mut impl Rng, n: usize, max_value_steps: u32, step: f64) -> TimedGraph<T> {
    let goal = n - 1;
    let mut edges = Vec::new();
    for s in 0..goal {
        for t in 0..n {
            if t != s && (t == s + 1 || rng.gen_bool(0.35)) {
                let v = rng.gen_range(1..=max_value_steps) as f64 * step;
                edges.push((s as u64, t as u64, TimeFn::positive(T::from_f64(v))));
            }
        }
    }
    let states: Vec<u64> = (0..n as u64).collect();
    TimedGraph::new(&states, &[goal as u64], edges).expect("generated graph is valid")
}

/// Arbitrary time function for algebra tests: breakpoints anywhere on the
/// grid (negative included), values non-negative or `∞`, any default.
pub fn random_time_fn<T: Scalar>(rng: &mut impl Rng, max_pieces: usize, step: f64) -> TimeFn<T> {
    let pieces = rng.gen_range(0..=max_pieces);
    let mut ks: Vec<i32> = sample(rng, 40, pieces).into_iter().map(|k| k as i32 - 10).collect();
    ks.sort_unstable_by(|a, b| b.cmp(a));
    fn value<T: Scalar>(rng: &mut impl Rng, step: f64) -> T {
        if rng.gen_bool(0.15) {
            T::INFINITY
        } else {
            T::from_f64(rng.gen_range(0..=12) as f64 * step)
        }
    }
    let raw = ks.into_iter().map(|k| (T::from_f64(k as f64 * step), value(rng, step))).collect();
    let default = value(rng, step);
    TimeFn::new(raw, default).expect("breakpoints generated descending")
}
