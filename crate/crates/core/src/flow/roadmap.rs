use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::scene::{FlowScene, SceneError};
use super::vehicle::{bearing, edge_hit, edge_time, rollout, Trajectory};
use crate::pcf::TimeFn;
use crate::scalar::{Float, Scalar};
use crate::tdsp::{GraphError, TimedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("goal unreachable from start at every departure time; start reaches {} of {total} states: {component:?}", component.len())]
    Disconnected { component: Vec<u64>, total: usize },
}

/// Departure times at which an edge is sampled: zero, every modulation
/// breakpoint inside the horizon, and a uniform grid, ascending.
pub fn departure_grid(scene: &FlowScene) -> Vec<f64> {
    let horizon = scene.departure_horizon();
    let step = scene.departure_step();
    let mut grid: Vec<f64> = (0..)
        .map(|j| j as f64 * step)
        .take_while(|&t| t <= horizon + 1e-9)
        .collect();
    grid.extend(
        scene
            .gyre
            .modulation
            .breakpoints()
            .map(Float::get)
            .filter(|&p| p > 0.0 && p < horizon),
    );
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    grid
}

/// Grid time whose estimate an edge function reports for departure `t`: the
/// smallest grid point at or after `t`, or the last one above the grid.
/// With `after` set, `t` is read as its right limit, so a grid point equal
/// to `t` belongs to the piece below and the next one is used.
pub fn sample_time(scene: &FlowScene, t: f64, after: bool) -> f64 {
    let grid = departure_grid(scene);
    let j = grid.partition_point(|&g| g < t || (after && g <= t));
    grid[j.min(grid.len() - 1)]
}

/// Trajectory flown on edge `from -> to` departing at `t` (its right limit
/// when `after` is set): the bearing and step count behind the edge's value,
/// rolled out under the flow from `t`.
pub fn segment_trajectory(scene: &FlowScene, from: [f64; 2], to: [f64; 2], t: f64, after: bool) -> Option<Trajectory> {
    let hit = edge_hit(scene, from, to, sample_time(scene, t, after))?;
    Some(rollout(scene, from, bearing(hit.bearing, scene.vehicle.bearings), t, hit.steps))
}

/// Piecewise-constant edge time from `from` to `to`. The piece `(g_{j-1}, g_j]`
/// of the departure grid takes the estimate at `g_j`, the last grid value
/// extends upward, and departures at or before zero are `∞`.
pub fn build_edge_fn(scene: &FlowScene, from: [f64; 2], to: [f64; 2]) -> TimeFn<Float> {
    let grid = departure_grid(scene);
    let window = (scene.steps() - 1) as f64 * scene.vehicle.dt;
    let w = &scene.gyre.modulation;
    let piece_of = |t: f64| w.pieces().partition_point(|(p, _)| t <= p.get());
    let mut memo: HashMap<usize, Option<f64>> = HashMap::new();
    let mut sample = |t: f64| -> Float {
        let piece = piece_of(t);
        let steady = piece == piece_of(t + window);
        let value = if steady {
            *memo.entry(piece).or_insert_with(|| edge_time(scene, from, to, t))
        } else {
            edge_time(scene, from, to, t)
        };
        value.map_or(Float::INFINITY, Float::new)
    };

    let m = grid.len() - 1;
    let mut pieces = Vec::with_capacity(grid.len());
    if m == 0 {
        pieces.push((Float::ZERO, sample(grid[0])));
    } else {
        let top = sample(grid[m]);
        pieces.push((Float::new(grid[m]), top));
        pieces.push((Float::new(grid[m - 1]), top));
        for j in (0..m - 1).rev() {
            pieces.push((Float::new(grid[j]), sample(grid[j + 1])));
        }
    }
    let raw = TimeFn::new(pieces, Float::INFINITY).expect("grid is ascending");
    raw.simplify(Float::new(scene.edge_tolerance())).expect("tolerance validated")
}

/// Largest amount by which departing later on an edge arrives earlier:
/// `max (t + c(t)) - (t' + c(t'))` over `t < t'`, or zero for FIFO edges.
pub fn fifo_violation<T: Scalar>(f: &TimeFn<T>) -> f64 {
    let mut worst = 0.0f64;
    // Earliest arrival from pieces strictly later than the current one.
    let mut later_min = f64::INFINITY;
    for iv in f.intervals() {
        let v = *iv.value;
        if !v.is_finite() {
            continue;
        }
        let v = v.to_f64();
        if let Some(hi) = iv.upper {
            worst = worst.max(hi.to_f64() + v - later_min);
        }
        if let Some(lo) = iv.lower {
            later_min = later_min.min(lo.to_f64() + v);
        }
    }
    worst
}

/// Sampled roadmap with its timed graph.
#[derive(Debug, Clone)]
pub struct Roadmap {
    /// Position of state `i`; 0 is the start and 1 the goal.
    pub positions: Vec<[f64; 2]>,
    pub radius: f64,
    pub graph: TimedGraph<Float>,
    /// Pairs within the radius whose edge is never finite, and so were dropped.
    pub dropped_edges: usize,
}

pub const START: usize = 0;
pub const GOAL: usize = 1;

impl Roadmap {
    pub fn position_map(&self) -> BTreeMap<u64, [f64; 2]> {
        self.positions.iter().enumerate().map(|(i, &x)| (i as u64, x)).collect()
    }
}

/// Start, goal and `N - 2` seeded uniform samples.
pub fn sample_positions(scene: &FlowScene) -> Vec<[f64; 2]> {
    let d = &scene.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.sampling.seed);
    let mut positions = vec![scene.sampling.start, scene.sampling.goal];
    for _ in 2..scene.sampling.n {
        positions.push([rng.gen_range(d.min[0]..=d.max[0]), rng.gen_range(d.min[1]..=d.max[1])]);
    }
    positions
}

/// PRM* roadmap: every ordered pair within the connection radius becomes an
/// edge whose time function comes from [`build_edge_fn`].
pub fn prm_star(scene: &FlowScene) -> Result<Roadmap, FlowError> {
    scene.validate()?;
    let positions = sample_positions(scene);
    let radius = scene.radius();
    let n = positions.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            i != j && {
                let (a, b) = (positions[i], positions[j]);
                (a[0] - b[0]).hypot(a[1] - b[1]) <= radius
            }
        })
        .collect();
    let built: Vec<(usize, usize, TimeFn<Float>)> = pairs
        .par_iter()
        .map(|&(i, j)| (i, j, build_edge_fn(scene, positions[i], positions[j])))
        .collect();
    let total = built.len();
    let edges: Vec<(u64, u64, TimeFn<Float>)> = built
        .into_iter()
        .filter(|(_, _, f)| f.pieces().iter().any(|(_, v)| v.is_finite()))
        .map(|(i, j, f)| (i as u64, j as u64, f))
        .collect();
    let dropped_edges = total - edges.len();
    let states: Vec<u64> = (0..n as u64).collect();
    let graph = TimedGraph::new(&states, &[GOAL as u64], edges)?;
    if !graph.can_reach_goal()[START] {
        let component = graph.reachable_from(START).into_iter().map(|s| s as u64).collect();
        return Err(FlowError::Disconnected { component, total: n });
    }
    Ok(Roadmap {
        positions,
        radius,
        graph,
        dropped_edges,
    })
}
