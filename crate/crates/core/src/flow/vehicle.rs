use std::f64::consts::PI;

use serde::Serialize;

use super::scene::FlowScene;

/// Flow velocity at a point, flagged when the point lies outside the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub velocity: [f64; 2],
    pub outside: bool,
}

/// Taylor-Green gyre `u = A·w(t)·sin(πx/L)·cos(πy/L)`,
/// `v = -A·w(t)·cos(πx/L)·sin(πy/L)`; zero outside the domain.
pub fn gyre_velocity(scene: &FlowScene, x: [f64; 2], t: f64) -> FlowSample {
    if !scene.domain.contains(x) {
        return FlowSample {
            velocity: [0.0, 0.0],
            outside: true,
        };
    }
    let a = scene.gyre.amplitude * scene.modulation_at(t);
    FlowSample {
        velocity: cell_velocity(a, scene.gyre.cell_length, x),
        outside: false,
    }
}

fn cell_velocity(a: f64, l: f64, x: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (PI * x[0] / l).sin_cos();
    let (sy, cy) = (PI * x[1] / l).sin_cos();
    [a * sx * cy, -a * cx * sy]
}

/// Bearing `i` of `n` evenly spaced samples.
pub fn bearing(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub k: usize,
    pub t: f64,
    pub x: [f64; 2],
    /// The unclipped step left the domain and was pulled back to its edge.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub theta: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Largest `| |x[k+1] - x[k] - F(x[k], t_k)·dt| - v_max·dt |` over
    /// steps that were not clipped.
    pub fn speed_error(&self, scene: &FlowScene) -> f64 {
        let dt = scene.vehicle.dt;
        self.samples
            .windows(2)
            .filter(|w| !w[1].clipped)
            .map(|w| {
                let f = gyre_velocity(scene, w[0].x, w[0].t).velocity;
                let dx = w[1].x[0] - w[0].x[0] - f[0] * dt;
                let dy = w[1].x[1] - w[0].x[1] - f[1] * dt;
                (dx.hypot(dy) - scene.vehicle.v_max * dt).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn end(&self) -> [f64; 2] {
        self.samples.last().expect("trajectory has a start sample").x
    }
}

/// One forward-Euler step with flow frozen over the step, clipped to the domain.
fn step(scene: &FlowScene, x: [f64; 2], t: f64, heading: [f64; 2]) -> ([f64; 2], bool) {
    let dt = scene.vehicle.dt;
    let f = gyre_velocity(scene, x, t).velocity;
    let next = [x[0] + (heading[0] + f[0]) * dt, x[1] + (heading[1] + f[1]) * dt];
    scene.domain.clip(next)
}

fn heading(scene: &FlowScene, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [scene.vehicle.v_max * c, scene.vehicle.v_max * s]
}

/// `steps` Euler steps at constant bearing `theta` from `x0` at time `t0`.
pub fn rollout(scene: &FlowScene, x0: [f64; 2], theta: f64, t0: f64, steps: usize) -> Trajectory {
    let dt = scene.vehicle.dt;
    let v = heading(scene, theta);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(TrajectorySample {
        k: 0,
        t: t0,
        x: x0,
        clipped: false,
    });
    let mut x = x0;
    for k in 0..steps {
        let (next, clipped) = step(scene, x, t0 + k as f64 * dt, v);
        x = next;
        samples.push(TrajectorySample {
            k: k + 1,
            t: t0 + (k + 1) as f64 * dt,
            x,
            clipped,
        });
    }
    Trajectory { theta, samples }
}

/// Result of a successful edge-time estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeHit {
    /// Index of the winning bearing.
    pub bearing: usize,
    /// First step attaining the closest approach.
    pub steps: usize,
    pub closest: f64,
}

impl EdgeHit {
    pub fn time(&self, scene: &FlowScene) -> f64 {
        self.steps as f64 * scene.vehicle.dt
    }
}

/// Closest-approach edge estimate: rolls out every bearing for `H` steps,
/// picks the one passing nearest to `to` (lowest index on ties) and reports
/// the first step of its closest approach if that is within the reach
/// radius; `None` means unreachable at this departure time.
///
/// Rollouts stop early once the remaining steps provably cannot beat the
/// current best or come within reach, so the answer matches a full rollout.
pub fn edge_hit(scene: &FlowScene, from: [f64; 2], to: [f64; 2], t0: f64) -> Option<EdgeHit> {
    let n = scene.vehicle.bearings;
    let h = scene.steps();
    let dt = scene.vehicle.dt;
    let reach = scene.reach();
    let max_move = (scene.vehicle.v_max + scene.gyre.amplitude * scene.max_modulation()) * dt;
    let dist = |x: [f64; 2]| (x[0] - to[0]).hypot(x[1] - to[1]);

    let mut best: Option<EdgeHit> = None;
    for i in 0..n {
        let v = heading(scene, bearing(i, n));
        let mut x = from;
        let mut own = f64::INFINITY;
        let mut own_k = 0;
        for k in 1..=h {
            x = step(scene, x, t0 + (k - 1) as f64 * dt, v).0;
            let d = dist(x);
            if d < own {
                own = d;
                own_k = k;
            }
            let floor = d - (h - k) as f64 * max_move;
            let beaten = best.is_some_and(|b| floor >= b.closest);
            if floor > reach || beaten || floor >= own {
                break;
            }
        }
        if own <= reach && best.is_none_or(|b| own < b.closest) {
            best = Some(EdgeHit {
                bearing: i,
                steps: own_k,
                closest: own,
            });
        }
    }
    best
}

/// Edge time departing at `t0`, `None` when unreachable.
pub fn edge_time(scene: &FlowScene, from: [f64; 2], to: [f64; 2], t0: f64) -> Option<f64> {
    edge_hit(scene, from, to, t0).map(|hit| hit.time(scene))
}

/// The trajectory an edge estimate follows, truncated at its arrival step.
pub fn edge_rollout(scene: &FlowScene, from: [f64; 2], to: [f64; 2], t0: f64) -> Option<(EdgeHit, Trajectory)> {
    let hit = edge_hit(scene, from, to, t0)?;
    let traj = rollout(scene, from, bearing(hit.bearing, scene.vehicle.bearings), t0, hit.steps);
    Some((hit, traj))
}

/// `(x, y, u, v)` on an `nx × ny` grid spanning the domain at time `t`.
pub fn flow_snapshot(scene: &FlowScene, t: f64, nx: usize, ny: usize) -> Vec<[f64; 4]> {
    let d = &scene.domain;
    let coord = |lo: f64, hi: f64, i: usize, n: usize| {
        if n <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = [coord(d.min[0], d.max[0], i, nx), coord(d.min[1], d.max[1], j, ny)];
            let f = gyre_velocity(scene, x, t).velocity;
            out.push([x[0], x[1], f[0], f[1]]);
        }
    }
    out
}
