use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::io::graph_to_json;
use crate::pcf::PiecewiseConstant;
use crate::scalar::{Float, Scalar};

fn w(pieces: &[(f64, f64)], default: f64) -> Modulation {
    PiecewiseConstant::new(
        pieces.iter().map(|&(p, v)| (Float::new(p), Float::new(v))).collect(),
        Float::new(default),
    )
    .unwrap()
}

fn scene(amplitude: f64, modulation: Modulation) -> FlowScene {
    FlowScene {
        domain: Domain {
            min: [0.0, 0.0],
            max: [10.0, 10.0],
        },
        gyre: Gyre {
            amplitude,
            cell_length: 5.0,
            modulation,
        },
        vehicle: Vehicle {
            v_max: 1.0,
            dt: 0.1,
            bearings: 32,
            horizon: 4.0,
            reach: None,
        },
        sampling: Sampling {
            n: 20,
            gamma: 5.0,
            radius: Some(3.0),
            seed: 11,
            start: [0.5, 0.5],
            goal: [9.5, 9.5],
        },
        edges: EdgeBuild::default(),
    }
}

fn still() -> FlowScene {
    scene(0.0, w(&[], 1.0))
}

#[test]
fn velocity_analytic_points() {
    let s = scene(2.0, w(&[], 1.0));
    let c = gyre_velocity(&s, [2.5, 2.5], 1.0);
    assert!(c.velocity[0].abs() < 1e-12 && c.velocity[1].abs() < 1e-12);
    let e = gyre_velocity(&s, [2.5, 0.0], 1.0);
    assert!((e.velocity[0] - 2.0).abs() < 1e-12 && e.velocity[1].abs() < 1e-12);
    let out = gyre_velocity(&s, [11.0, 2.0], 1.0);
    assert!(out.outside);
    assert_eq!(out.velocity, [0.0, 0.0]);
}

#[test]
fn velocity_follows_modulation() {
    let s = scene(2.0, w(&[(5.0, 0.25)], 1.0));
    let early = gyre_velocity(&s, [2.5, 0.0], 5.0).velocity[0];
    let late = gyre_velocity(&s, [2.5, 0.0], 5.1).velocity[0];
    assert!((early - 2.0).abs() < 1e-12);
    assert!((late - 0.5).abs() < 1e-12);
}

#[test]
fn gyre_is_divergence_free() {
    let s = scene(1.7, w(&[(3.0, 0.4)], 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-4;
    for _ in 0..1000 {
        let x = [rng.gen_range(0.01..9.99), rng.gen_range(0.01..9.99)];
        let t = rng.gen_range(0.0..6.0);
        let f = |p: [f64; 2]| gyre_velocity(&s, p, t).velocity;
        let du = (f([x[0] + h, x[1]])[0] - f([x[0] - h, x[1]])[0]) / (2.0 * h);
        let dv = (f([x[0], x[1] + h])[1] - f([x[0], x[1] - h])[1]) / (2.0 * h);
        assert!((du + dv).abs() <= 1e-6 * 1.7 / 5.0, "divergence {} at {x:?}", du + dv);
    }
}

#[test]
fn straight_line_without_flow() {
    let s = still();
    let traj = rollout(&s, [1.0, 1.0], 0.0, 0.0, 10);
    assert_eq!(traj.samples.len(), 11);
    let end = traj.end();
    assert!((end[0] - 2.0).abs() < 1e-12 && (end[1] - 1.0).abs() < 1e-12);
    assert!(traj.speed_error(&s) < 1e-12);
    assert!((traj.samples[10].t - 1.0).abs() < 1e-12);
}

#[test]
fn speed_invariant_in_gyre() {
    let s = scene(1.5, w(&[(2.0, 0.5)], 1.0));
    for i in 0..16 {
        let traj = rollout(&s, [3.0, 4.0], bearing(i, 16), 0.7, 60);
        assert!(traj.speed_error(&s) < 1e-9);
    }
}

#[test]
fn clipped_steps_are_flagged() {
    let s = still();
    let traj = rollout(&s, [9.95, 5.0], 0.0, 0.0, 3);
    assert!(!traj.samples[0].clipped);
    assert!(traj.samples[1].clipped);
    assert_eq!(traj.end(), [10.0, 5.0]);
}

#[test]
fn coarse_rollout_tracks_fine_integration() {
    let coarse = scene(1.0, w(&[], 1.0));
    let mut fine = coarse.clone();
    fine.vehicle.dt /= 100.0;
    let theta = std::f64::consts::FRAC_PI_4;
    let a = rollout(&coarse, [0.2, 0.2], theta, 0.0, 20).end();
    let b = rollout(&fine, [0.2, 0.2], theta, 0.0, 2000).end();
    let gap = (a[0] - b[0]).hypot(a[1] - b[1]);
    assert!(gap < 2.0 * coarse.vehicle.dt, "gap {gap}");
    // The cell at the origin turns clockwise: heading north-east from its
    // corner, the path bends right of the straight line.
    let straight = rollout(&scene(0.0, w(&[], 1.0)), [0.2, 0.2], theta, 0.0, 20).end();
    let cross = straight[0] * (a[1] - 0.2) - straight[1] * (a[0] - 0.2);
    assert!(cross < 0.0);
}

#[test]
fn edge_time_straight_line() {
    let mut s = still();
    s.vehicle.dt = 0.01;
    s.vehicle.reach = Some(0.02);
    s.vehicle.horizon = 2.0;
    let t = edge_time(&s, [1.0, 1.0], [2.0, 1.0], 0.5).unwrap();
    assert!((t - 1.0).abs() <= 0.01 + 1e-12, "{t}");
    let hit = edge_hit(&s, [1.0, 1.0], [2.0, 1.0], 0.5).unwrap();
    assert_eq!(hit.bearing, 0);
}

#[test]
fn edge_time_unreachable_against_strong_flow() {
    let s = scene(3.0, w(&[], 1.0));
    assert_eq!(edge_time(&s, [2.5, 0.0], [1.5, 0.0], 0.5), None);
    assert!(edge_time(&s, [1.5, 0.0], [2.5, 0.0], 0.5).is_some());
}

#[test]
fn pruned_search_matches_full_rollouts() {
    let s = scene(1.2, w(&[(3.0, 0.3)], 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let a: [f64; 2] = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
        let b = [
            (a[0] + rng.gen_range(-2.0f64..2.0)).clamp(0.0, 10.0),
            (a[1] + rng.gen_range(-2.0f64..2.0)).clamp(0.0, 10.0),
        ];
        let t0 = rng.gen_range(0.0..6.0);
        let h = s.steps();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..s.vehicle.bearings {
            let traj = rollout(&s, a, bearing(i, s.vehicle.bearings), t0, h);
            let (mut d, mut k) = (f64::INFINITY, 0);
            for smp in &traj.samples[1..] {
                let di = (smp.x[0] - b[0]).hypot(smp.x[1] - b[1]);
                if di < d {
                    d = di;
                    k = smp.k;
                }
            }
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, k));
            }
        }
        let (d, i, k) = best.unwrap();
        let expected = (d <= s.reach()).then_some((i, k));
        let got = edge_hit(&s, a, b, t0).map(|hit| (hit.bearing, hit.steps));
        assert_eq!(got, expected);
    }
}

#[test]
fn weakening_gyre_breaks_fifo() {
    let s = {
        let mut s = scene(1.5, w(&[(5.0, 0.1)], 1.0));
        s.vehicle.horizon = 20.0;
        s.vehicle.reach = Some(0.1);
        s
    };
    // Crossing the western edge of the cell, against the current.
    let (from, to) = ([1.0, 2.5], [1.0, 4.0]);
    let early = edge_time(&s, from, to, 0.1).unwrap();
    let late = edge_time(&s, from, to, 6.0).unwrap();
    assert!(early > late, "{early} vs {late}");
    let after_drop = edge_time(&s, from, to, 5.1).unwrap();
    assert!(0.1 + early > 5.1 + after_drop, "arrivals {} vs {}", 0.1 + early, 5.1 + after_drop);
    let f = build_edge_fn(&s, from, to);
    assert!(fifo_violation(&f) > 0.0);
}

#[test]
fn edge_fn_round_trips_at_grid_points() {
    let s = scene(1.0, w(&[(6.0, 0.2), (3.0, 0.6)], 1.0));
    let (a, b) = ([3.0, 3.0], [4.2, 3.5]);
    let f = build_edge_fn(&s, a, b);
    assert_eq!(*f.default_value(), Float::INFINITY);
    assert_eq!(f.pieces().last().unwrap().0, Float::ZERO);
    let grid = departure_grid(&s);
    assert!(grid.iter().any(|&g| (g - 3.0).abs() < 1e-12));
    for &g in grid.iter().filter(|&&g| g > 0.0) {
        let direct = edge_time(&s, a, b, g).map_or(Float::INFINITY, Float::new);
        assert_eq!(*f.eval(Float::new(g)), direct, "t={g}");
    }
    assert!(f.pieces().len() < grid.len());
}

#[test]
fn static_flow_gives_single_piece_edges() {
    let s = scene(0.8, w(&[], 1.0));
    let f = build_edge_fn(&s, [3.0, 3.0], [4.0, 3.2]);
    assert_eq!(f.pieces().len(), 1);
    assert!(f.pieces()[0].1.is_finite());
}

#[test]
fn fifo_violation_measure() {
    let f: crate::pcf::TimeFn<Float> = PiecewiseConstant::new(
        vec![(Float::new(6.0), Float::new(1.0)), (Float::new(0.0), Float::new(8.0))],
        Float::INFINITY,
    )
    .unwrap();
    // Departing at 6 arrives at 14; departing just after 6 arrives at 7.
    assert!((fifo_violation(&f) - 7.0).abs() < 1e-12);
    let fifo: crate::pcf::TimeFn<Float> = PiecewiseConstant::new(
        vec![(Float::new(6.0), Float::new(3.0)), (Float::new(0.0), Float::new(2.0))],
        Float::INFINITY,
    )
    .unwrap();
    assert_eq!(fifo_violation(&fifo), 0.0);
}

#[test]
fn two_node_roadmap() {
    let mut s = scene(0.5, w(&[], 1.0));
    s.sampling.n = 2;
    s.sampling.start = [4.0, 4.0];
    s.sampling.goal = [5.0, 4.5];
    s.sampling.gamma = 1.0;
    s.sampling.radius = Some(2.0);
    let r = prm_star(&s).unwrap();
    assert_eq!(r.graph.len(), 2);
    assert_eq!(r.graph.edge_count(), 2);
    assert!(r.graph.edge(0, 1).is_some() && r.graph.edge(1, 0).is_some());
    assert!(r.graph.is_goal(GOAL));
}

#[test]
fn roadmap_is_deterministic() {
    let mut s = scene(0.3, w(&[(4.0, 0.3)], 1.0));
    s.sampling.radius = Some(4.0);
    s.vehicle.horizon = 6.0;
    s.vehicle.bearings = 64;
    s.sampling.goal = [6.0, 6.0];
    let a = prm_star(&s).unwrap();
    let b = prm_star(&s).unwrap();
    let pa = a.position_map();
    assert_eq!(graph_to_json(&a.graph, Some(&pa)), graph_to_json(&b.graph, Some(&b.position_map())));
    let mut other = s.clone();
    other.sampling.seed += 1;
    assert_ne!(sample_positions(&other), sample_positions(&s));
}

#[test]
fn radius_inequality_enforced() {
    let mut s = still();
    assert!(s.radius() > s.radius_bound());
    s.sampling.radius = Some(0.5 * s.radius_bound());
    assert!(matches!(s.validate(), Err(SceneError::RadiusTooSmall { .. })));
    s.sampling.radius = None;
    assert!(s.validate().is_ok());
    assert!(s.radius() > s.radius_bound());
}

#[test]
fn disconnected_roadmap_is_reported() {
    let mut s = still();
    s.sampling.n = 2;
    s.sampling.gamma = 0.5;
    s.sampling.radius = Some(1.0);
    match prm_star(&s) {
        Err(FlowError::Disconnected { component, total }) => {
            assert_eq!(component, vec![0]);
            assert_eq!(total, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn cross_flow_makes_edges_asymmetric() {
    let s = scene(0.8, w(&[(4.0, 0.3)], 1.0));
    let (a, b) = ([1.0, 1.0], [2.5, 1.5]);
    assert_ne!(build_edge_fn(&s, a, b), build_edge_fn(&s, b, a));
}

#[test]
fn scene_json_round_trip() {
    let s = scene(0.8, w(&[(4.0, 0.3)], 1.0));
    let back = FlowScene::from_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    let bad = s.to_json().replace("\"v_max\": 1.0", "\"v_max\": -1.0");
    assert!(matches!(FlowScene::from_json(&bad), Err(SceneError::Invalid(_))));
}

#[test]
fn snapshot_grid_shape() {
    let s = scene(1.0, w(&[], 1.0));
    let grid = flow_snapshot(&s, 0.5, 5, 3);
    assert_eq!(grid.len(), 15);
    assert_eq!(grid[0][..2], [0.0, 0.0]);
    assert_eq!(grid[14][..2], [10.0, 10.0]);
}


#[test]
fn segment_trajectory_uses_the_sampled_bearing() {
    let s = scene(1.0, Modulation::constant(Float::new(1.0)));
    let grid = departure_grid(&s);
    assert_eq!(sample_time(&s, grid[3] - 0.01, false), grid[3]);
    assert_eq!(sample_time(&s, grid[3], false), grid[3]);
    assert_eq!(sample_time(&s, grid[3], true), grid[4]);
    assert_eq!(sample_time(&s, 0.0, true), grid[1]);
    assert_eq!(sample_time(&s, 1e6, false), *grid.last().unwrap());
    let (from, to) = ([2.0, 2.0], [3.0, 2.5]);
    let t = grid[3] - 0.01;
    let traj = segment_trajectory(&s, from, to, t, false).unwrap();
    let hit = edge_hit(&s, from, to, grid[3]).unwrap();
    assert_eq!(traj.samples.len(), hit.steps + 1);
    assert_eq!(traj.samples[0].t, t);
    assert!(traj.speed_error(&s) < 1e-12);
}
