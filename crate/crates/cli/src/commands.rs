use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use anyhow::anyhow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use tdpf::flow::{flow_snapshot, prm_star, segment_trajectory, FlowScene, SceneError, GOAL, START};
use tdpf::io::{graph_to_json, parse_graph, parse_policy, parse_solution, solution_to_json, step_samples};
use tdpf::oracle::min_travel_exhaustive;
use tdpf::tdsp::{
    best_departure, evaluate_policy_with, extract_path, iterate, solve_with, PathResult, PolicyTable,
    Solution, SolveError, SolveOptions, TimedGraph, TravelTable,
};
use tdpf::{PiecewiseConstant, Scalar, TimeFn};

use crate::output::{read_input, CliResult, Failure, Manifest, OutDir};

/// Overrides shared by the solving commands.
#[derive(Debug, Clone, Copy)]
pub struct Numeric {
    pub epsilon: Option<f64>,
    pub cap: Option<usize>,
}

fn load_graph<T: Scalar>(path: &Path) -> CliResult<TimedGraph<T>> {
    let text = read_input(path)?;
    parse_graph::<T>(&text)
        .map(|f| f.graph)
        .map_err(|e| Failure::parse(e).context(format!("parsing graph {}", path.display())))
}

fn options<T: Scalar>(g: &TimedGraph<T>, num: Numeric, m: &mut Manifest) -> CliResult<SolveOptions> {
    let mut opts = SolveOptions::for_graph(g);
    if let Some(cap) = num.cap {
        opts.cap = cap;
    }
    if let Some(eps) = num.epsilon {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Failure::parse(anyhow!("--epsilon must be a non-negative number, got {eps}")));
        }
        opts.epsilon = eps;
    }
    m.set("mode", T::MODE);
    m.set("cap", opts.cap);
    m.set("epsilon", opts.epsilon);
    Ok(opts)
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::NotConverged { .. } => Failure::not_converged(e),
        _ => Failure::validation(e),
    }
}

fn time_arg<T: Scalar>(t: f64) -> CliResult<T> {
    if t.is_finite() {
        Ok(T::from_f64(t))
    } else {
        Err(Failure::parse(anyhow!("time {t} is not finite")))
    }
}

/// Right end of step plots: one unit past the last breakpoint of any row or edge.
fn plot_end<T: Scalar>(g: &TimedGraph<T>, rows: &[TimeFn<T>]) -> T {
    let top = rows.iter().filter_map(|r| r.breakpoints().next()).fold(g.max_breakpoint(), T::max);
    top.max(T::ZERO) + T::from_f64(1.0)
}

fn time_rows<T: Scalar>(f: &TimeFn<T>, end: T) -> Vec<[String; 2]> {
    step_samples(f, end).into_iter().map(|(t, v)| [t.to_string(), v.to_string()]).collect()
}

fn policy_rows<T: Scalar>(g: &TimedGraph<T>, f: &PiecewiseConstant<T, Option<usize>>, end: T) -> Vec<[String; 2]> {
    let ids = f.map_values(|k| k.map(|s| g.id(s)));
    step_samples(&ids, end)
        .into_iter()
        .map(|(t, k)| [t.to_string(), k.map_or(String::new(), |id| id.to_string())])
        .collect()
}

fn write_state_csvs<T: Scalar>(
    out: &mut OutDir,
    g: &TimedGraph<T>,
    travel: &TravelTable<T>,
    policy: Option<&PolicyTable<T>>,
    states: impl IntoIterator<Item = usize>,
) -> CliResult<()> {
    let end = plot_end(g, &travel.rows);
    for s in states {
        let id = g.id(s);
        out.write_csv(&format!("travel/{id}.csv"), &["t", "travel_time"], time_rows(travel.row(s), end))?;
        if let Some(pi) = policy {
            out.write_csv(&format!("policy/{id}.csv"), &["t", "successor"], policy_rows(g, pi.row(s), end))?;
        }
    }
    Ok(())
}

fn solution_stats<T: Scalar>(m: &mut Manifest, g: &TimedGraph<T>, sol: &Solution<T>) {
    m.stat("states", g.len());
    m.stat("edges", g.edge_count());
    m.stat("iterations", sol.iterations);
    m.stat("converged", sol.converged);
    m.stat("k_max", sol.k_max);
    m.stat("subdomains_settled_at", sol.subdomains_settled_at);
    m.stat("max_row_pieces", sol.travel.max_pieces());
    m.stat("max_policy_pieces", sol.policy.rows.iter().map(|r| r.len()).max().unwrap_or(0));
    m.stat("max_edge_pieces", g.max_edge_pieces());
    m.stat("unreachable", sol.unreachable.iter().map(|&s| g.id(s)).collect::<Vec<_>>());
    m.stat("residuals", &sol.residuals);
}

fn not_converged<T: Scalar>(sol: &Solution<T>) -> Failure {
    let mut worst = sol.residuals.clone();
    worst.sort_by(|a, b| b.1.total_cmp(&a.1));
    worst.truncate(10);
    Failure::not_converged(anyhow!(
        "not converged after {} sweeps; largest residuals (state, change): {worst:?}",
        sol.iterations
    ))
}

pub fn solve<T: Scalar>(graph: &Path, out: &Path, num: Numeric) -> CliResult<()> {
    let mut m = Manifest::new("solve");
    m.input("graph", graph);
    let g = load_graph::<T>(graph)?;
    let opts = options(&g, num, &mut m)?;
    let sol = iterate(&g, &opts).map_err(solve_failure)?;
    let mut dir = OutDir::create(out)?;
    dir.write_text("solution.json", &solution_to_json(&g, &sol))?;
    write_state_csvs(&mut dir, &g, &sol.travel, Some(&sol.policy), 0..g.len())?;
    solution_stats(&mut m, &g, &sol);
    dir.finish(m)?;
    if !sol.converged {
        return Err(not_converged(&sol));
    }
    println!(
        "converged after {} iterations (k_max {}), {} states, largest row {} pieces",
        sol.iterations,
        sol.k_max.map_or("n/a".into(), |k| k.to_string()),
        g.len(),
        sol.travel.max_pieces()
    );
    Ok(())
}

pub fn evaluate<T: Scalar>(graph: &Path, policy: &Path, out: &Path, num: Numeric) -> CliResult<()> {
    let mut m = Manifest::new("evaluate");
    m.input("graph", graph);
    m.input("policy", policy);
    let g = load_graph::<T>(graph)?;
    let pi = parse_policy(&g, &read_input(policy)?)
        .map_err(|e| Failure::parse(e).context(format!("parsing policy {}", policy.display())))?;
    let opts = options(&g, num, &mut m)?;
    let tt = evaluate_policy_with(&g, &pi, &opts).map_err(solve_failure)?;
    let mut dir = OutDir::create(out)?;
    let states: serde_json::Map<String, serde_json::Value> = (0..g.len())
        .map(|s| (g.id(s).to_string(), json!({ "travel": tt.row(s) })))
        .collect();
    dir.write_json(
        "travel.json",
        &json!({ "mode": T::MODE, "iterations": tt.iteration, "states": states }),
    )?;
    write_state_csvs(&mut dir, &g, &tt, None, 0..g.len())?;
    m.stat("iterations", tt.iteration);
    m.stat("max_row_pieces", tt.max_pieces());
    dir.finish(m)?;
    println!("policy evaluated in {} iterations", tt.iteration);
    Ok(())
}

#[derive(Serialize)]
struct PathRecord {
    t0: f64,
    states: Vec<u64>,
    departures: Vec<f64>,
    arrivals: Vec<f64>,
    travel_time: f64,
    arrival_time: f64,
    revisits_states: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trajectories: Vec<String>,
}

impl PathRecord {
    fn new<T: Scalar>(g: &TimedGraph<T>, t0: f64, p: &PathResult<T>) -> Self {
        PathRecord {
            t0,
            states: p.states.iter().map(|&s| g.id(s)).collect(),
            departures: p.departures.iter().map(|t| t.to_f64()).collect(),
            arrivals: p.arrivals.iter().map(|t| t.to_f64()).collect(),
            travel_time: p.travel_time.to_f64(),
            arrival_time: p.arrival_time.to_f64(),
            revisits_states: p.has_cycle(),
            trajectories: Vec::new(),
        }
    }
}

fn best_record<T: Scalar>(row: &TimeFn<T>, hi: f64) -> CliResult<serde_json::Value> {
    let best = best_departure(row, T::ZERO, time_arg(hi)?).map_err(Failure::validation)?;
    let intervals: Vec<[f64; 2]> = best.intervals.iter().map(|(a, b)| [a.to_f64(), b.to_f64()]).collect();
    Ok(json!({ "window": [0.0, hi], "intervals": intervals, "travel_time": best.value.to_f64() }))
}

pub fn extract<T: Scalar>(
    graph: &Path,
    solution: &Path,
    state: u64,
    t0s: &[f64],
    window: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    let mut m = Manifest::new("extract");
    m.input("graph", graph);
    m.input("solution", solution);
    m.set("mode", T::MODE);
    m.set("state", state);
    m.set("t0", t0s);
    let g = load_graph::<T>(graph)?;
    let sol = parse_solution(&g, &read_input(solution)?)
        .map_err(|e| Failure::parse(e).context(format!("parsing solution {}", solution.display())))?;
    let s0 = g
        .state(state)
        .ok_or_else(|| Failure::validation(anyhow!("state {state} is not in the graph")))?;
    let mut dir = OutDir::create(out)?;
    let mut records = Vec::new();
    for (i, &t0) in t0s.iter().enumerate() {
        let p = extract_path(&g, &sol.policy, &sol.travel, s0, time_arg(t0)?)
            .map_err(|e| Failure::validation(e).context(format!("extracting from state {state} at t0 = {t0}")))?;
        let rows = p.states.iter().enumerate().map(|(k, &s)| {
            [
                k.to_string(),
                g.id(s).to_string(),
                p.departures.get(k).map_or(String::new(), |t| t.to_string()),
                if k == 0 { String::new() } else { p.arrivals[k - 1].to_string() },
            ]
        });
        dir.write_csv(&format!("paths/path_{i}.csv"), &["step", "state", "departure", "arrival"], rows)?;
        println!(
            "t0 = {t0}: {} states, travel time {}{}",
            p.states.len(),
            p.travel_time,
            if p.has_cycle() { " (revisits states)" } else { "" }
        );
        records.push(PathRecord::new(&g, t0, &p));
    }
    let best = window.map(|hi| best_record(sol.travel.row(s0), hi)).transpose()?;
    dir.write_json("paths.json", &json!({ "state": state, "paths": records, "best_departure": best }))?;
    dir.finish(m)?;
    Ok(())
}

#[derive(Serialize)]
struct Discrepancy {
    state: u64,
    t: f64,
    table: String,
    oracle: String,
    walk: Vec<u64>,
}

/// Sample times: every positive breakpoint, the midpoints between them, one
/// past the top, and uniform draws.
fn oracle_times<T: Scalar>(g: &TimedGraph<T>, travel: &TravelTable<T>) -> (Vec<T>, f64) {
    let mut bps: BTreeSet<T> = travel.rows.iter().flat_map(|r| r.breakpoints()).collect();
    bps.extend(g.edges().flat_map(|(_, _, f)| f.breakpoints()));
    let bps: Vec<T> = bps.into_iter().filter(|&t| t > T::ZERO && t.is_finite()).collect();
    let mut candidates = bps.clone();
    candidates.extend(bps.windows(2).map(|w| T::from_f64(0.5 * (w[0].to_f64() + w[1].to_f64()))));
    let span = bps.last().map_or(1.0, |t| t.to_f64()) + 1.0;
    candidates.push(T::from_f64(span));
    (candidates, span)
}

pub fn oracle_check<T: Scalar>(
    graph: &Path,
    solution: Option<&Path>,
    samples: usize,
    seed: u64,
    out: &Path,
    num: Numeric,
) -> CliResult<()> {
    let mut m = Manifest::new("oracle-check");
    m.input("graph", graph);
    m.seed = Some(seed);
    m.set("samples", samples);
    let g = load_graph::<T>(graph)?;
    let opts = options(&g, num, &mut m)?;
    let travel = match solution {
        Some(path) => {
            m.input("solution", path);
            parse_solution(&g, &read_input(path)?)
                .map_err(|e| Failure::parse(e).context(format!("parsing solution {}", path.display())))?
                .travel
        }
        None => solve_with(&g, &opts).map_err(solve_failure)?.travel,
    };
    let starts: Vec<usize> = (0..g.len()).filter(|&s| !g.is_goal(s)).collect();
    if starts.is_empty() {
        return Err(Failure::validation(anyhow!("graph has no non-goal state to check")));
    }
    let (candidates, span) = oracle_times(&g, &travel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = starts[rng.gen_range(0..starts.len())];
        let t = if rng.gen_bool(0.5) {
            candidates[rng.gen_range(0..candidates.len())]
        } else {
            T::from_f64(rng.gen_range(0.0..span))
        };
        let row = travel.row(s);
        let table = if t == T::ZERO { *row.eval_after(t) } else { *row.eval(t) };
        let oracle = min_travel_exhaustive(&g, s, t).map_err(Failure::validation)?;
        let tolerance = opts.epsilon * oracle.walk.len().max(1) as f64;
        if !table.close_to(oracle.time, tolerance) {
            let gap = match (table.is_finite(), oracle.time.is_finite()) {
                (true, true) => (table.to_f64() - oracle.time.to_f64()).abs(),
                _ => f64::INFINITY,
            };
            worst = worst.max(gap);
            found.push(Discrepancy {
                state: g.id(s),
                t: t.to_f64(),
                table: table.to_string(),
                oracle: oracle.time.to_string(),
                walk: oracle.walk.iter().map(|&x| g.id(x)).collect(),
            });
        }
    }
    let mut dir = OutDir::create(out)?;
    let report = json!({
        "mode": T::MODE,
        "samples": samples,
        "seed": seed,
        "table_source": if solution.is_some() { "file" } else { "solve" },
        "discrepancies": found.len(),
        "max_discrepancy": if worst.is_finite() { json!(worst) } else { json!("inf") },
        "first_discrepancies": &found[..found.len().min(50)],
    });
    dir.write_json("oracle_report.json", &report)?;
    m.stat("discrepancies", found.len());
    m.stat("max_discrepancy", if worst.is_finite() { json!(worst) } else { json!("inf") });
    dir.finish(m)?;
    if found.is_empty() {
        println!("{samples} samples, 0 discrepancies");
        Ok(())
    } else {
        let first = &found[0];
        Err(Failure::validation(anyhow!(
            "{} of {samples} samples disagree with the oracle (max {worst}); first: state {} at t = {}: table {}, oracle {}",
            found.len(),
            first.state,
            first.t,
            first.table,
            first.oracle
        )))
    }
}

pub struct FlowArgs<'a> {
    pub scene: &'a Path,
    pub t0s: &'a [f64],
    pub seed: Option<u64>,
    pub window: f64,
    pub grid: usize,
    pub out: &'a Path,
    pub num: Numeric,
}

fn load_scene(path: &Path) -> CliResult<FlowScene> {
    FlowScene::from_json(&read_input(path)?).map_err(|e| {
        let ctx = format!("scene {}", path.display());
        match e {
            SceneError::Invalid(_) => Failure::parse(e).context(ctx),
            SceneError::RadiusTooSmall { .. } => Failure::validation(e).context(ctx),
        }
    })
}

pub fn plan_flow<T: Scalar>(args: FlowArgs) -> CliResult<()> {
    let mut m = Manifest::new("plan-flow");
    m.input("scene", args.scene);
    let mut scene = load_scene(args.scene)?;
    if let Some(seed) = args.seed {
        scene.sampling.seed = seed;
    }
    m.seed = Some(scene.sampling.seed);
    m.set("t0", args.t0s);
    m.set("window", args.window);
    let t0s: Vec<f64> = if args.t0s.is_empty() { vec![0.0] } else { args.t0s.to_vec() };

    let clock = Instant::now();
    let roadmap = prm_star(&scene).map_err(Failure::validation)?;
    m.stat("roadmap_seconds", clock.elapsed().as_secs_f64());
    m.stat("radius", roadmap.radius);
    m.stat("radius_bound", scene.radius_bound());
    m.stat("dropped_edges", roadmap.dropped_edges);

    let mut dir = OutDir::create(args.out)?;
    dir.write_text("roadmap.json", &graph_to_json(&roadmap.graph, Some(&roadmap.position_map())))?;

    let g: TimedGraph<T> = roadmap
        .graph
        .convert(|x| if x.is_finite() { T::from_f64(x.get()) } else { T::INFINITY })
        .map_err(Failure::validation)?;
    let opts = options(&g, args.num, &mut m)?;
    let clock = Instant::now();
    let sol = iterate(&g, &opts).map_err(solve_failure)?;
    m.stat("solve_seconds", clock.elapsed().as_secs_f64());
    solution_stats(&mut m, &g, &sol);
    dir.write_text("solution.json", &solution_to_json(&g, &sol))?;
    write_state_csvs(&mut dir, &g, &sol.travel, Some(&sol.policy), [START])?;
    if !sol.converged {
        dir.finish(m)?;
        return Err(not_converged(&sol));
    }

    let mut records = Vec::new();
    let mut worst_speed = 0.0f64;
    for (i, &t0) in t0s.iter().enumerate() {
        let p = extract_path(&g, &sol.policy, &sol.travel, START, time_arg(t0)?)
            .map_err(|e| Failure::validation(e).context(format!("extracting the path at t0 = {t0}")))?;
        let mut record = PathRecord::new(&g, t0, &p);
        let after = p.departure_time() == T::ZERO;
        for (k, dep) in p.departures.iter().enumerate() {
            let (from, to) = (roadmap.positions[p.states[k]], roadmap.positions[p.states[k + 1]]);
            let traj = segment_trajectory(&scene, from, to, dep.to_f64(), after)
                .ok_or_else(|| Failure::validation(anyhow!("edge {} -> {} has no rollout", p.states[k], p.states[k + 1])))?;
            worst_speed = worst_speed.max(traj.speed_error(&scene));
            let name = format!("trajectories/path_{i}_segment_{k:03}.csv");
            let rows = traj
                .samples
                .iter()
                .map(|s| [s.k.to_string(), num(s.t), num(s.x[0]), num(s.x[1])]);
            dir.write_csv(&name, &["k", "t", "x", "y"], rows)?;
            record.trajectories.push(name);
        }
        println!(
            "t0 = {t0}: {} states, travel time {}{}",
            p.states.len(),
            p.travel_time,
            if p.has_cycle() { " (revisits states)" } else { "" }
        );
        records.push(record);
    }
    m.stat("max_speed_error", worst_speed);
    if worst_speed > 1e-9 {
        return Err(Failure::validation(anyhow!("rollout speed invariant violated by {worst_speed:e}")));
    }

    let mut snapshot_times: Vec<f64> = t0s.iter().copied().chain([0.0]).collect();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();
    let mut snapshots = Vec::new();
    for (i, &t) in snapshot_times.iter().enumerate() {
        let name = format!("flow/snapshot_{i}.csv");
        let rows = flow_snapshot(&scene, t, args.grid, args.grid)
            .into_iter()
            .map(|r| r.map(num));
        dir.write_csv(&name, &["x", "y", "u", "v"], rows)?;
        snapshots.push(json!({ "t": t, "file": name }));
    }

    let row = sol.travel.row(START);
    let best = best_record(row, args.window)?;
    println!("best departure in (0, {}]: {best}", args.window);
    dir.write_json(
        "paths.json",
        &json!({
            "start": START,
            "goal": GOAL,
            "travel_time_at_0+": row.eval_after(T::ZERO).to_f64(),
            "best_departure": best,
            "paths": records,
            "flow_snapshots": snapshots,
        }),
    )?;
    dir.finish(m)?;
    Ok(())
}

/// Float CSV field without a negative zero.
fn num(x: f64) -> String {
    (x + 0.0).to_string()
}
