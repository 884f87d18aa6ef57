use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn tdpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdpf")).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    let out = tdpf(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_writes_table_policy_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s");
    run(&["solve", "--graph", p(&fixture("two_state.json")), "--out", p(&out)]);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["stats"]["iterations"], 5);
    assert_eq!(manifest["stats"]["converged"], true);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file(), "{f}");
    }
    let sol = json(&out.join("solution.json"));
    let travel = &sol["states"]["0"]["travel"];
    assert_eq!(travel["default"], "inf");
    assert_eq!(travel["pieces"][1], serde_json::json!([1.9, 2.8]));
    let csv = fs::read_to_string(out.join("travel/0.csv")).unwrap();
    assert!(csv.starts_with("t,travel_time\n0,5.1\n0.3,5.1\n0.3,4.4\n"), "{csv}");
}

#[test]
fn fixed_and_float_modes_agree_off_breakpoints() {
    let dir = TempDir::new().unwrap();
    let g = fixture("grid3x3.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["solve", "--graph", p(&g), "--out", p(&a)]);
    run(&["solve", "--graph", p(&g), "--out", p(&b), "--mode", "float"]);
    let ts = ["0.25", "0.5", "1.75", "3.1"];
    let (ea, eb) = (dir.path().join("ea"), dir.path().join("eb"));
    for (sol, out, mode) in [(&a, &ea, "fixed"), (&b, &eb, "float")] {
        let mut args = vec!["extract", "--graph", p(&g), "--solution"];
        let sol = sol.join("solution.json");
        args.extend([p(&sol), "--state", "1", "--out", p(out), "--mode", mode]);
        for t in &ts {
            args.extend(["--t0", t]);
        }
        run(&args);
    }
    let (pa, pb) = (json(&ea.join("paths.json")), json(&eb.join("paths.json")));
    for i in 0..ts.len() {
        let (x, y) = (&pa["paths"][i]["travel_time"], &pb["paths"][i]["travel_time"]);
        assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn extract_follows_cycles_and_finds_the_best_departure() {
    let dir = TempDir::new().unwrap();
    let g = fixture("grid3x3.json");
    let sol = dir.path().join("s");
    run(&["solve", "--graph", p(&g), "--out", p(&sol)]);
    let out = dir.path().join("e");
    let stdout = run(&[
        "extract",
        "--graph",
        p(&g),
        "--solution",
        p(&sol.join("solution.json")),
        "--state",
        "1",
        "--t0",
        "0.5",
        "--window",
        "20",
        "--out",
        p(&out),
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("revisits states"));

    let paths = json(&out.join("paths.json"));
    let path = &paths["paths"][0];
    assert_eq!(path["travel_time"], 12.0);
    assert_eq!(path["revisits_states"], true);
    let best = paths["best_departure"]["travel_time"].as_f64().unwrap();
    assert!(best <= 12.0);

    let csv = fs::read_to_string(out.join("paths/path_0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,state,departure,arrival");
    assert_eq!(lines.len(), path["states"].as_array().unwrap().len() + 1);
    assert!(lines.last().unwrap().ends_with(",12.5"));
}

#[test]
fn evaluate_a_fixed_policy() {
    let dir = TempDir::new().unwrap();
    let policy = dir.path().join("direct.json");
    fs::write(&policy, r#"{"states": {"0": {"policy": {"pieces": [], "default": 1}}}}"#).unwrap();
    let out = dir.path().join("ev");
    run(&["evaluate", "--graph", p(&fixture("two_state.json")), "--policy", p(&policy), "--out", p(&out)]);
    let travel = json(&out.join("travel.json"));
    assert_eq!(travel["states"]["0"]["travel"]["pieces"], serde_json::json!([[3.5, 1.2], [0.0, 5.1]]));

    fs::write(&policy, r#"{"states": {"0": {"policy": {"pieces": [], "default": 0}}}}"#).unwrap();
    let looping = tdpf(&["evaluate", "--graph", p(&fixture("two_state.json")), "--policy", p(&policy), "--out", p(&out)]);
    assert_eq!(looping.status.code(), Some(3));

    fs::write(&policy, r#"{"states": {"0": {"policy": {"pieces": [], "default": 9}}}}"#).unwrap();
    let stranger = tdpf(&["evaluate", "--graph", p(&fixture("two_state.json")), "--policy", p(&policy), "--out", p(&out)]);
    assert_eq!(stranger.status.code(), Some(2));
}

#[test]
fn malformed_function_names_the_edge() {
    let dir = TempDir::new().unwrap();
    let graph = dir.path().join("bad.json");
    fs::write(
        &graph,
        r#"{"states": [0, 1], "goals": [1], "edges": [
            {"from": 0, "to": 0, "fn": {"pieces": [[0, 1.6]], "default": "inf"}},
            {"from": 0, "to": 1, "fn": {"pieces": [[0, 5.1], [3.5, 1.2]], "default": "inf"}}]}"#,
    )
    .unwrap();
    let out = tdpf(&["solve", "--graph", p(&graph), "--out", p(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("edge #1 (0 -> 1)"), "{stderr}");
    assert!(!dir.path().join("s/solution.json").exists());

    fs::write(&graph, "{\"states\": [0, 1],").unwrap();
    let out = tdpf(&["solve", "--graph", p(&graph), "--out", p(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = tdpf(&["solve", "--graph", p(&dir.path().join("absent.json")), "--out", p(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn iteration_cap_too_small_is_not_convergence() {
    let dir = TempDir::new().unwrap();
    let out = tdpf(&["solve", "--graph", p(&fixture("two_state.json")), "--out", p(&dir.path().join("s")), "--cap", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not converged after 3"), "{stderr}");
}

#[test]
fn oracle_check_accepts_solutions_and_catches_corruption() {
    let dir = TempDir::new().unwrap();
    let g = fixture("two_state.json");
    let out = dir.path().join("o");
    run(&["oracle-check", "--graph", p(&g), "--samples", "100", "--seed", "3", "--out", p(&out)]);
    let report = json(&out.join("oracle_report.json"));
    assert_eq!(report["discrepancies"], 0);
    assert_eq!(report["samples"], 100);

    let sol = dir.path().join("s");
    run(&["solve", "--graph", p(&g), "--out", p(&sol)]);
    let text = fs::read_to_string(sol.join("solution.json")).unwrap();
    let corrupted = dir.path().join("corrupted.json");
    let mut v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["states"]["0"]["travel"]["pieces"][2], serde_json::json!([0.3, 4.4]));
    v["states"]["0"]["travel"]["pieces"][2][1] = serde_json::json!(4.3);
    fs::write(&corrupted, v.to_string()).unwrap();

    let out = dir.path().join("o2");
    let res = tdpf(&[
        "oracle-check",
        "--graph",
        p(&g),
        "--solution",
        p(&corrupted),
        "--samples",
        "100",
        "--out",
        p(&out),
    ]);
    assert_eq!(res.status.code(), Some(4));
    let report = json(&out.join("oracle_report.json"));
    assert!(report["discrepancies"].as_u64().unwrap() > 0);
    let first = &report["first_discrepancies"][0];
    assert_eq!(first["table"], "4.3");
    assert_eq!(first["oracle"], "4.4");
}

#[test]
fn still_water_travel_is_close_to_straight_line_time() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("still");
    run(&["plan-flow", "--scene", p(&fixture("still_scene.json")), "--t0", "0", "--t0", "5", "--out", p(&out)]);
    let paths = json(&out.join("paths.json"));
    let straight = (2.0f64 * 25.0).sqrt();
    for path in paths["paths"].as_array().unwrap() {
        let t = path["travel_time"].as_f64().unwrap();
        assert!(t >= straight - 1e-9 && t <= 1.1 * straight, "{t}");
    }

    let traj = fs::read_to_string(out.join("trajectories/path_0_segment_000.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("k,t,x,y"));
    assert_eq!(lines.next(), Some("0,0,2.5,2.5"));
    let snap = fs::read_to_string(out.join("flow/snapshot_0.csv")).unwrap();
    assert!(snap.starts_with("x,y,u,v\n"));
    assert!(!snap.contains("-0,") && !snap.contains("-0\n"));
    assert_eq!(snap.lines().count(), 21 * 21 + 1);

    let roadmap = json(&out.join("roadmap.json"));
    assert_eq!(roadmap["states"].as_array().unwrap().len(), 200);
    assert_eq!(roadmap["positions"]["0"], serde_json::json!([2.5, 2.5]));
    assert_eq!(roadmap["positions"]["1"], serde_json::json!([7.5, 7.5]));
}

#[test]
fn roadmap_is_reproducible_from_the_seed() {
    let dir = TempDir::new().unwrap();
    let scene = fixture("still_scene.json");
    let build = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        run(&["plan-flow", "--scene", p(&scene), "--seed", seed, "--out", p(&out)]);
        fs::read(out.join("roadmap.json")).unwrap()
    };
    let a = build("a", "11");
    assert_eq!(a, build("b", "11"));
    assert_ne!(a, build("c", "12"));
}

#[test]
fn gyre_plan_rewards_a_later_departure() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("gyre");
    run(&[
        "plan-flow",
        "--scene",
        p(&fixture("gyre_scene.json")),
        "--t0",
        "0",
        "--t0",
        "12",
        "--t0",
        "25",
        "--out",
        p(&out),
    ]);
    let paths = json(&out.join("paths.json"));
    let at_zero = paths["travel_time_at_0+"].as_f64().unwrap();
    let best = paths["best_departure"]["travel_time"].as_f64().unwrap();
    assert!(best < at_zero, "best {best} vs {at_zero}");
    let times: Vec<f64> = paths["paths"].as_array().unwrap().iter().map(|p| p["travel_time"].as_f64().unwrap()).collect();
    assert_eq!(times[0], at_zero);
    assert!(times.iter().all(|&t| t >= best));

    let manifest = json(&out.join("manifest.json"));
    assert!(manifest["stats"]["max_speed_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(manifest["seed"], 2017);
    assert_eq!(paths["flow_snapshots"][1]["t"], 12.0);
}
