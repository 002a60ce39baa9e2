use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smoothq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothq"))
        .args(args)
        .env_remove("SMOOTHQ_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_rps(dir: &Path) -> String {
    let path = dir.join("rps.json");
    let game = smoothq::io::game_to_json(&smoothq::experiments::make_rps());
    fs::write(&path, serde_json::to_string_pretty(&game).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_qre_on_rps_file() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_rps(dir.path());
    let out = smoothq(&["solve-qre", "--game", &game, "--temps", "0.1,0.1", "--out", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!(doc["residual"].as_f64().unwrap() <= 1e-8);
    for id in ["x", "y"] {
        for p in doc["profile"][id].as_array().unwrap() {
            assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
        }
    }
}

#[test]
fn validate_rejects_symmetric_payoffs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"players": [{"id": "x", "actions": 3, "weight": 1}, {"id": "y", "actions": 3, "weight": 1}],
            "edges": [{"from": "x", "to": "y", "matrix": [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]},
                      {"from": "y", "to": "x", "matrix": [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]}]}"#,
    )
    .unwrap();
    let out = smoothq(&["validate", "--game", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["zero_sum"]["passed"], false);
    assert!(doc["zero_sum"]["max_residual"].as_f64().unwrap() > 1.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual"));

    let ok = smoothq(&["validate", "--game", "builtin:match-mismatch:4", "--infer-weights"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(json(&ok)["inferred"]["weights"].is_array());
}

#[test]
fn simulate_without_exploration_fails_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let game = write_rps(dir.path());
    let traj = dir.path().join("traj.csv");
    let report = dir.path().join("lyapunov.csv");
    let out = smoothq(&[
        "simulate", "--game", &game, "--temps", "0,0", "--certify",
        "--out", traj.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("t,player,action,prob,phi\n"));
    let table = fs::read_to_string(&report).unwrap();
    assert!(table.starts_with("t,phi,formula_deriv,fd_deriv,rate_bound\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"monotone\": false"));
}

#[test]
fn simulate_with_exploration_certifies() {
    let out = smoothq(&[
        "simulate", "--game", "builtin:amps", "--temps", "0.5", "--horizon", "20", "--certify", "--out", "-",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("t,player,action,prob,phi"));
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["batch", "--game", "builtin:amps", "--temps", "0.3", "--runs", "4", "--seed", "9", "--horizon", "5"];
    let a = smoothq(&args);
    let b = smoothq(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["runs"], 4);

    let sim = ["simulate", "--game", "builtin:rps", "--temps", "0.2", "--seed", "3", "--horizon", "2"];
    assert_eq!(smoothq(&sim).stdout, smoothq(&sim).stdout);
}

#[test]
fn default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_smoothq"))
        .args(["solve-qre", "--game", "builtin:amps", "--temps", "1"])
        .env("SMOOTHQ_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("qre.json")).unwrap()).unwrap();
    assert_eq!(doc["converged"], true);
}

#[test]
fn grid_and_surface_tables() {
    let out = smoothq(&["grid", "--game", "builtin:amps", "--player1", "x", "--t1", "0,0.5,1", "--player2", "1", "--t2", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T1,T2,player,action,prob"));
    // the T1 = 0 node is skipped; two nodes of four rows remain
    assert_eq!(lines.count(), 8);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("surface.csv");
    let out = smoothq(&[
        "surface", "--game", "builtin:match-mismatch:3", "--temps", "0.1", "--alpha", "-1:1:5", "--beta", "-1:1:3",
        "--seed", "4", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 1 + 15);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("surface.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["u"].as_array().unwrap().len(), 3);
}

#[test]
fn anneal_and_two_by_two() {
    let out = smoothq(&["anneal", "--game", "builtin:amps", "--seed", "2", "--out", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((doc["profile"]["x"][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-2);

    let out = smoothq(&["analyze-2x2", "--a", "1,-1,-1,0", "--b", "-1,1,1,0", "--ty", "0,1,5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let regimes: Vec<&str> = doc["predictions"].as_array().unwrap().iter().map(|p| p["regime"].as_str().unwrap()).collect();
    assert_eq!(regimes, ["cyclic", "interior", "boundary"]);
    assert!((doc["t_crit"].as_f64().unwrap() - 2.0 / std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn usage_errors() {
    assert_eq!(smoothq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(smoothq(&["solve-qre", "--game", "builtin:rps", "--temps", "a,b"]).status.code(), Some(2));
    assert_eq!(smoothq(&["solve-qre", "--game", "/nonexistent/game.json"]).status.code(), Some(2));
    // zero rate for a player with several actions
    assert_eq!(smoothq(&["solve-qre", "--game", "builtin:rps", "--temps", "0,1"]).status.code(), Some(1));
}
