use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn edag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edag")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const CHAIN: &str = r#"{
  "alpha": 3.0, "deadline": 1.5,
  "speeds": {"kind": "discrete", "levels": [1.0, 2.0]},
  "tasks": [{"id": "a", "weight": 1.0}, {"id": "b", "weight": 1.0}],
  "edges": [["a", "b"]]
}"#;

#[test]
fn solve_reports_energy_and_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "chain.json", CHAIN);
    let out = edag(&["solve", "--instance", &inst, "--algo", "ilp-d-speed"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "Optimal");
    assert_eq!(report["energy"], 5.0);
    let norm = report["normalized_energy"].as_f64().unwrap();
    assert!((norm - 1.40625).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tight = write(dir.path(), "tight.json", &CHAIN.replace("\"deadline\": 1.5", "\"deadline\": 0.5"));
    assert_eq!(edag(&["solve", "--instance", &tight, "--algo", "ilp-d-speed"]).status.code(), Some(2));

    let inst = write(dir.path(), "chain.json", CHAIN);
    // continuous algorithm on a discrete instance
    assert_eq!(edag(&["solve", "--instance", &inst, "--algo", "cvx-speed"]).status.code(), Some(4));
    // scheduling algorithm without cores
    assert_eq!(edag(&["solve", "--instance", &inst, "--algo", "apx-d-sched"]).status.code(), Some(4));
    assert_eq!(edag(&["solve", "--instance", &inst, "--algo", "nope"]).status.code(), Some(4));
    assert_eq!(edag(&["solve", "--instance", "/nonexistent.json", "--algo", "cvx-speed"]).status.code(), Some(4));
}

#[test]
fn mapped_instance_rejects_scheduling_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let mapped = CHAIN
        .replace(r#""weight": 1.0}, {"#, r#""weight": 1.0, "core": 0}, {"#)
        .replace(r#""weight": 1.0}]"#, r#""weight": 1.0, "core": 0}]"#)
        .replace("\"deadline\": 1.5,", "\"deadline\": 1.5, \"cores\": 1,");
    let inst = write(dir.path(), "mapped.json", &mapped);
    assert_eq!(edag(&["solve", "--instance", &inst, "--algo", "apx-d-sched"]).status.code(), Some(4));
    assert_eq!(edag(&["solve", "--instance", &inst, "--algo", "ilp-d-speed"]).status.code(), Some(0));
}

#[test]
fn generate_solve_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.json").to_string_lossy().into_owned();
    let sched = dir.path().join("s.json").to_string_lossy().into_owned();
    let gen = edag(&["generate", "--family", "layered-dag", "--n", "12", "--seed", "3", "--slack", "3", "--out", &inst]);
    assert_eq!(gen.status.code(), Some(0));
    let solve = edag(&["solve", "--instance", &inst, "--algo", "apx-d-sched", "--cores", "3", "--schedule-out", &sched]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    let ok = edag(&["validate", "--instance", &inst, "--schedule", &sched]);
    assert_eq!(ok.status.code(), Some(0));

    let mut s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sched).unwrap()).unwrap();
    s["slots"][0]["speed"] = 1.3.into();
    fs::write(&sched, s.to_string()).unwrap();
    let bad = edag(&["validate", "--instance", &inst, "--schedule", &sched]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("IneligibleSpeed"));
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json").to_string_lossy().into_owned();
    let b = dir.path().join("b.json").to_string_lossy().into_owned();
    for p in [&a, &b] {
        assert_eq!(edag(&["generate", "--preset", "genome", "--n", "50", "--seed", "9", "--out", p]).status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"families": ["sp-random"], "sizes": [6], "seeds": [1, 2], "algorithms": ["apx-d-speed", "apx-d-sched"], "cores": [1, 2], "slack": 3.0}"#,
    );
    let csv = dir.path().join("out.csv").to_string_lossy().into_owned();
    assert_eq!(edag(&["sweep", "--config", &cfg, "--out", &csv]).status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("instance_id,family,n,seed,algorithm,cores,status"));
    // 2 seeds x (1 speed-only row + 2 scheduling rows)
    assert_eq!(lines.count(), 6);

    let empty = write(dir.path(), "empty.json", r#"{"families": [], "sizes": [6], "seeds": [1], "algorithms": ["apx-d-speed"]}"#);
    assert_eq!(edag(&["sweep", "--config", &empty, "--out", &csv]).status.code(), Some(4));
}

#[test]
fn export_lp_for_both_classes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "chain.json", CHAIN);
    let lp = dir.path().join("m.lp").to_string_lossy().into_owned();
    assert_eq!(edag(&["export-lp", "--instance", &inst, "--out", &lp]).status.code(), Some(0));
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.contains("prec_0_1:") && text.ends_with("End\n"));

    let sched = write(dir.path(), "s.json", &CHAIN.replace("\"deadline\": 1.5,", "\"deadline\": 1.5, \"cores\": 2,"));
    assert_eq!(edag(&["export-lp", "--instance", &sched, "--out", &lp]).status.code(), Some(0));
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.contains("seq_0_1:") && text.contains("edge_0_1:") && text.contains("share_0_1_1:"));

    let cont = write(dir.path(), "c.json", &CHAIN.replace(r#"{"kind": "discrete", "levels": [1.0, 2.0]}"#, r#"{"kind": "continuous", "min": 0.5, "max": 2.0}"#));
    assert_eq!(edag(&["export-lp", "--instance", &cont, "--out", &lp]).status.code(), Some(4));
}
