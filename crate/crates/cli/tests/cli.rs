use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracbvp")).args(args).output().unwrap()
}

#[test]
fn config_echo_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = d.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"beta": 0.25, "theta": 0.3, "K": {"type": "piecewise_constant", "breaks": [0.4], "values": [1.0, 3.0]},
            "f": {"type": "polynomial", "coeffs": [1.0, 2.0]}, "method": "characterization", "mesh": {"n": 40}}"#,
    )
    .unwrap();
    let first = d.join("a");
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]).status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(first.join("report.json")).unwrap()).unwrap();
    let echo = d.join("echo.json");
    std::fs::write(&echo, serde_json::to_vec(&report["config"]).unwrap()).unwrap();
    let second = d.join("b");
    assert_eq!(run(&["solve", "--config", echo.to_str().unwrap(), "--out", second.to_str().unwrap()]).status.code(), Some(0));
    let again: serde_json::Value = serde_json::from_slice(&std::fs::read(second.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"], again["config"]);
    assert_eq!(std::fs::read(first.join("solution.csv")).unwrap(), std::fs::read(second.join("solution.csv")).unwrap());
}

#[test]
fn solution_csv_has_fixed_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": 0.3, "theta": 0.5, "K": {"type": "constant", "value": 2.0}, "output": {"samples": 11}}"#).unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(out.join("solution.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "u", "Iu"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 11);
    let u0: f64 = rows[0][1].parse().unwrap();
    assert_eq!(u0, 0.0);
}

#[test]
fn missing_config_and_bad_fields_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["solve", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["counterexample", "--beta", "1.5", "--theta", "0.5", "--out", out]).status.code(), Some(2));
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": 0.3, "theta": 0.5, "K": {"type": "constant", "value": 1.0}, "mesh": {"n": 1}}"#).unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh.n"));
}

#[test]
fn converge_needs_manufactured_source() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"beta": 0.3, "theta": 0.5, "K": {"type": "constant", "value": 1.0}}"#).unwrap();
    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
