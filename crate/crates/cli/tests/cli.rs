use std::fs;
use std::path::Path;
use std::process::Command;

fn vbpg(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_vbpg")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn missing_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, msg) = vbpg(&["run", "--config", "/nonexistent/cfg.json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{msg}");
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", "{\"problem\": {\"corpus\": \"QUAD_SC\"},\n  \"eps\": }");
    let (code, msg) = vbpg(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("line 2"), "{msg}");
}

#[test]
fn step_outside_descent_regime_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"problem": {"corpus": "QUAD_SC(2,10)"}, "eps": 0.5}"#);
    let (code, msg) = vbpg(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(msg.contains("m/L"), "{msg}");
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"problem": {"corpus": "QUAD_L1"}, "max_iters": 50, "seed": 3}"#);
    let out = dir.path().join("out");
    let (code, msg) = vbpg(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,F,step_norm,gap,envelope,residual_bound\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["descent_violations"].as_array().unwrap().len(), 0);
}

#[test]
fn same_seed_gives_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"problem": {"corpus": "TWO_WELL"}, "max_iters": 80}"#);
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let (code, msg) = vbpg(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0, "{msg}");
        fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(run("a", "7"), run("b", "7"));
    assert_ne!(run("a", "7"), run("c", "8"));
}

#[test]
fn unavailable_oracle_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"problem": {"corpus": "QUAD_L1"},
            "diagnostics": [{"condition": "LEVEL_SET_SUBDIFF", "oracle": {"kind": "analytic"}, "name": "needs_projection"},
                            {"condition": "KL", "name": "kl"}]}"#,
    );
    let out = dir.path().join("out");
    let (code, msg) = vbpg(&["certify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{msg}");
    assert!(msg.contains("needs_projection"), "{msg}");
    // The satisfiable request is still written.
    assert!(out.join("certificates/kl.json").exists());
}

#[test]
fn refuted_condition_is_a_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"problem": {"corpus": "EX_5_2"},
            "diagnostics": [{"condition": "KL", "exponent": 0.5, "sequence": {"witness": "EX_5_2"}, "name": "kl_staircase"}]}"#,
    );
    let out = dir.path().join("out");
    let (code, msg) = vbpg(&["certify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{msg}");
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificates/kl_staircase.json")).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "REFUTED");
}

#[test]
fn raw_function_has_no_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"problem": {"corpus": "EX_5_1"}}"#);
    let (code, msg) = vbpg(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 4, "{msg}");
}
