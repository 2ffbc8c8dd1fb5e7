use std::path::Path;
use std::process::{Command, Output};

fn qsrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsrs")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn demo_sparsity_booth() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsrs(&["demo-sparsity", "booth", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("6 significant coefficients"));
    let csv = std::fs::read_to_string(dir.path().join("sparsity_booth.csv")).unwrap();
    assert!(csv.starts_with("rank,atom,coefficient,significant"));
}

#[test]
fn demo_sparsity_other_targets() {
    assert!(stdout(&qsrs(&["demo-sparsity", "chebyshev-t5", "--atoms", "10"])).starts_with("1 significant coefficients"));
    assert!(stdout(&qsrs(&["demo-sparsity", "zero"])).starts_with("0 significant coefficients"));
    assert_eq!(qsrs(&["demo-sparsity", "rosenbrock"]).status.code(), Some(1));
}

#[test]
fn optimize_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "problem = \"cubic\"\n[ga]\nsubpopulation_size = 4\ngenerations = 2\n");
    let out = dir.path().join("out");
    let o = qsrs(&["optimize", "--config", &cfg, "--seed", "5", "--parallel", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("sampling points per iteration: 30, basis functions: 90"));
    assert!(text.contains("seed 5:"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seeds"], serde_json::json!([5]));
    assert_eq!(json["config"]["ga"]["parallel"], serde_json::json!(2));
    assert!(out.join("summary.csv").exists());
    assert!(out.join("trace_seed5.csv").exists());
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "problem = \"cubic\"\n[ga]\nislandz = 2\n");
    let o = qsrs(&["optimize", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("islandz"));
    assert_eq!(qsrs(&["optimize"]).status.code(), Some(1));
    assert_eq!(qsrs(&["optimize", "--problem", "no-such-problem"]).status.code(), Some(1));
    assert_eq!(qsrs(&["optimize", "--problem", "cubic", "--parallel", "0"]).status.code(), Some(1));
    assert_eq!(qsrs(&["validate", "--problem", "cubic", "--at", "5"]).status.code(), Some(1));
    assert_eq!(qsrs(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn runtime_failure_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "nan.toml",
        "name = \"nan\"\nvariables = [\"x\"]\nlower = [0.0]\nupper = [1.0]\nwidths = [0.1]\nobjective = \"(x - x) / (x - x)\"\n",
    );
    let o = qsrs(&["optimize", "--problem", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite"));
}

#[test]
fn validate_cubic() {
    let o = qsrs(&["validate", "--problem", "cubic", "--at", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("f"), "{text}");
    assert!(text.contains("[-3.000000e0, 3.000000e0]"), "{text}");
}

#[test]
fn check_quick_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = qsrs(&["check", "--out", dir.path().to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    for id in [1, 2, 3, 6, 7, 8] {
        assert!(text.contains(&format!("criterion {id}: PASS")), "{text}");
    }
    assert!(text.contains("6 of 6 criteria passed"));
    assert!(dir.path().join("check.json").exists());
}
