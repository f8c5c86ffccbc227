use std::path::{Path, PathBuf};
use std::process::Command;

fn drtool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drtool"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn run_writes_trace_and_summary() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(drtool().arg("run").arg(scenario("cone_example")).arg("--out").arg(out.path())), 0);
    assert!(out.path().join("cone_example.trace.csv").is_file());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("cone_example.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["estimates"][0]["v"], serde_json::json!([-1.0, 3.0]));
}

#[test]
fn starved_budget_exits_one() {
    let out = tempfile::tempdir().unwrap();
    let mut cmd = drtool();
    cmd.arg("run").arg(scenario("cone_example")).arg("--out").arg(out.path()).args(["--max-iters", "1"]);
    assert_eq!(code(&mut cmd), 1);
}

#[test]
fn runtime_failures_exit_two() {
    assert_eq!(code(drtool().arg("verify").arg("/nonexistent/scenario.json")), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\", \"dim\": 2}").unwrap();
    let output = drtool().arg("verify").arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("bad.json:1:"));
    assert_eq!(code(drtool().arg("identities").arg(scenario("cone_example")).env("DRTOOL_SEED", "x")), 2);
}

#[test]
fn verify_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let output = drtool().current_dir(dir.path()).arg("verify").arg(scenario("halfspace_l1")).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn identities_depend_on_seed_only() {
    let run = |seed: &str| {
        let out = drtool()
            .arg("identities")
            .arg(scenario("halfspace_l1"))
            .args(["--samples", "200"])
            .env("DRTOOL_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run("3"), run("3"));
}

#[test]
fn run_all_covers_the_corpus() {
    let out = tempfile::tempdir().unwrap();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    assert_eq!(code(drtool().arg("run-all").arg(&scenarios).arg("--out").arg(out.path())), 0);
    let traces = std::fs::read_dir(out.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().to_string_lossy().ends_with(".trace.csv"))
        .count();
    assert_eq!(traces, 11);
}
