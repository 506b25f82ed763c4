//! End-to-end tests of the `irfs` binary: preset listing, report output in
//! both formats, seed overrides, and the exit-code contract.

use std::process::Command;

fn irfs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irfs"))
}

#[test]
fn list_prints_the_catalog() {
    let out = irfs().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["honig", "lindley-mm1", "gwi-drift", "forward-backward"] {
        assert!(text.contains(name), "catalog missing {name}:\n{text}");
    }
}

#[test]
fn run_writes_json_report_and_exits_zero() {
    let dir = std::env::temp_dir().join("irfs-cli-test-json");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = irfs()
        .args(["run", "langevin-quadratic", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["experiment"], "langevin-quadratic");
    assert_eq!(report["summary"]["exit_code"], 0);
    assert!(report["results"].as_array().unwrap().len() >= 3);
    // The echoed config replays to the same deterministic results.
    let echo = report["config_echo"].as_str().unwrap();
    let replay = irfs_cli::runner::run_from_toml(echo).unwrap();
    assert_eq!(
        serde_json::to_value(&replay.results).unwrap(),
        report["results"]
    );
}

#[test]
fn run_emits_csv_when_asked() {
    let dir = std::env::temp_dir().join("irfs-cli-test-csv");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.csv");
    let out = irfs()
        .args(["run", "forward-backward", "--format", "csv", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "experiment,check,field,value");
    assert!(text.contains("forward_backward"));
    assert!(lines.count() > 10);
}

#[test]
fn seed_override_changes_the_numbers() {
    let run = |seed: &str| -> serde_json::Value {
        let dir = std::env::temp_dir().join(format!("irfs-cli-test-seed-{seed}"));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        let out = irfs()
            .args(["run", "forward-backward", "--seed", seed, "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
    };
    let a = run("7");
    let b = run("8");
    let a_again = run("7");
    assert_eq!(a["results"], a_again["results"], "same seed, same numbers");
    assert_ne!(a["results"], b["results"], "different seed, different numbers");
}

#[test]
fn malformed_config_exits_above_two() {
    let dir = std::env::temp_dir().join("irfs-cli-test-bad");
    std::fs::create_dir_all(&dir).unwrap();

    // Unknown top-level field.
    let unknown = dir.join("unknown.toml");
    std::fs::write(&unknown, "[expeirment]\nname = \"x\"\n").unwrap();
    let out = irfs().args(["run"]).arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(stderr.contains("configuration error"), "stderr: {stderr}");

    // Structurally valid but meaningless budgets (zero replicas).
    let zero = dir.join("zero.toml");
    std::fs::write(
        &zero,
        r#"
[experiment]
name = "zero"

[noise]
kind = "two_point_honig"
seed = 1

[model]
family = "multiplicative"

[budgets]
replicas = 0

[[checks]]
kind = "lyapunov"
"#,
    )
    .unwrap();
    let out = irfs().args(["run"]).arg(&zero).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Missing file counts as usage error too.
    let out = irfs().args(["run", "/nonexistent/nowhere.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn failed_expectation_exits_one() {
    let dir = std::env::temp_dir().join("irfs-cli-test-fail");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("fail.toml");
    // The two-point counterexample cannot satisfy the long-run root test;
    // expecting "satisfied" must fail the run.
    std::fs::write(
        &cfg,
        r#"
[experiment]
name = "expect-wrong"

[noise]
kind = "two_point_honig"
seed = 10

[model]
family = "multiplicative"

[[checks]]
kind = "longrun"
k_max = 8
replicas = 20000
expect = "satisfied"
"#,
    )
    .unwrap();
    let out = irfs().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn inconclusive_expectation_exits_two() {
    let dir = std::env::temp_dir().join("irfs-cli-test-inc");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("inconclusive.toml");
    // The drift fit on the waiting-time recursion straddles one.
    std::fs::write(
        &cfg,
        r#"
[experiment]
name = "inconclusive-drift"

[noise]
kind = "iid"
seed = 3
value = { shape = "vector", laws = [{ law = "normal", mean = -0.5, sd = 1.0 }] }

[model]
family = "lindley"
variant = "direct"

[[checks]]
kind = "drift"
samples = 4000
"#,
    )
    .unwrap();
    let out = irfs().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn wall_clock_guard_aborts() {
    let dir = std::env::temp_dir().join("irfs-cli-test-budget");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("budget.toml");
    std::fs::write(
        &cfg,
        r#"
[experiment]
name = "budget"

[noise]
kind = "two_point_honig"
seed = 1

[model]
family = "multiplicative"

[budgets]
wall_clock_secs = 0

[[checks]]
kind = "lyapunov"
horizons = [1000000]

[[checks]]
kind = "lyapunov"
horizons = [1000000]
"#,
    )
    .unwrap();
    // A zero budget trips the guard before the first check starts.
    let out = irfs().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn exit_code_is_a_pure_function_of_outcomes() {
    use irfs_cli::checks::Outcome::{Fail, Inconclusive, Pass};
    use irfs_cli::report::exit_code;
    assert_eq!(exit_code(&[]), 0);
    assert_eq!(exit_code(&[Pass, Pass]), 0);
    assert_eq!(exit_code(&[Pass, Inconclusive]), 2);
    assert_eq!(exit_code(&[Inconclusive, Fail, Pass]), 1);
    assert_eq!(exit_code(&[Fail]), 1);
}
