use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hsel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn generate_train_and_evaluate_knapsack() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hsel(
        &["gen-knapsack", "--count", "12", "--items", "15", "--range", "50", "--seed", "3", "--out", "kp"],
        d,
    ));
    assert_eq!(fs::read_dir(d.join("kp")).unwrap().count(), 12);

    let oracle = ok(&hsel(&["oracle", "--domain", "knapsack", "--budget", "500", "--out", "base.csv", "kp"], d));
    assert!(oracle.contains("oracle"));
    assert_eq!(fs::read_to_string(d.join("base.csv")).unwrap().lines().count(), 6);

    ok(&hsel(
        &["train", "--domain", "knapsack", "--scenario", "K+L", "--cycles", "5", "--budget", "500", "--out", "tr", "kp"],
        d,
    ));
    for f in ["selector.json", "setup.json", "history.csv"] {
        assert!(d.join("tr").join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(d.join("tr/history.csv")).unwrap().lines().count(), 7);

    let eval = ok(&hsel(
        &[
            "evaluate", "--domain", "knapsack", "--selector", "tr/selector.json", "--setup", "tr/setup.json",
            "--budget", "500", "--out", "eval.csv", "kp",
        ],
        d,
    ));
    assert!(eval.contains("instances=12"));
    assert_eq!(fs::read_to_string(d.join("eval.csv")).unwrap().lines().count(), 13);
}

#[test]
fn training_is_reproducible_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p.json"), "[[10,1,1,1,1,1,1,1,1,1,1,1,1],[10,9,8,1,1,2,2,1,1,1,1,1,1],[10,3,4,2,10,10,1,1,1,1,1,1,1]]")
        .unwrap();
    for out in ["a", "b"] {
        ok(&hsel(&["train", "--domain", "partition", "--seed", "9", "--cycles", "30", "--out", out, "p.json"], d));
    }
    assert_eq!(
        fs::read(d.join("a/selector.json")).unwrap(),
        fs::read(d.join("b/selector.json")).unwrap()
    );
}

#[test]
fn experiment_writes_the_report_tree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hsel(
        &["gen-csp", "--count", "16", "--variables", "8", "--domain-size", "4", "--seed", "1", "--out", "data/csp"],
        d,
    ));
    fs::write(
        d.join("data/exp.toml"),
        "domain = \"csp\"\ninstances = [\"csp\"]\ntrain_count = 4\nscenarios = [\"O\", \"S\"]\nrepetitions = 3\nvat = true\n\n[ga]\ncycles = 4\npopulation_size = 6\n",
    )
    .unwrap();
    let out = ok(&hsel(&["experiment", "--config", "data/exp.toml", "--seed", "5", "--out", "rep"], d));
    assert!(out.contains("S vs O"));
    for f in ["runs.csv", "summary.csv", "pvalues.csv", "baselines.csv", "report.md", "vat/O.pgm", "vat/S.pgm", "selectors/S_02.json"] {
        assert!(d.join("rep").join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(d.join("rep/runs.csv")).unwrap().lines().count(), 7);

    ok(&hsel(&["vat", "--domain", "csp", "--scenarios", "O,K+S", "--out", "v", "data/csp"], d));
    assert!(d.join("v/K_S.pgm").exists());
}

#[test]
fn errors_exit_nonzero_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.txt"), "3\n10\n1 2\n").unwrap();
    let out = hsel(&["oracle", "--domain", "knapsack", "bad.txt"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt"));

    let out = hsel(&["train", "--domain", "chess", "x"], d);
    assert!(!out.status.success());
    let out = hsel(&["train", "--domain", "csp", "--scenario", "Q", "x"], d);
    assert!(!out.status.success());
}
