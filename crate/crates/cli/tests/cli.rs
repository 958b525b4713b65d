use std::path::Path;
use std::process::{Command, Output};

fn examsched(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_examsched"))
        .args(args)
        .current_dir(dir)
        .env_remove("EXAMSCHED_BACKEND")
        .output()
        .expect("spawn examsched")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = examsched(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&["synth", "--exams", "40", "--students", "400", "--seed", "7", "--out", "enr.csv"], dir);
}

const FAST: [&str; 6] = ["--days", "4", "--node-limit", "300", "--time-limit-postprocess", "2"];

#[test]
fn run_writes_artifacts_and_evaluate_agrees() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let mut args = vec!["run", "-e", "enr.csv", "--method", "gtsp", "--out-dir", "out"];
    args.extend(FAST);
    ok(&args, dir.path());
    for f in ["schedule.csv", "metrics.json", "blocks.csv", "sequence.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f} missing");
    }
    let printed = ok(&["evaluate", "-e", "enr.csv", "--days", "4", "--schedule", "out/schedule.csv"], dir.path());
    let stored = std::fs::read_to_string(dir.path().join("out/metrics.json")).unwrap();
    let a: serde_json::Value = serde_json::from_str(&printed).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stored).unwrap();
    assert_eq!(a["conflicts"], b["conflicts"]);
    assert_eq!(a["weighted_score"], b["weighted_score"]);
}

#[test]
fn repeated_runs_give_identical_schedules() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for out in ["a", "b"] {
        let mut args = vec!["run", "-e", "enr.csv", "--method", "hybrid", "--layer-size", "600", "--out-dir", out];
        args.extend(FAST);
        ok(&args, dir.path());
    }
    let a = std::fs::read(dir.path().join("a/schedule.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/schedule.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn staged_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    ok(&["assign", "-e", "enr.csv", "--days", "4", "--node-limit", "300", "--out", "blocks.csv"], dir.path());
    ok(
        &["sequence", "-e", "enr.csv", "--days", "4", "--node-limit", "300", "--blocks-file", "blocks.csv", "--out-dir", "seq"],
        dir.path(),
    );
    let mut args = vec!["postprocess", "-e", "enr.csv", "--schedule", "seq/schedule.csv", "--out", "pp.csv"];
    args.extend(FAST);
    ok(&args, dir.path());
    ok(&["report", "-e", "enr.csv", "--days", "4", "--schedule", "pp.csv", "--out-dir", "rep"], dir.path());
    let svg = std::fs::read_to_string(dir.path().join("rep/schedule.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="bar""#).count(), 24);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let mut args = vec!["sweep", "-e", "enr.csv", "--methods", "gts,gtsp", "--blocks-list", "10,12", "--out", "sweep.csv"];
    args.extend(FAST);
    ok(&args, dir.path());
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = examsched(&["run", "-e", "nope.csv", "--out-dir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_backend_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = examsched(&["run", "-e", "enr.csv", "--backend", "cplex", "--out-dir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn impossible_zero_conflict_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = examsched(
        &["run", "-e", "enr.csv", "--days", "1", "--slots-per-day", "2", "--method", "zero-gtsp", "--node-limit", "200", "--out-dir", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nottingham_on_toronto_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.crs"), "0001 3\n0002 2\n0003 2\n0004 1\n").unwrap();
    std::fs::write(dir.path().join("t.stu"), "0001 0002\n0001 0003\n0001 0002 0004\n0003\n").unwrap();
    let out = ok(
        &[
            "nottingham", "--crs", "t.crs", "--stu", "t.stu", "--slots", "4", "--slots-per-day", "2", "--node-limit", "500",
            "--time-limit-postprocess", "1", "--out-dir", "n",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["exams"], 4);
    assert!(dir.path().join("n/schedule.csv").exists());
}
