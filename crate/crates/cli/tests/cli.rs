//! End-to-end checks of the `nlbandit` binary.

use std::path::Path;
use std::process::{Command, Output};

use nlbandit::{ModelKind, ResponseModel};

fn nlbandit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbandit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The rate in a `season N: apply X lb N/ac` line.
fn recommended_arm(o: &Output) -> f64 {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("season ")).expect("recommendation line");
    let after = line.split("apply ").nth(1).expect("apply");
    after.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn run_writes_outputs_for_a_short_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlbandit(
        &["run", "well_specified", "--set", "T=3", "--set", "R=2", "--set", "p_x=0.7", "--out", "res"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let res = dir.path().join("res");
    for f in ["runs.csv", "summary.json", "regret_p0.7.svg"] {
        assert!(res.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(res.join("runs.csv")).unwrap();
    // Header plus 5 policies x 2 replicates x 3 rounds.
    assert_eq!(csv.lines().count(), 1 + 5 * 2 * 3);
    assert!(stdout(&o).contains("wrote"));
}

#[test]
fn both_presets_run_with_reduced_budgets() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["well_specified.cfg", "misspecified.cfg"] {
        let o = nlbandit(&["run", preset, "--set", "T=8", "--set", "R=1", "--out", "o"], dir.path());
        assert!(o.status.success(), "{preset}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "well_specified", "--set", "policies=[\"thompson\"]"][..],
        &["run", "no_such_config.cfg"][..],
        &["run", "well_specified", "--set", "bogus_key=1"][..],
        &["frobnicate"][..],
    ] {
        let o = nlbandit(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn observe_without_a_pending_recommendation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let init = nlbandit(&["advise", "init", "--model", "quadratic_plateau", "--p-x", "0.7"], dir.path());
    assert!(init.status.success(), "{}", String::from_utf8_lossy(&init.stderr));
    let o = nlbandit(&["advise", "observe", "171.0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = nlbandit(&["advise", "next"], dir.path());
    assert!(o.status.success());
    let o = nlbandit(&["advise", "observe", "lots"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn init_refuses_to_clobber_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["advise", "init", "--model", "mitscherlich", "--p-x", "0.5"];
    assert!(nlbandit(&args, dir.path()).status.success());
    assert!(!nlbandit(&args, dir.path()).status.success());
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(nlbandit(&forced, dir.path()).status.success());
}

/// Plays `seasons` noiseless seasons against `truth` and returns every
/// recommendation, the one after the last season included.
fn transcript(dir: &Path, truth: &ResponseModel, seasons: usize) -> Vec<f64> {
    let init = nlbandit(
        &["advise", "init", "--model", "quadratic_plateau", "--p-x", "0.7", "--seed", "3"],
        dir,
    );
    assert!(init.status.success(), "{}", String::from_utf8_lossy(&init.stderr));
    let mut arms = Vec::new();
    for _ in 0..seasons {
        let arm = recommended_arm(&nlbandit(&["advise", "next"], dir));
        arms.push(arm);
        let y = truth.evaluate(arm).to_string();
        let o = nlbandit(&["advise", "observe", &y], dir);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    arms.push(recommended_arm(&nlbandit(&["advise", "next"], dir)));
    arms
}

#[test]
fn advisory_transcripts_are_reproducible() {
    let truth = ResponseModel::new(ModelKind::QuadraticPlateau, ModelKind::QuadraticPlateau.reference_truth()).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = transcript(a.path(), &truth, 6);
    assert_eq!(first, transcript(b.path(), &truth, 6));
    assert_eq!(*first.last().unwrap(), 150.0);
    let status = stdout(&nlbandit(&["advise", "status"], a.path()));
    assert!(status.contains("pending: 150 lb N/ac for season 7"), "{status}");
}
