//! Black-box tests of the installed binary: every invocation goes through
//! `std::process::Command` against the real executable, checking output
//! text, file side effects, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use threshcal_core::{evaluate_thresholds, load_scored_triples, load_thresholds};

const TOY: &str =
    "h1\tr1\tt1\t0.9\t1\nh2\tr1\tt2\t-0.7\t0\nh3\tr2\tt3\t0.3\t1\nh4\tr2\tt4\t-0.1\t0\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_threshcal"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn calibrate_local_acc_writes_sorted_threshold_file_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.tsv", TOY);
    let out_path = dir.path().join("thr.tsv");
    let run = || {
        bin()
            .args(["calibrate"])
            .arg(&input)
            .arg("--out")
            .arg(&out_path)
            .args(["--method", "local-acc"])
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success(), "stderr: {}", stderr_of(&first));
    let first_bytes = std::fs::read(&out_path).unwrap();
    assert_eq!(
        String::from_utf8(first_bytes.clone()).unwrap(),
        "#default\t0\nr1\t0.9\nr2\t0.3\n"
    );
    let second = run();
    assert!(second.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), first_bytes);
}

#[test]
fn calibrate_then_evaluate_matches_the_in_process_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.tsv", TOY);
    let thr_path = dir.path().join("thr.tsv");
    let cal = bin()
        .args(["calibrate"])
        .arg(&input)
        .arg("--out")
        .arg(&thr_path)
        .output()
        .unwrap();
    assert!(cal.status.success(), "stderr: {}", stderr_of(&cal));

    let eval = bin()
        .args(["evaluate"])
        .arg(&thr_path)
        .arg(&input)
        .output()
        .unwrap();
    assert!(eval.status.success(), "stderr: {}", stderr_of(&eval));

    let map = load_thresholds(&thr_path).unwrap();
    let test = load_scored_triples(&input).unwrap();
    let metrics = evaluate_thresholds(&map, &test).unwrap();
    let expected = format!(
        "Acc {:.1} F1 {:.1}\n",
        100.0 * metrics.accuracy,
        100.0 * metrics.f1
    );
    assert_eq!(stdout_of(&eval), expected);
    // The toy relations are cleanly separated, so this is also the
    // perfect-threshold case.
    assert_eq!(stdout_of(&eval), "Acc 100.0 F1 100.0\n");
}

#[test]
fn missing_input_file_exits_one_and_names_the_path() {
    let out = bin()
        .args(["calibrate", "/no/such/file.tsv", "--out", "/tmp/unused.tsv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("/no/such/file.tsv"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.tsv", TOY);
    let out = bin()
        .args(["calibrate"])
        .arg(&input)
        .args(["--out", "x.tsv", "--bogus-flag", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn help_exits_zero_on_every_subcommand() {
    for sub in ["calibrate", "evaluate", "sweep", "synth", "inspect"] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{sub} --help failed");
        assert!(stdout_of(&out).contains("--help"));
    }
    let top = bin().arg("--help").output().unwrap();
    assert_eq!(top.status.code(), Some(0));
}

#[test]
fn inspect_prints_counts_and_reduced_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "toy.tsv", TOY);
    let out = bin().args(["inspect"]).arg(&input).output().unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("triples: 4"), "{text}");
    assert!(text.contains("relations: 2"), "{text}");
    assert!(
        text.contains("labeled: 4 (2 positive, 2 negative)"),
        "{text}"
    );
    assert!(text.contains("unlabeled: 0"), "{text}");
    assert!(text.contains("positive:negative ratio: 1:1"), "{text}");
}

#[test]
fn inspect_handles_an_empty_file_with_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.tsv", "");
    let out = bin().args(["inspect"]).arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("triples: 0"), "{text}");
    assert!(text.contains("positive:negative ratio: 0:0"), "{text}");
}

#[test]
fn evaluate_falls_back_to_the_default_threshold_for_unseen_relations() {
    let dir = tempfile::tempdir().unwrap();
    // Thresholds only know r1; the test file only contains r2. With the
    // default at 0 every positive-scored triple is accepted.
    let thr = write(dir.path(), "thr.tsv", "#default\t0\nr1\t5\n");
    let test = write(
        dir.path(),
        "test.tsv",
        "a\tr2\tb\t1.5\t1\nc\tr2\td\t-0.5\t0\n",
    );
    let out = bin()
        .args(["evaluate"])
        .arg(&thr)
        .arg(&test)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "Acc 100.0 F1 100.0\n");
}

#[test]
fn malformed_threshold_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let thr = write(dir.path(), "thr.tsv", "not a threshold file\n");
    let test = write(dir.path(), "test.tsv", TOY);
    let out = bin()
        .args(["evaluate"])
        .arg(&thr)
        .arg(&test)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_and_sweep_produce_a_report_and_markdown_summary() {
    let dir = tempfile::tempdir().unwrap();
    let calib = dir.path().join("calib.tsv");
    let test = dir.path().join("test.tsv");
    let synth = bin()
        .args(["synth", "--relations", "3", "--pos", "15", "--neg", "15"])
        .arg("--calib-out")
        .arg(&calib)
        .arg("--test-out")
        .arg(&test)
        .output()
        .unwrap();
    assert!(synth.status.success(), "stderr: {}", stderr_of(&synth));
    assert_eq!(load_scored_triples(&calib).unwrap().len(), 90);

    let cfg = write(
        dir.path(),
        "sweep.cfg",
        "budgets = 2, 8\nrepeats = 2\nmethods = actc-lr-rndm, local-acc\nn_values = 15\n",
    );
    let report = dir.path().join("report.csv");
    let sweep = bin()
        .args(["sweep"])
        .arg("--config")
        .arg(&cfg)
        .arg("--calib")
        .arg(&calib)
        .arg("--test")
        .arg(&test)
        .arg("--out")
        .arg(&report)
        .args(["--format", "md"])
        .env("THRESHCAL_THREADS", "1")
        .output()
        .unwrap();
    assert!(sweep.status.success(), "stderr: {}", stderr_of(&sweep));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("strategy,budget,repeats,acc_mean,acc_sem,f1_mean,f1_sem,n,warnings\n"));
    assert_eq!(
        csv.lines().count(),
        1 + 4,
        "header plus 2 methods x 2 budgets"
    );
    let text = stdout_of(&sweep);
    assert!(text.contains("| Method | Acc (%) | F1 (%) |"), "{text}");
    assert!(text.contains("| actc-lr-rndm |"), "{text}");
}

#[test]
fn default_thresholds_on_signal_free_data_score_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let calib = dir.path().join("calib.tsv");
    let test = dir.path().join("test.tsv");
    // Identical class means: scores carry no information, so the default
    // cut at zero decides every triple by coin-flip noise.
    let synth = bin()
        .args([
            "synth",
            "--relations",
            "4",
            "--pos",
            "50",
            "--neg",
            "50",
            "--mu-pos",
            "0",
            "--mu-neg",
            "0",
            "--seed",
            "9",
        ])
        .arg("--calib-out")
        .arg(&calib)
        .arg("--test-out")
        .arg(&test)
        .output()
        .unwrap();
    assert!(synth.status.success(), "stderr: {}", stderr_of(&synth));

    let thr = write(dir.path(), "thr.tsv", "#default\t0\n");
    let out = bin()
        .args(["evaluate"])
        .arg(&thr)
        .arg(&test)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let acc: f64 = text
        .split_whitespace()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("unexpected output {text:?}"));
    assert!(
        (45.0..=55.0).contains(&acc),
        "accuracy {acc} not near chance"
    );
}
