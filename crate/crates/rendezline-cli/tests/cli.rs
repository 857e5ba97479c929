//! End-to-end runs of the compiled binary: exit codes, output contents, and
//! byte-identical reruns.

use std::process::{Command, Output};

use rendezline::analysis::stage_bounds_async;
use rendezline::output::parse_csv;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rendezline"));
    // Keep the caller's environment from leaking into seed resolution.
    cmd.env_remove("RENDEZLINE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).expect("stdout is UTF-8")
}

fn stderr(output: &Output) -> &str {
    std::str::from_utf8(&output.stderr).expect("stderr is UTF-8")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn json(output: &Output) -> Value {
    serde_json::from_str(stdout(output)).expect("stdout is JSON")
}

#[test]
fn trial_reports_the_hand_traced_rendezvous() {
    // Two robots, d = r^2, forced coins HH vs TT: both walk their full
    // round-1 outward legs and touch exactly at x = d, having walked
    // 1 + 2.26 + 2.8476 each.
    let out = run(&[
        "trial", "--mode", "sync", "--n", "2", "--d", "1.5876", "--r", "1.26", "--flips",
        "1:HH", "2:TT",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["result"]["success"], Value::Bool(true));
    let position = doc["result"]["merges"][0]["position"].as_f64().unwrap();
    assert!((position - 1.5876).abs() < 1e-9, "rendezvous at {position}");
    let distance = doc["result"]["per_robot_distance"][0].as_f64().unwrap();
    assert!((distance - 6.1076).abs() < 1e-9, "robot 1 walked {distance}");
    let time = doc["result"]["rendezvous_time"].as_f64().unwrap();
    assert!((time - 6.1076).abs() < 1e-9, "rendezvous at t = {time}");
    assert_eq!(doc["config"]["mode"], "sync");
    assert!(doc["timeline"].as_array().unwrap().len() >= 8);
}

#[test]
fn async_trials_trace_delayed_starts() {
    let out = run(&["trial", "--mode", "async", "--n", "3", "--d", "4", "--r", "1.26",
        "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    let timeline = doc["timeline"].as_array().unwrap();
    let starts: Vec<f64> = timeline
        .iter()
        .filter(|e| e["event"] == "robot_started")
        .map(|e| e["time"].as_f64().unwrap())
        .collect();
    assert_eq!(starts.len(), 3);
    // Integer delays drawn from {1, ..., ceil((n-1) 2d) - 1}.
    for t in starts {
        assert!(t >= 1.0 && t < 16.0 && t.fract() == 0.0, "start at t = {t}");
    }
}

#[test]
fn exhausting_a_forced_flip_string_is_an_error() {
    let out = run(&[
        "trial", "--mode", "sync", "--n", "2", "--d", "1.5876", "--r", "1.26", "--flips",
        "1:H", "2:T",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("round"), "unexpected message: {}", stderr(&out));
}

#[test]
fn sweeps_are_byte_identical_across_reruns_and_job_counts() {
    let base = ["sweep", "--mode", "sync", "--n", "4,6", "--d", "4", "--r", "1.26",
        "--trials", "64", "--seed", "11"];
    let first = run(&base);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(first.stdout, run(&base).stdout);
    for jobs in ["1", "8"] {
        let mut args = base.to_vec();
        args.extend(["--jobs", jobs]);
        assert_eq!(first.stdout, run(&args).stdout, "--jobs {jobs} changed the table");
    }

    // --out-file writes the same bytes the pipe carries.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let mut args = base.to_vec();
    args.extend(["--out-file", path.to_str().unwrap()]);
    let filed = run(&args);
    assert_eq!(code(&filed), 0, "{}", stderr(&filed));
    assert!(filed.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), first.stdout);

    let rows = parse_csv(stdout(&first)).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].n, rows[1].n), (4, 6));
}

#[test]
fn env_seed_overrides_the_flag() {
    let base = ["sweep", "--mode", "sync", "--n", "4", "--d", "4", "--r", "1.26",
        "--trials", "32"];
    let seeded = |seed: &str| {
        let mut args = base.to_vec();
        args.extend(["--seed", seed]);
        run(&args)
    };
    let seed_1 = seeded("1");
    let seed_3 = seeded("3");
    assert_ne!(seed_1.stdout, seed_3.stdout, "different seeds gave equal tables");

    let mut overridden = bin();
    overridden.args(base).args(["--seed", "3"]).env("RENDEZLINE_SEED", "1");
    assert_eq!(overridden.output().unwrap().stdout, seed_1.stdout);

    // Hex spelling of the same seed.
    let mut hex = bin();
    hex.args(base).env("RENDEZLINE_SEED", "0x1");
    assert_eq!(hex.output().unwrap().stdout, seed_1.stdout);

    let mut garbage = bin();
    garbage.args(base).env("RENDEZLINE_SEED", "elephant");
    let out = garbage.output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("RENDEZLINE_SEED"));
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let out = run(&["sweep", "--mode", "sync", "--n", "4..16", "--d", "4..16", "--r",
        "1.26", "--trials", "5", "--seed", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = parse_csv(stdout(&out)).unwrap();
    assert_eq!(rows.len(), 13 * 13);
    // n-major, then d, every row carrying its cell coordinates.
    assert_eq!((rows[0].n, rows[0].d), (4, 4.0));
    assert_eq!((rows[12].n, rows[12].d), (4, 16.0));
    assert_eq!((rows[168].n, rows[168].d), (16, 16.0));
}

#[test]
fn sweep_json_document_carries_config_and_rows() {
    let out = run(&["sweep", "--mode", "sync,async", "--n", "4", "--d", "4", "--r",
        "1.26", "--trials", "8", "--seed", "1", "--out", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["config"]["base_seed"], 1);
    assert_eq!(doc["config"]["trials_per_cell"], 8);
    assert_eq!(doc["config"]["n_values"], serde_json::json!([4]));
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["key"]["mode"], "sync");
    assert_eq!(rows[1]["key"]["mode"], "async");
}

#[test]
fn config_file_supplies_flags_and_explicit_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.conf");
    let file = path.to_str().unwrap();
    std::fs::write(&path, "mode = sync\nn = 4\nd = 4\nr = 1.26\ntrials = 16\nseed = 9\n")
        .unwrap();

    let from_file = run(&["sweep", "--config", file]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    let rows = parse_csv(stdout(&from_file)).unwrap();
    assert_eq!(rows[0].trials, 16);

    let overridden = run(&["sweep", "--config", file, "--trials", "8"]);
    let rows = parse_csv(stdout(&overridden)).unwrap();
    assert_eq!(rows[0].trials, 8);

    // A misspelled key is an argument error, not a silently ignored line.
    std::fs::write(&path, "mode = sync\nn = 4\nd = 4\nr = 1.26\ntrails = 16\n").unwrap();
    let bad = run(&["sweep", "--config", file]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("trails"), "unexpected message: {}", stderr(&bad));
}

#[test]
fn bounds_prints_stage_values_and_grid_verdicts() {
    let out = run(&["bounds", "--mode", "async", "--n", "8", "--k", "4", "--r", "1.26"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let value = |label: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(label))
            .unwrap_or_else(|| panic!("no {label} line in:\n{text}"))
            .split_whitespace()
            .last()
            .unwrap()
            .parse()
            .unwrap()
    };
    let stages = stage_bounds_async(8, 4, 1.26).unwrap();
    assert!((value("stage1") - stages.stage1).abs() <= 1e-8 * stages.stage1);
    assert!((value("stage2") - stages.stage2).abs() <= 1e-8 * stages.stage2);
    assert!((value("stage3") - stages.stage3).abs() <= 1e-8 * stages.stage3);
    assert!((value("total") - stages.total()).abs() <= 1e-8 * stages.total());
    assert!(text.contains("reach_grid") && text.contains("meet_grid"));
    assert_eq!(text.matches("all hold").count(), 2, "grid failures in:\n{text}");

    let trimmed = run(&["bounds", "--mode", "sync", "--n", "8", "--k", "4", "--r",
        "1.26", "--no-grids"]);
    assert!(!stdout(&trimmed).contains("reach_grid"));
}

#[test]
fn bounds_rejects_radii_at_or_past_the_pole() {
    for r in ["1.4143", "1.5", "2"] {
        let out = run(&["bounds", "--mode", "sync", "--n", "8", "--k", "4", "--r", r]);
        assert_eq!(code(&out), 1, "r = {r} was accepted");
        assert!(stderr(&out).contains("pole"), "unexpected message: {}", stderr(&out));
    }
}

#[test]
fn argument_errors_exit_one() {
    let cases: &[&[&str]] = &[
        // Reversed range.
        &["sweep", "--mode", "sync", "--n", "5..4", "--d", "4", "--r", "1.26"],
        // Fractional step for the integer axis.
        &["sweep", "--mode", "sync", "--n", "4..8..0.5", "--d", "4", "--r", "1.26"],
        // Unknown variant.
        &["sweep", "--mode", "walk", "--n", "4", "--d", "4", "--r", "1.26"],
        // Unknown flag.
        &["sweep", "--wat"],
        // Malformed flip spec.
        &["trial", "--mode", "sync", "--n", "2", "--d", "1.5876", "--r", "1.26",
            "--flips", "1:HX"],
        // d too small for any valid decomposition.
        &["trial", "--mode", "sync", "--n", "2", "--d", "1.1", "--r", "1.26"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(code(&out), 1, "{args:?} exited {}", code(&out));
        assert!(!stderr(&out).is_empty(), "{args:?} said nothing on stderr");
    }

    // A missing axis names the flag that would supply it.
    let out = run(&["sweep", "--mode", "sync", "--d", "4", "--r", "1.26"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--n"), "unexpected message: {}", stderr(&out));

    // Help is not an error.
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("sweep"));
}

/// Full acceptance suite through the binary: several minutes of Monte
/// Carlo, so opt in with --ignored. The library's `acceptance` integration
/// test covers the same suite with one assertion per criterion.
#[test]
#[ignore = "runs the full acceptance suite"]
fn verify_prints_one_line_per_criterion_and_sets_the_exit_code() {
    let out = run(&["verify"]);
    let text = stdout(&out);
    for id in 1..=9 {
        assert!(text.contains(&format!("] {id}. ")), "criterion {id} missing:\n{text}");
    }
    let failed = text.lines().filter(|l| l.starts_with("[FAIL]")).count();
    assert_eq!(code(&out), if failed == 0 { 0 } else { 2 });
}
