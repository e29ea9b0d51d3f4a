//! End-to-end tests of the command line binary: exit codes, output formats,
//! determinism of structured output, and config file handling.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn berwald(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_berwald"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

#[test]
fn check_battery_passes_and_json_is_byte_deterministic() {
    let args = [
        "check",
        "--scenario",
        "klein_log_shift",
        "--seed",
        "11",
        "--count",
        "3",
        "--format",
        "json",
    ];
    let first = berwald(&args);
    let second = berwald(&args);
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_text(&first));
    assert_eq!(
        first.stdout, second.stdout,
        "same seed and config should give identical bytes"
    );

    let doc: Value = serde_json::from_str(&stdout_text(&first)).expect("valid json");
    assert_eq!(doc["command"], "check");
    assert_eq!(doc["run"]["scenario"], "klein_log_shift");
    assert_eq!(doc["run"]["points"]["rng"], "chacha8");
    assert_eq!(doc["summary"]["failed"].as_u64(), Some(0));
    let reports = doc["reports"].as_array().expect("reports array");
    assert_eq!(reports.len(), 3 * 8, "full battery at each point");
}

#[test]
fn degenerate_scenario_fails_the_battery_but_skips_cleanly_when_restricted() {
    let full = berwald(&[
        "check",
        "--scenario",
        "klein_log_ratio",
        "--seed",
        "4",
        "--count",
        "2",
    ]);
    assert_eq!(
        exit_code(&full),
        1,
        "nondegeneracy must fail on the degenerate transform"
    );

    let restricted = berwald(&[
        "check",
        "--scenario",
        "klein_log_ratio",
        "--seed",
        "4",
        "--count",
        "2",
        "--check",
        "master_equivalence",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&restricted), 0, "skips are not failures");
    let body = stdout_text(&restricted);
    let mut lines = body.lines();
    assert_eq!(
        lines.next(),
        Some("check,x1,x2,y1,y2,verdict,max_residual,detail")
    );
    for line in lines {
        assert!(
            line.contains(",skip,"),
            "every report should be a skip: {line}"
        );
    }
}

#[test]
fn usage_and_config_errors_exit_with_code_two() {
    let unknown = berwald(&["check", "--scenario", "nosuch"]);
    assert_eq!(exit_code(&unknown), 2);
    assert!(stderr_text(&unknown).contains("unknown scenario"));

    let bad_tol = berwald(&[
        "check",
        "--scenario",
        "klein_constant",
        "--tol",
        "nosuch=1e-9",
    ]);
    assert_eq!(exit_code(&bad_tol), 2);

    let bad_point = berwald(&[
        "check",
        "--scenario",
        "klein_constant",
        "--point",
        "0.1,0.2,1.0",
    ]);
    assert_eq!(exit_code(&bad_point), 2);

    let metric_without_factor = berwald(&["check", "--metric", "klein"]);
    assert_eq!(exit_code(&metric_without_factor), 2);

    let conflicting = berwald(&[
        "check",
        "--scenario",
        "klein_constant",
        "--metric",
        "klein",
        "--factor",
        "constant",
    ]);
    assert_eq!(exit_code(&conflicting), 2);
}

#[test]
fn dotted_tolerance_flags_are_accepted_in_both_spellings() {
    let base = [
        "check",
        "--scenario",
        "klein_log_shift",
        "--seed",
        "2",
        "--count",
        "1",
        "--check",
        "master_equivalence",
    ];

    let mut with_equals = base.to_vec();
    with_equals.push("--tol.master_equivalence=1e-22");
    let run = berwald(&with_equals);
    assert_eq!(
        exit_code(&run),
        1,
        "an impossibly tight tolerance must fail the check"
    );

    let mut with_space = base.to_vec();
    with_space.extend(["--tol.master_equivalence", "1e-22"]);
    let run = berwald(&with_space);
    assert_eq!(exit_code(&run), 1);

    let mut relaxed = base.to_vec();
    relaxed.push("--tol.master_equivalence=1e-6");
    let run = berwald(&relaxed);
    assert_eq!(exit_code(&run), 0);
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    writeln!(
        file,
        "scenario = \"klein_constant\"\n\
         seed = 5\n\
         count = 4\n\
         format = \"csv\"\n\
         checks = [\"special_cases\", \"spray_invariance\"]\n\
         \n\
         [tolerances]\n\
         special_cases = 1e-10"
    )
    .expect("write config");
    let path = file.path().to_str().expect("utf-8 path");

    let run = berwald(&[
        "check", "--config", path, "--format", "json", "--count", "2",
    ]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr_text(&run));
    let doc: Value = serde_json::from_str(&stdout_text(&run)).expect("valid json");
    assert_eq!(doc["run"]["scenario"], "klein_constant");
    assert_eq!(
        doc["run"]["points"]["count"].as_u64(),
        Some(2),
        "flag count overrides the file"
    );
    assert_eq!(doc["run"]["points"]["seed"].as_u64(), Some(5));
    assert_eq!(doc["checks"].as_array().map(Vec::len), Some(2));
    assert_eq!(doc["tolerances"]["special_cases"].as_f64(), Some(1e-10));
    assert_eq!(doc["reports"].as_array().map(Vec::len), Some(4));
}

#[test]
fn explicit_points_bypass_sampling() {
    let run = berwald(&[
        "check",
        "--scenario",
        "klein_log_shift",
        "--point",
        "0.1,0.2,1.0,0.5",
        "--point",
        "-0.2,0.1,0.5,-1.0",
        "--check",
        "identities",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&run), 0);
    let doc: Value = serde_json::from_str(&stdout_text(&run)).expect("valid json");
    assert_eq!(doc["run"]["points"]["explicit"].as_u64(), Some(2));
    assert!(doc["run"]["points"]["rng"].is_null());
}

#[test]
fn inspect_reports_transform_failure_without_failing_the_run() {
    let run = berwald(&[
        "inspect",
        "--scenario",
        "klein_log_ratio",
        "--point",
        "0.1,0.2,1.0,0.5",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&run), 0, "inspect never fails on geometry");
    let body = stdout_text(&run);
    assert!(body.contains("transform failed"), "body: {body}");

    let json_run = berwald(&[
        "inspect",
        "--scenario",
        "klein_log_ratio",
        "--point",
        "0.1,0.2,1.0,0.5",
        "--format",
        "json",
    ]);
    let doc: Value = serde_json::from_str(&stdout_text(&json_run)).expect("valid json");
    let point = &doc["points"][0];
    assert!(point["base"].is_object(), "base geometry is still reported");
    assert!(point["transformed"].is_null());
    assert!(point["transform_error"].is_string());
}

#[test]
fn geodesic_csv_has_the_mandated_header_and_trace_footer() {
    let run = berwald(&[
        "geodesic",
        "--metric",
        "euclidean",
        "--factor",
        "constant",
        "--point",
        "0,0,1,0",
        "--dt",
        "0.001",
        "--steps",
        "10",
        "--bound",
        "0.005",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr_text(&run));
    let body = stdout_text(&run);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,y1,y2,F,exited");
    let footer = lines.last().expect("footer line");
    assert!(footer.starts_with("# trace 0:"), "footer: {footer}");
    assert!(
        footer.contains("exited=true"),
        "bound should stop the trace"
    );
    let last_row = lines[lines.len() - 2];
    assert!(last_row.ends_with(",true"), "last row: {last_row}");
    for row in &lines[1..lines.len() - 2] {
        assert!(row.ends_with(",false"), "row: {row}");
    }
}

#[test]
fn output_flag_writes_the_file_and_keeps_stdout_quiet() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("result.json");
    let path_text = path.to_str().expect("utf-8 path");
    let run = berwald(&[
        "check",
        "--scenario",
        "funk_gauge",
        "--seed",
        "3",
        "--count",
        "1",
        "--format",
        "json",
        "--output",
        path_text,
    ]);
    assert_eq!(exit_code(&run), 0);
    assert!(stdout_text(&run).is_empty(), "results go to the file");
    let body = std::fs::read_to_string(&path).expect("output file exists");
    let doc: Value = serde_json::from_str(&body).expect("valid json");
    assert_eq!(doc["run"]["metric"], "funk");
}
