//! End-to-end tests for the `mcv` binary: argument handling, input
//! sniffing, output formats, exit codes, and seed resolution.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

static FILE_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn write_temp(stem: &str, text: &str) -> PathBuf {
    let id = FILE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("mcv-cli-{}-{id}-{stem}", std::process::id()));
    std::fs::write(&path, text).expect("temp file is writable");
    path
}

fn mcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcv"))
        .args(args)
        .env_remove("MCV_DEFAULT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_str(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

fn sample_csv() -> &'static str {
    "a,b\n1.0,2.0\n2.0,1.5\n3.0,2.5\n4.0,3.0\n2.5,2.2\n"
}

fn summary_json() -> &'static str {
    r#"{"mean": [3.0, 3.0], "cov": [[1.0, 1.0], [1.0, 2.0]], "convention": "analytic"}"#
}

#[test]
fn compute_on_summary_reports_exact_value() {
    let path = write_temp("inst.json", summary_json());
    let output = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "gamma_vn",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let reports: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["metric_id"], "gamma_vn");
    let value = reports[0]["value"].as_f64().unwrap();
    assert!((value - 1.0 / 3.0).abs() < 1e-15, "gamma_vn = {value}");
    let _ = std::fs::remove_file(path);
}

#[test]
fn compute_selects_requested_metrics_in_order() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "gamma_vn,g2",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let reports: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    let ids: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["metric_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["gamma_vn", "g2"]);
    let _ = std::fs::remove_file(path);
}

#[test]
fn compute_default_covers_multivariate_family() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&["compute", "--input", path.to_str().unwrap()]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let reports: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    let ids: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["metric_id"].as_str().unwrap())
        .collect();
    // Multi-column data: every multivariate metric, no univariate cv/gini.
    assert_eq!(ids.len(), 11);
    assert!(!ids.contains(&"cv"));
    assert!(!ids.contains(&"gini"));
    assert!(ids.contains(&"g2_pairwise"));
    assert!(ids.contains(&"g_inf"));
    let _ = std::fs::remove_file(path);
}

#[test]
fn compute_q_sweep_emits_one_report_per_q() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "gq",
        "--q",
        "2",
        "--q",
        "8",
        "--format",
        "csv",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let text = stdout_str(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric_id,value,n,convention,q"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("gq,") && rows[0].ends_with(",2"));
    assert!(rows[1].starts_with("gq,") && rows[1].ends_with(",8"));
    let _ = std::fs::remove_file(path);
}

#[test]
fn compute_rejects_q_below_one() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&["compute", "--input", path.to_str().unwrap(), "--q", "0.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_str(&output).contains("q must be"));
    let _ = std::fs::remove_file(path);
}

#[test]
fn compute_zero_mean_exits_one_and_names_precondition() {
    let path = write_temp("zero.csv", "x\n-1.0\n1.0\n-2.0\n2.0\n");
    let output = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "cv",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(
        stderr_str(&output).contains("ZeroMean"),
        "stderr: {}",
        stderr_str(&output)
    );
    let _ = std::fs::remove_file(path);
}

#[test]
fn malformed_csv_exits_one_with_parse_error() {
    let path = write_temp("bad.csv", "a,b\n1.0,zzz\n2.0,3.0\n");
    let output = mcv(&["compute", "--input", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let err = stderr_str(&output);
    assert!(err.contains("Parse"), "stderr: {err}");
    assert!(err.contains('b'), "error should name the column: {err}");
    let _ = std::fs::remove_file(path);
}

#[test]
fn missing_input_file_exits_one() {
    let output = mcv(&["compute", "--input", "/nonexistent/mcv-test.csv"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn simulate_constant_mean_emits_expected_rows() {
    let output = mcv(&[
        "simulate",
        "--experiment",
        "gaussian_constant_mean",
        "--seed",
        "42",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let text = stdout_str(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x_value,metric_id,value");
    // Nine dimension points, five default metrics.
    assert_eq!(lines.len(), 1 + 45);
    assert!(lines[1].starts_with("10,"));
    assert!(lines.last().unwrap().starts_with("50,"));
}

#[test]
fn simulate_requires_a_seed() {
    let output = mcv(&["simulate", "--experiment", "galton"]);
    assert!(!output.status.success());
    assert!(stderr_str(&output).contains("--seed"));
}

#[test]
fn simulate_rejects_unknown_experiment() {
    let output = mcv(&["simulate", "--experiment", "bogus", "--seed", "7"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let args = [
        "simulate",
        "--experiment",
        "galton",
        "--seed",
        "5",
        "--points",
        "4,8",
        "--samples",
        "50",
    ];
    let first = mcv(&args);
    let second = mcv(&args);
    assert!(first.status.success(), "stderr: {}", stderr_str(&first));
    assert_eq!(stdout_str(&first), stdout_str(&second));
}

#[test]
fn verify_subset_filters_rows() {
    let output = mcv(&[
        "verify",
        "--metrics",
        "g2",
        "--properties",
        "cloning",
        "--format",
        "csv",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let text = stdout_str(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["metric_id,property_id,verdict", "g2,cloning,holds"]);
}

#[test]
fn verify_seed_comes_from_env_then_flag() {
    let from_env = Command::new(env!("CARGO_BIN_EXE_mcv"))
        .args([
            "verify",
            "--metrics",
            "g2",
            "--properties",
            "coherence",
            "--format",
            "json",
        ])
        .env("MCV_DEFAULT_SEED", "777")
        .output()
        .expect("binary runs");
    assert!(
        from_env.status.success(),
        "stderr: {}",
        stderr_str(&from_env)
    );
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&from_env)).unwrap();
    assert_eq!(parsed["seed"], 777);

    let flag_wins = Command::new(env!("CARGO_BIN_EXE_mcv"))
        .args([
            "verify",
            "--metrics",
            "g2",
            "--properties",
            "coherence",
            "--seed",
            "31",
            "--format",
            "json",
        ])
        .env("MCV_DEFAULT_SEED", "777")
        .output()
        .expect("binary runs");
    assert!(flag_wins.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&flag_wins)).unwrap();
    assert_eq!(parsed["seed"], 31);
}

#[test]
fn verify_all_has_no_mismatches() {
    let output = mcv(&["verify", "--all", "--format", "json"]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    assert_eq!(parsed["mismatches"].as_array().unwrap().len(), 0);
    assert_eq!(parsed["verdicts"].as_array().unwrap().len(), 48);
}

#[test]
fn whiten_data_renames_columns() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&["whiten", "--input", path.to_str().unwrap()]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let text = stdout_str(&output);
    assert!(
        text.starts_with("a_w,b_w\n"),
        "header: {}",
        text.lines().next().unwrap()
    );
    assert_eq!(text.lines().count(), 6);
    let _ = std::fs::remove_file(path);
}

#[test]
fn whiten_summary_reports_matrix() {
    let path = write_temp("inst.json", summary_json());
    let output = mcv(&[
        "whiten",
        "--input",
        path.to_str().unwrap(),
        "--kind",
        "cholesky",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    assert_eq!(parsed["kind"], "cholesky");
    assert!(parsed["condition"].as_f64().unwrap() >= 1.0);
    let matrix = parsed["matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), 2);
    let _ = std::fs::remove_file(path);
}

#[test]
fn influence_reports_formula_and_probe_side_by_side() {
    let path = write_temp("data.csv", sample_csv());
    let output = mcv(&[
        "influence",
        "--input",
        path.to_str().unwrap(),
        "--point",
        "2,2",
        "--format",
        "csv",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    let text = stdout_str(&output);
    assert!(text.contains("formula,"));
    assert!(text.contains("fd_eps,"));
    assert!(text.contains("fd_half_eps,"));
    let _ = std::fs::remove_file(path);
}

#[test]
fn influence_rejects_moment_summaries() {
    let path = write_temp("inst.json", summary_json());
    let output = mcv(&["influence", "--input", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_str(&output).contains("observation-level"));
    let _ = std::fs::remove_file(path);
}

#[test]
fn output_flag_writes_file_instead_of_stdout() {
    let input = write_temp("data.csv", sample_csv());
    let dest = std::env::temp_dir().join(format!("mcv-cli-{}-out.json", std::process::id()));
    let output = mcv(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--metrics",
        "g2",
        "--output",
        dest.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_str(&output));
    assert!(stdout_str(&output).is_empty());
    let written = std::fs::read_to_string(&dest).expect("output file exists");
    let parsed: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 1);
    let _ = std::fs::remove_file(input);
    let _ = std::fs::remove_file(dest);
}

#[test]
fn unbiased_convention_changes_the_estimate() {
    let path = write_temp("data.csv", sample_csv());
    let pop = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "gamma_vn",
    ]);
    let unb = mcv(&[
        "compute",
        "--input",
        path.to_str().unwrap(),
        "--metrics",
        "gamma_vn",
        "--convention",
        "unbiased",
    ]);
    assert!(pop.status.success() && unb.status.success());
    let read = |o: &Output| {
        let v: serde_json::Value = serde_json::from_str(&stdout_str(o)).unwrap();
        v.as_array().unwrap()[0]["value"].as_f64().unwrap()
    };
    let (vp, vu) = (read(&pop), read(&unb));
    // Unbiased covariance is larger by N/(N-1); the quadratic form in its
    // inverse shrinks, so this reciprocal-root metric grows by sqrt(N/(N-1)).
    let expected = vp * (5.0f64 / 4.0).sqrt();
    assert!(
        (vu - expected).abs() < 1e-12,
        "conventions must differ by sqrt(N/(N-1)): {vp} vs {vu}"
    );
    let _ = std::fs::remove_file(path);
}
