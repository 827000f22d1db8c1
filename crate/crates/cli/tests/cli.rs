//! Exit-code and flag behavior of the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eventlens(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eventlens"));
    cmd.args(args);
    cmd.env_remove("EVENTLENS_OUT");
    cmd
}

fn fixture_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/config.json")
        .to_string_lossy()
        .into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn help_exits_zero() {
    let output = eventlens(&["--help"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn no_arguments_is_a_usage_error() {
    let output = eventlens(&[]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_config_file_exits_one_with_usage() {
    let output = eventlens(&[
        "run",
        "--config",
        "/nonexistent/config.json",
        "--out",
        "/tmp/x",
    ])
    .output()
    .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("usage:"), "stderr was: {stderr}");
    assert!(stderr.contains("config"), "stderr was: {stderr}");
}

#[test]
fn invalid_config_json_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, "{ not json").unwrap();
    let output = eventlens(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_output_dir_everywhere_exits_one() {
    let output = eventlens(&["run", "--config", &fixture_config()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("output directory"));
}

#[test]
fn env_var_serves_as_output_dir_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    let output = eventlens(&["run", "--config", &fixture_config()])
        .env("EVENTLENS_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&output)
    );
    assert!(out.join("report_full.md").exists());
}

#[test]
fn analyze_before_ingest_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = eventlens(&[
        "analyze",
        "--config",
        &fixture_config(),
        "--out",
        dir.path().join("empty").to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("missing snapshot"));
}

#[test]
fn ingest_then_analyze_both_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_str = out.to_str().unwrap().to_string();

    let ingest = eventlens(&["ingest", "--config", &fixture_config(), "--out", &out_str])
        .output()
        .unwrap();
    assert_eq!(
        ingest.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&ingest)
    );
    // 3 snapshots x 5 companies.
    let snapshots = fs::read_dir(&out)
        .unwrap()
        .filter(|f| {
            f.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".csv")
        })
        .count();
    assert_eq!(snapshots, 15);

    let analyze = eventlens(&["analyze", "--config", &fixture_config(), "--out", &out_str])
        .output()
        .unwrap();
    assert_eq!(
        analyze.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&analyze)
    );
    assert!(out.join("analyze_summary.json").exists());
}

#[test]
fn unreadable_trend_file_names_company_and_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{ "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_file": "missing_prices.csv", "trend_file": "missing_trends.csv"
        }]}"#,
    )
    .unwrap();
    let output = eventlens(&[
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("Alpha"), "stderr: {stderr}");
    assert!(stderr.contains("missing_prices.csv"), "stderr: {stderr}");
}

#[test]
fn offline_flag_is_accepted_for_local_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = eventlens(&[
        "run",
        "--config",
        &fixture_config(),
        "--out",
        out.to_str().unwrap(),
        "--offline",
        "--seed",
        "7",
    ])
    .output()
    .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&output)
    );
}
