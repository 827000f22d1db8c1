//! End-to-end pipeline tests over small synthetic configs in temp dirs.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use eventlens_core::pipeline::{
    cmd_analyze, cmd_ingest, cmd_run, ExecOptions, Overrides, PipelineError, RunConfig,
};

fn write_company_data(dir: &Path, ticker: &str, rows: usize, event_like: bool) {
    let mut prices = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    let mut trends = String::from("Date,Score,Scale\n");
    for i in 0..rows {
        let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64);
        let score = 1 + (i * 7) % 90;
        let close = 20.0 + score as f64 * 0.5 + (i % 5) as f64;
        let open = close - 0.5;
        prices.push_str(&format!(
            "{date},{open:.4},{:.4},{:.4},{close:.4},{close:.4},{}\n",
            close + 1.0,
            open - 1.0,
            1000 + i,
        ));
        let scale = if event_like { 2 * score } else { 1 };
        trends.push_str(&format!("{date},{score},{scale}\n"));
    }
    fs::write(dir.join(format!("{ticker}_prices.csv")), prices).unwrap();
    fs::write(dir.join(format!("{ticker}_trends.csv")), trends).unwrap();
}

fn two_company_config(dir: &Path) -> PathBuf {
    write_company_data(dir, "AAA", 60, true);
    write_company_data(dir, "BBB", 60, false);
    let config = r#"{
        "companies": [
            {
                "company": "Alpha",
                "ticker": "AAA",
                "price_file": "AAA_prices.csv",
                "trend_file": "AAA_trends.csv",
                "event_date": "2020-02-01"
            },
            {
                "company": "Beta",
                "ticker": "BBB",
                "price_file": "BBB_prices.csv",
                "trend_file": "BBB_trends.csv"
            }
        ],
        "window": { "start": "2020-01-01", "end": "2020-02-29" },
        "seed": 7
    }"#;
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    path
}

fn load_with_out(config_path: &Path, out: &Path) -> (RunConfig, ExecOptions) {
    let config = RunConfig::load(config_path).unwrap();
    let overrides = Overrides {
        out: Some(out.to_path_buf()),
        ..Overrides::default()
    };
    let options = ExecOptions::resolve(&config, &overrides).unwrap();
    (config, options)
}

#[test]
fn ingest_then_analyze_produces_reports_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = two_company_config(dir.path());
    let out = dir.path().join("out");
    let (config, options) = load_with_out(&config_path, &out);

    let ingest = cmd_ingest(&config, &options).unwrap();
    assert_eq!(ingest.companies.len(), 2);
    assert!(ingest.companies.iter().all(|c| c.verification.is_clean()));
    // 3 snapshot files per company plus the summary JSON.
    assert!(out.join("AAA_merged.csv").exists());
    assert!(out.join("BBB_trend.csv").exists());
    assert!(out.join("ingest_summary.json").exists());

    let analyze = cmd_analyze(&config, &options).unwrap();
    assert!(!analyze.control_failed);
    for name in ["report_full.md", "report_pre.md", "report_post.md"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    // Event company gets three plots, the no-event company only the full one.
    assert!(out.join("AAA_pre.svg").exists());
    assert!(out.join("AAA_post.svg").exists());
    assert!(out.join("BBB_full.svg").exists());
    assert!(!out.join("BBB_pre.svg").exists());

    let pre_md = fs::read_to_string(out.join("report_pre.md")).unwrap();
    assert!(pre_md.contains("| Beta | N/A | N/A | N/A | N/A | N/A |"));
}

#[test]
fn merged_rows_drop_dates_missing_from_either_source() {
    let dir = tempfile::tempdir().unwrap();
    // Prices on 3 days, trends on 2 of them plus one extra.
    fs::write(
        dir.path().join("AAA_prices.csv"),
        "Date,Open,High,Low,Close\n\
         2020-01-01,10,11,9,10.5\n\
         2020-01-02,10,11,9,10.5\n\
         2020-01-03,10,11,9,10.5\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("AAA_trends.csv"),
        "Date,Score,Scale\n2020-01-02,50,1\n2020-01-03,60,1\n2020-01-04,70,1\n",
    )
    .unwrap();
    let config_text = r#"{
        "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_file": "AAA_prices.csv", "trend_file": "AAA_trends.csv"
        }],
        "window": { "start": "2020-01-01", "end": "2020-01-31" }
    }"#;
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config_text).unwrap();
    let out = dir.path().join("out");
    let (config, options) = load_with_out(&config_path, &out);

    let summary = cmd_ingest(&config, &options).unwrap();
    assert_eq!(summary.companies[0].price_rows, 3);
    assert_eq!(summary.companies[0].trend_rows, 3);
    assert_eq!(summary.companies[0].merged_rows, 2);
}

#[test]
fn unreadable_trend_file_names_company_and_path() {
    let dir = tempfile::tempdir().unwrap();
    write_company_data(dir.path(), "AAA", 10, true);
    fs::remove_file(dir.path().join("AAA_trends.csv")).unwrap();
    let config_text = r#"{
        "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_file": "AAA_prices.csv", "trend_file": "AAA_trends.csv"
        }]
    }"#;
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config_text).unwrap();
    let (config, options) = load_with_out(&config_path, &dir.path().join("out"));

    let err = cmd_ingest(&config, &options).unwrap_err();
    let message = err.to_string();
    assert!(message.contains("Alpha"), "message was: {message}");
    assert!(message.contains("AAA_trends.csv"), "message was: {message}");
}

#[test]
fn empty_company_list_is_rejected_by_both_commands() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, r#"{ "companies": [] }"#).unwrap();
    let (config, options) = load_with_out(&config_path, &dir.path().join("out"));
    assert!(matches!(
        cmd_ingest(&config, &options),
        Err(PipelineError::NoCompanies)
    ));
    assert!(matches!(
        cmd_analyze(&config, &options),
        Err(PipelineError::NoCompanies)
    ));
}

#[test]
fn analyze_without_snapshots_reports_missing_company() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = two_company_config(dir.path());
    let (config, options) = load_with_out(&config_path, &dir.path().join("never_ingested"));
    match cmd_analyze(&config, &options) {
        Err(PipelineError::MissingSnapshot { company, .. }) => assert_eq!(company, "Alpha"),
        other => panic!("expected MissingSnapshot, got {other:?}"),
    }
}

#[test]
fn rerun_is_byte_identical_across_output_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = two_company_config(dir.path());

    let mut trees = Vec::new();
    for name in ["out_a", "out_b"] {
        let out = dir.path().join(name);
        let (config, options) = load_with_out(&config_path, &out);
        cmd_run(&config, &options).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|entry| {
                let entry = entry.unwrap();
                (
                    entry.file_name().to_string_lossy().into_owned(),
                    fs::read(entry.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        trees.push(files);
    }
    assert_eq!(trees[0].len(), trees[1].len());
    for (a, b) in trees[0].iter().zip(&trees[1]) {
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1, "file {} differs between runs", a.0);
    }
}

#[test]
fn offline_remote_source_without_fallback_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_company_data(dir.path(), "AAA", 10, true);
    let config_text = r#"{
        "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_url": "http://127.0.0.1:1/chart/{ticker}?p1={period1}&p2={period2}",
            "trend_file": "AAA_trends.csv"
        }]
    }"#;
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config_text).unwrap();
    let config = RunConfig::load(&config_path).unwrap();
    let overrides = Overrides {
        out: Some(dir.path().join("out")),
        offline: true,
        ..Overrides::default()
    };
    let options = ExecOptions::resolve(&config, &overrides).unwrap();
    assert!(matches!(
        cmd_ingest(&config, &options),
        Err(PipelineError::OfflineWithoutFallback { .. })
    ));
}

#[test]
fn offline_remote_source_with_fallback_uses_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write_company_data(dir.path(), "AAA", 30, true);
    let config_text = r#"{
        "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_url": "http://127.0.0.1:1/chart/{ticker}?p1={period1}&p2={period2}",
            "price_file": "AAA_prices.csv",
            "trend_file": "AAA_trends.csv"
        }],
        "window": { "start": "2020-01-01", "end": "2020-02-29" }
    }"#;
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config_text).unwrap();
    let config = RunConfig::load(&config_path).unwrap();
    let overrides = Overrides {
        out: Some(dir.path().join("out")),
        offline: true,
        ..Overrides::default()
    };
    let options = ExecOptions::resolve(&config, &overrides).unwrap();
    let summary = cmd_ingest(&config, &options).unwrap();
    assert_eq!(summary.companies[0].price_rows, 30);
    assert!(summary.companies[0].price_source.contains("fallback"));
}

#[test]
fn fetch_failure_with_fallback_proceeds_on_files() {
    let dir = tempfile::tempdir().unwrap();
    write_company_data(dir.path(), "AAA", 30, true);
    // Port 1 refuses connections, so the fetch fails fast and falls back.
    let config_text = r#"{
        "companies": [{
            "company": "Alpha", "ticker": "AAA",
            "price_url": "http://127.0.0.1:1/chart/{ticker}?p1={period1}&p2={period2}",
            "price_file": "AAA_prices.csv",
            "trend_file": "AAA_trends.csv"
        }],
        "window": { "start": "2020-01-01", "end": "2020-02-29" }
    }"#;
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config_text).unwrap();
    let (config, options) = load_with_out(&config_path, &dir.path().join("out"));
    let summary = cmd_ingest(&config, &options).unwrap();
    assert_eq!(summary.companies[0].price_rows, 30);
    assert!(summary.companies[0].price_source.contains("fallback"));
}

#[test]
fn output_dir_precedence_is_flag_config_env() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{ "companies": [], "output_dir": "from_config" }"#,
    )
    .unwrap();
    let config = RunConfig::load(&config_path).unwrap();

    let flag = Overrides {
        out: Some(PathBuf::from("from_flag")),
        env_out: Some(PathBuf::from("from_env")),
        ..Overrides::default()
    };
    assert_eq!(
        ExecOptions::resolve(&config, &flag).unwrap().output_dir,
        Path::new("from_flag")
    );

    let env_only = Overrides {
        env_out: Some(PathBuf::from("from_env")),
        ..Overrides::default()
    };
    assert_eq!(
        ExecOptions::resolve(&config, &env_only).unwrap().output_dir,
        Path::new("from_config"),
    );

    let mut no_config_dir = config.clone();
    no_config_dir.output_dir = None;
    assert_eq!(
        ExecOptions::resolve(&no_config_dir, &env_only)
            .unwrap()
            .output_dir,
        Path::new("from_env"),
    );
    assert!(matches!(
        ExecOptions::resolve(&no_config_dir, &Overrides::default()),
        Err(PipelineError::NoOutputDir)
    ));
}

#[test]
fn config_validation_catches_common_mistakes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "duplicate company",
            r#"{ "companies": [
                {"company": "A", "ticker": "X", "price_file": "p", "trend_file": "t"},
                {"company": "A", "ticker": "Y", "price_file": "p", "trend_file": "t"}
            ]}"#,
        ),
        (
            "duplicate ticker",
            r#"{ "companies": [
                {"company": "A", "ticker": "X", "price_file": "p", "trend_file": "t"},
                {"company": "B", "ticker": "X", "price_file": "p", "trend_file": "t"}
            ]}"#,
        ),
        (
            "no price source",
            r#"{ "companies": [
                {"company": "A", "ticker": "X", "trend_file": "t"}
            ]}"#,
        ),
        (
            "backwards window",
            r#"{ "companies": [], "window": {"start": "2021-01-01", "end": "2020-01-01"} }"#,
        ),
        ("unknown field", r#"{ "companies": [], "bogus": 1 }"#),
    ];
    for (label, text) in cases {
        let path = dir.path().join("config.json");
        fs::write(&path, text).unwrap();
        let result = RunConfig::load(&path);
        assert!(
            matches!(result, Err(PipelineError::Config { .. })),
            "{label}: expected config error, got {result:?}"
        );
    }
}

#[test]
fn config_defaults_match_the_documented_values() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, r#"{ "companies": [] }"#).unwrap();
    let config = RunConfig::load(&config_path).unwrap();
    assert_eq!(
        config.window.start,
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
    );
    assert_eq!(
        config.window.end,
        NaiveDate::from_ymd_opt(2021, 4, 13).unwrap()
    );
    assert_eq!(config.control_tolerance, 0.05);
    assert_eq!(config.seed, 42);
    assert_eq!(config.output_dir, None);
}

#[test]
fn seed_override_changes_effective_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{ "companies": [], "seed": 9, "output_dir": "o" }"#,
    )
    .unwrap();
    let config = RunConfig::load(&config_path).unwrap();
    let defaulted = ExecOptions::resolve(&config, &Overrides::default()).unwrap();
    assert_eq!(defaulted.seed, 9);
    let overridden = ExecOptions::resolve(
        &config,
        &Overrides {
            seed: Some(1234),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_eq!(overridden.seed, 1234);
}
