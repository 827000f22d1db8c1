//! Config-driven orchestration of the full pipeline: acquisition,
//! cleaning and merging, snapshot persistence, per-window analysis, the
//! scale control check, and report/plot emission.
//!
//! Everything here works at `f64` precision and writes deterministic
//! output: two runs over identical config and inputs produce byte-identical
//! trees.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlation::{
    aggregate_table, control_check, pairwise_matrix, trend_price_row, AggregateError,
    ControlCheckResult, CorrelationRow,
};
use crate::fetch::{fetch_price_history, FetchOptions};
use crate::ingest::{
    parse_merged_file, parse_price_file, parse_trend_file, verify_against_source, write_snapshots,
    IngestError, PriceSource, SnapshotPaths, SourceConfig, VerificationReport,
};
use crate::model::{
    merge_on_dates, restrict_to_window, split_by_event, AnalysisWindow, CompanySeries,
    EventRegistry, MergedRecord, ModelError, PriceBar, TrendPoint, WindowLabel,
};
use crate::report::{render_scatter, render_table, AxisSpec, ScatterPlot, TableFormat};

pub const DEFAULT_CONTROL_TOLERANCE: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 42;
pub const VERIFICATION_SAMPLE: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config {}: {reason}", path.display())]
    Config { path: PathBuf, reason: String },
    #[error("no companies configured")]
    NoCompanies,
    #[error("no output directory: pass --out, set output_dir in the config, or set EVENTLENS_OUT")]
    NoOutputDir,
    #[error("missing snapshot for {company}: {}", path.display())]
    MissingSnapshot { company: String, path: PathBuf },
    #[error("{company}: {source}")]
    Company {
        company: String,
        source: IngestError,
    },
    #[error("{company}: network disabled but price source is remote with no local fallback")]
    OfflineWithoutFallback { company: String },
    #[error("{company}: fetch failed with no local fallback: {source}")]
    FetchFailed {
        company: String,
        source: IngestError,
    },
    #[error("{company}: snapshot verification found {mismatches} mismatching fields")]
    VerificationFailed { company: String, mismatches: usize },
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogLevel {
    Info,
    Warn,
    Error,
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogLevel::Info => f.write_str("info"),
            LogLevel::Warn => f.write_str("warn"),
            LogLevel::Error => f.write_str("error"),
        }
    }
}

fn log(level: LogLevel, message: impl fmt::Display) {
    eprintln!("[{level}] {message}");
}

fn default_window() -> WindowRange {
    WindowRange {
        start: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        end: NaiveDate::from_ymd_opt(2021, 4, 13).unwrap(),
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_CONTROL_TOLERANCE
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Inclusive analysis date range as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// One company block of the run config.
///
/// `price_file` alone means a local source; `price_url` alone a remote one;
/// both together mean remote with the file as fallback. An absent
/// `event_date` keeps the company out of pre/post analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanyEntry {
    pub company: String,
    pub ticker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_url: Option<String>,
    pub trend_file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_date: Option<NaiveDate>,
}

/// The JSON run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub companies: Vec<CompanyEntry>,
    #[serde(default = "default_window")]
    pub window: WindowRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_tolerance")]
    pub control_tolerance: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_agent: Option<String>,
}

impl RunConfig {
    /// Loads and validates a config file. Relative data paths are resolved
    /// against the config file's directory; `output_dir` stays relative to
    /// the working directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let config_error = |reason: String| PipelineError::Config {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|err| config_error(err.to_string()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|err| config_error(err.to_string()))?;

        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut config.companies {
            if let Some(file) = &entry.price_file {
                if file.is_relative() {
                    entry.price_file = Some(base.join(file));
                }
            }
            if entry.trend_file.is_relative() {
                entry.trend_file = base.join(&entry.trend_file);
            }
        }
        config.validate().map_err(config_error)?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if self.window.start > self.window.end {
            return Err(format!(
                "window start {} is after end {}",
                self.window.start, self.window.end
            ));
        }
        if self.control_tolerance < 0.0 || !self.control_tolerance.is_finite() {
            return Err(format!(
                "control_tolerance {} must be non-negative",
                self.control_tolerance
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        let mut tickers = std::collections::BTreeSet::new();
        for entry in &self.companies {
            if !names.insert(&entry.company) {
                return Err(format!("duplicate company '{}'", entry.company));
            }
            if !tickers.insert(&entry.ticker) {
                return Err(format!("duplicate ticker '{}'", entry.ticker));
            }
            if entry.price_file.is_none() && entry.price_url.is_none() {
                return Err(format!(
                    "company '{}' needs price_file, price_url, or both",
                    entry.company
                ));
            }
        }
        Ok(())
    }

    pub fn analysis_window(&self) -> AnalysisWindow {
        AnalysisWindow::new(WindowLabel::Full, self.window.start, self.window.end)
            .expect("validated window")
    }

    pub fn event_registry(&self) -> EventRegistry {
        let mut registry = EventRegistry::new();
        for entry in &self.companies {
            if let Some(date) = entry.event_date {
                registry.insert(entry.company.clone(), date);
            }
        }
        registry
    }

    fn source_config(&self, entry: &CompanyEntry) -> SourceConfig {
        let price_source = match (&entry.price_url, &entry.price_file) {
            (Some(url), fallback) => PriceSource::Remote {
                endpoint: url.clone(),
                fallback: fallback.clone(),
            },
            (None, Some(file)) => PriceSource::LocalFile(file.clone()),
            (None, None) => unreachable!("validated: at least one price source"),
        };
        SourceConfig {
            company: entry.company.clone(),
            ticker: entry.ticker.clone(),
            trend_keyword: entry
                .trend_keyword
                .clone()
                .unwrap_or_else(|| entry.company.clone()),
            price_source,
            trend_source: entry.trend_file.clone(),
            date_range: self.analysis_window(),
        }
    }
}

/// Flags the CLI resolved for one invocation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub env_out: Option<PathBuf>,
    pub offline: bool,
    pub seed: Option<u64>,
}

/// Effective per-run settings after merging config and overrides.
#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub output_dir: PathBuf,
    pub offline: bool,
    pub seed: u64,
    pub control_tolerance: f64,
    pub fetch: FetchOptions,
}

impl ExecOptions {
    /// Output dir precedence: `--out` flag, then the config's `output_dir`,
    /// then the `EVENTLENS_OUT` environment fallback.
    pub fn resolve(config: &RunConfig, overrides: &Overrides) -> Result<Self, PipelineError> {
        let output_dir = overrides
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .or_else(|| overrides.env_out.clone())
            .ok_or(PipelineError::NoOutputDir)?;
        let mut fetch = FetchOptions::default();
        if let Some(agent) = &config.user_agent {
            fetch.user_agent = agent.clone();
        }
        Ok(Self {
            output_dir,
            offline: overrides.offline,
            seed: overrides.seed.unwrap_or(config.seed),
            control_tolerance: config.control_tolerance,
            fetch,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompanyIngest {
    pub company: String,
    pub ticker: String,
    pub price_source: String,
    pub price_rows: usize,
    pub trend_rows: usize,
    pub merged_rows: usize,
    pub skipped_fetch_days: usize,
    pub snapshots: Vec<String>,
    pub verification: VerificationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub companies: Vec<CompanyIngest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSummary {
    pub pass: bool,
    pub skipped: bool,
    pub max_deviation: Option<f64>,
    pub tolerance: f64,
    pub deviations: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ControlSummary {
    fn from_result(result: &ControlCheckResult<f64>) -> Self {
        let deviations = result
            .deviations
            .iter()
            .filter_map(|(field, dev)| dev.map(|d| (field.name().to_string(), d)))
            .collect();
        Self {
            pass: result.pass,
            skipped: result.skipped,
            max_deviation: result.max_deviation,
            tolerance: result.tolerance,
            deviations,
            note: result.note.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompanyAnalysis {
    pub company: String,
    pub ticker: String,
    pub merged_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_date: Option<NaiveDate>,
    pub control: ControlSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub companies: Vec<CompanyAnalysis>,
    pub reports: Vec<String>,
    pub plots: Vec<String>,
    pub control_failed: bool,
}

fn write_text(path: &Path, body: &str) -> Result<(), PipelineError> {
    fs::write(path, body).map_err(|source| PipelineError::Io {
        context: path.display().to_string(),
        source,
    })
}

fn write_summary<S: Serialize>(
    out_dir: &Path,
    name: &str,
    summary: &S,
) -> Result<(), PipelineError> {
    let body = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_text(&out_dir.join(name), &format!("{body}\n"))
}

struct AcquiredPrices {
    bars: Vec<PriceBar<f64>>,
    source: String,
    skipped_fetch_days: usize,
}

fn acquire_prices(
    source: &SourceConfig,
    options: &ExecOptions,
) -> Result<AcquiredPrices, PipelineError> {
    let company = source.company.clone();
    match &source.price_source {
        PriceSource::LocalFile(path) => {
            let bars = parse_price_file(path)
                .map_err(|source| PipelineError::Company { company, source })?;
            Ok(AcquiredPrices {
                bars,
                source: "local".into(),
                skipped_fetch_days: 0,
            })
        }
        PriceSource::Remote { fallback, .. } => {
            if options.offline {
                let Some(path) = fallback else {
                    return Err(PipelineError::OfflineWithoutFallback { company });
                };
                log(
                    LogLevel::Warn,
                    format!(
                        "{company}: offline, using local fallback {}",
                        path.display()
                    ),
                );
                let bars = parse_price_file(path)
                    .map_err(|source| PipelineError::Company { company, source })?;
                return Ok(AcquiredPrices {
                    bars,
                    source: "remote (offline fallback)".into(),
                    skipped_fetch_days: 0,
                });
            }
            match fetch_price_history(source, &options.fetch) {
                Ok(outcome) => {
                    if outcome.skipped_days > 0 {
                        log(
                            LogLevel::Warn,
                            format!(
                                "{company}: skipped {} fetched days with null quotes",
                                outcome.skipped_days
                            ),
                        );
                    }
                    Ok(AcquiredPrices {
                        bars: outcome.bars,
                        source: "remote".into(),
                        skipped_fetch_days: outcome.skipped_days,
                    })
                }
                Err(err) => {
                    let Some(path) = fallback else {
                        return Err(PipelineError::FetchFailed {
                            company,
                            source: err,
                        });
                    };
                    log(
                        LogLevel::Warn,
                        format!(
                            "{company}: fetch failed ({err}), using local fallback {}",
                            path.display()
                        ),
                    );
                    let bars = parse_price_file(path)
                        .map_err(|source| PipelineError::Company { company, source })?;
                    Ok(AcquiredPrices {
                        bars,
                        source: "remote (fetch-failure fallback)".into(),
                        skipped_fetch_days: 0,
                    })
                }
            }
        }
    }
}

/// Acquires, validates, merges, and snapshots every configured company,
/// then spot-checks each snapshot against its sources. Any validation
/// failure aborts with an error naming the company.
pub fn cmd_ingest(
    config: &RunConfig,
    options: &ExecOptions,
) -> Result<IngestSummary, PipelineError> {
    if config.companies.is_empty() {
        return Err(PipelineError::NoCompanies);
    }
    let window = config.analysis_window();
    fs::create_dir_all(&options.output_dir).map_err(|source| PipelineError::Io {
        context: options.output_dir.display().to_string(),
        source,
    })?;

    let mut companies = Vec::new();
    for (index, entry) in config.companies.iter().enumerate() {
        let source = config.source_config(entry);
        let company = entry.company.clone();

        let acquired = acquire_prices(&source, options)?;
        let trends: Vec<TrendPoint<f64>> =
            parse_trend_file(&source.trend_source).map_err(|source| PipelineError::Company {
                company: company.clone(),
                source,
            })?;

        let prices: Vec<PriceBar<f64>> = acquired
            .bars
            .into_iter()
            .filter(|bar| window.contains(bar.date()))
            .collect();
        let trends: Vec<TrendPoint<f64>> = trends
            .into_iter()
            .filter(|point| window.contains(point.date()))
            .collect();
        let merged: Vec<MergedRecord<f64>> = merge_on_dates(&prices, &trends);

        let paths = write_snapshots(
            &options.output_dir,
            &entry.ticker,
            &prices,
            &trends,
            &merged,
        )
        .map_err(|source| PipelineError::Company {
            company: company.clone(),
            source,
        })?;

        let series = CompanySeries::new(company.clone(), entry.ticker.clone(), merged)
            .expect("merge output is sorted and duplicate free");
        let verification = verify_against_source(
            &series,
            &prices,
            &trends,
            VERIFICATION_SAMPLE,
            options.seed.wrapping_add(index as u64),
        );
        if !verification.is_clean() {
            log(
                LogLevel::Error,
                format!(
                    "{company}: verification mismatches: {:?}",
                    verification.mismatches
                ),
            );
            return Err(PipelineError::VerificationFailed {
                company,
                mismatches: verification.mismatches.len(),
            });
        }

        log(
            LogLevel::Info,
            format!(
                "{company}: {} price rows, {} trend rows, {} merged rows, verification clean",
                prices.len(),
                trends.len(),
                series.len(),
            ),
        );
        companies.push(CompanyIngest {
            company,
            ticker: entry.ticker.clone(),
            price_source: acquired.source,
            price_rows: prices.len(),
            trend_rows: trends.len(),
            merged_rows: series.len(),
            skipped_fetch_days: acquired.skipped_fetch_days,
            snapshots: snapshot_names(&paths),
            verification,
        });
    }

    let summary = IngestSummary { companies };
    write_summary(&options.output_dir, "ingest_summary.json", &summary)?;
    Ok(summary)
}

fn snapshot_names(paths: &SnapshotPaths) -> Vec<String> {
    [&paths.trend, &paths.value, &paths.merged]
        .iter()
        .map(|p| {
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect()
}

/// Loads the merged snapshots and produces the full/pre/post report tables,
/// per-company scatter plots, and the control-check summary. Companies
/// without an event date appear as N/A rows outside the full window and get
/// no pre/post plots. A failed control check is recorded in the summary,
/// not raised as an error, so the analysis is still written.
pub fn cmd_analyze(
    config: &RunConfig,
    options: &ExecOptions,
) -> Result<AnalyzeSummary, PipelineError> {
    if config.companies.is_empty() {
        return Err(PipelineError::NoCompanies);
    }
    let window = config.analysis_window();
    let registry = config.event_registry();

    let mut companies = Vec::new();
    let mut full_rows: Vec<CorrelationRow<f64>> = Vec::new();
    let mut pre_rows: Vec<CorrelationRow<f64>> = Vec::new();
    let mut post_rows: Vec<CorrelationRow<f64>> = Vec::new();
    let mut plots = Vec::new();
    let mut control_failed = false;

    for entry in &config.companies {
        let company = entry.company.clone();
        let paths = SnapshotPaths::for_ticker(&options.output_dir, &entry.ticker);
        if !paths.merged.exists() {
            return Err(PipelineError::MissingSnapshot {
                company,
                path: paths.merged,
            });
        }
        let records =
            parse_merged_file(&paths.merged).map_err(|source| PipelineError::Company {
                company: company.clone(),
                source,
            })?;
        let series = CompanySeries::new(company.clone(), entry.ticker.clone(), records)
            .expect("snapshot parser guarantees order");
        let full = restrict_to_window(&series, &window);

        full_rows.push(trend_price_row(&full, WindowLabel::Full));
        let event = registry.event_for(&company);
        match event {
            Some(date) => {
                let (pre, post) = split_by_event(&full, date);
                pre_rows.push(trend_price_row(&pre, WindowLabel::PreRollout));
                post_rows.push(trend_price_row(&post, WindowLabel::PostRollout));

                let axes = AxisSpec::for_company(&full);
                for (label, slice) in [
                    (WindowLabel::Full, &full),
                    (WindowLabel::PreRollout, &pre),
                    (WindowLabel::PostRollout, &post),
                ] {
                    plots.push(write_plot(options, &entry.ticker, slice, label, axes)?);
                }
            }
            None => {
                pre_rows.push(CorrelationRow::not_applicable(
                    &company,
                    WindowLabel::PreRollout,
                ));
                post_rows.push(CorrelationRow::not_applicable(
                    &company,
                    WindowLabel::PostRollout,
                ));
                let axes = AxisSpec::for_company(&full);
                plots.push(write_plot(
                    options,
                    &entry.ticker,
                    &full,
                    WindowLabel::Full,
                    axes,
                )?);
            }
        }

        let matrix = pairwise_matrix(&full);
        let control = control_check(&matrix, options.control_tolerance);
        if control.skipped {
            log(
                LogLevel::Info,
                format!(
                    "{company}: control check skipped ({})",
                    control.note.as_deref().unwrap_or("")
                ),
            );
        } else if control.pass {
            log(
                LogLevel::Info,
                format!(
                    "{company}: control check passed, max deviation {}",
                    control.max_deviation.unwrap_or(0.0)
                ),
            );
        } else {
            control_failed = true;
            log(
                LogLevel::Error,
                format!(
                    "{company}: control check FAILED, max deviation {} exceeds tolerance {}",
                    control.max_deviation.unwrap_or(f64::NAN),
                    options.control_tolerance,
                ),
            );
        }

        companies.push(CompanyAnalysis {
            company,
            ticker: entry.ticker.clone(),
            merged_rows: full.len(),
            event_date: event,
            control: ControlSummary::from_result(&control),
        });
    }

    let mut reports = Vec::new();
    for rows in [full_rows, pre_rows, post_rows] {
        let table = aggregate_table(rows)?;
        let slug = table.window().slug();
        for (format, extension) in [(TableFormat::Markdown, "md"), (TableFormat::Csv, "csv")] {
            let name = format!("report_{slug}.{extension}");
            write_text(
                &options.output_dir.join(&name),
                &render_table(&table, format),
            )?;
            reports.push(name);
        }
    }

    let summary = AnalyzeSummary {
        companies,
        reports,
        plots,
        control_failed,
    };
    write_summary(&options.output_dir, "analyze_summary.json", &summary)?;
    if summary.control_failed {
        log(LogLevel::Error, "one or more control checks failed");
    }
    Ok(summary)
}

fn write_plot(
    options: &ExecOptions,
    ticker: &str,
    series: &CompanySeries<f64>,
    label: WindowLabel,
    axes: AxisSpec,
) -> Result<String, PipelineError> {
    let plot = ScatterPlot::new(series, label, axes);
    let name = format!("{ticker}_{}.svg", label.slug());
    write_text(&options.output_dir.join(&name), &render_scatter(&plot))?;
    Ok(name)
}

/// Full pipeline: ingest then analyze.
pub fn cmd_run(
    config: &RunConfig,
    options: &ExecOptions,
) -> Result<(IngestSummary, AnalyzeSummary), PipelineError> {
    let ingest = cmd_ingest(config, options)?;
    let analyze = cmd_analyze(config, options)?;
    Ok((ingest, analyze))
}
