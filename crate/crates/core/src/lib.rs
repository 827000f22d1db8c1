//! Event-window correlation analysis of search-interest and equity price
//! series.
//!
//! The crate ingests daily OHLC price data (local CSV exports or a chart
//! API) and daily search-interest scores, inner-joins them on the date
//! column, splits each company's series around its event date, and reports
//! Pearson correlations per window as color-annotated tables plus scatter
//! plots with fixed axes.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases at the crate root pin the common `f64` instantiation used by the
//! pipeline.

pub mod correlation;
pub mod fetch;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod stats;

pub use correlation::{
    aggregate_table, classify, control_check, display_rounded, pairwise_matrix, trend_price_row,
    AggregateError, MatrixColumn, PriceField, ReportColor, Sign, Strength, StrengthBand,
};
pub use ingest::{IngestError, PriceSource, SnapshotPaths, SourceConfig, VerificationReport};
pub use model::{
    merge_on_dates, restrict_to_window, split_by_event, AnalysisWindow, EventRegistry, ModelError,
    WindowLabel,
};
pub use pipeline::{
    cmd_analyze, cmd_ingest, cmd_run, AnalyzeSummary, ExecOptions, IngestSummary, Overrides,
    PipelineError, RunConfig,
};
pub use report::{axes_fragment, render_scatter, render_table, AxisSpec, ScatterPlot, TableFormat};
pub use stats::{mean, pearson, StatsError};

/// `f64` instantiations of the scalar-generic domain types.
pub type PriceBar = model::PriceBar<f64>;
pub type TrendPoint = model::TrendPoint<f64>;
pub type MergedRecord = model::MergedRecord<f64>;
pub type CompanySeries = model::CompanySeries<f64>;
pub type CorrelationRow = correlation::CorrelationRow<f64>;
pub type CorrelationTable = correlation::CorrelationTable<f64>;
pub type PairwiseMatrix = correlation::PairwiseMatrix<f64>;
pub type ControlCheckResult = correlation::ControlCheckResult<f64>;
pub type FetchOutcome = fetch::FetchOutcome<f64>;
