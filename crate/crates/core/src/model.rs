//! Domain types for the analysis pipeline plus the date-join and
//! event-splitting operations that turn two raw series into analyzable
//! windows.
//!
//! Everything here is immutable after construction and all operations are
//! pure, so per-company pipelines can safely run in parallel.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("non-positive {field} price {value} on {date}")]
    NonPositivePrice {
        date: NaiveDate,
        field: &'static str,
        value: String,
    },
    #[error("price ordering violated on {date}: {detail}")]
    PriceOrdering { date: NaiveDate, detail: String },
    #[error("trend score {value} out of range [0, 100] on {date}")]
    ScoreOutOfRange { date: NaiveDate, value: String },
    #[error("non-positive trend scale {value} on {date}")]
    NonPositiveScale { date: NaiveDate, value: String },
    #[error("non-finite {field} value on {date}")]
    NonFiniteValue {
        date: NaiveDate,
        field: &'static str,
    },
    #[error("series dates not strictly ascending at {date}")]
    UnorderedDates { date: NaiveDate },
    #[error("duplicate date {date} in series")]
    DuplicateDate { date: NaiveDate },
    #[error("window start {start} is after end {end}")]
    InvalidWindow { start: NaiveDate, end: NaiveDate },
}

/// One trading day's OHLC record for a ticker.
///
/// Volume is carried through for completeness but plays no part in the
/// analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar<T: Scalar> {
    date: NaiveDate,
    open: T,
    high: T,
    low: T,
    close: T,
    volume: Option<u64>,
}

impl<T: Scalar> PriceBar<T> {
    pub fn new(
        date: NaiveDate,
        open: T,
        high: T,
        low: T,
        close: T,
        volume: Option<u64>,
    ) -> Result<Self, ModelError> {
        for (field, value) in [
            ("open", open),
            ("high", high),
            ("low", low),
            ("close", close),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFiniteValue { date, field });
            }
            if value <= T::zero() {
                return Err(ModelError::NonPositivePrice {
                    date,
                    field,
                    value: value.to_string(),
                });
            }
        }
        if low > open.min(close) {
            return Err(ModelError::PriceOrdering {
                date,
                detail: format!("low {} above min(open, close)", low),
            });
        }
        if high < open.max(close) {
            return Err(ModelError::PriceOrdering {
                date,
                detail: format!("high {} below max(open, close)", high),
            });
        }
        if low > high {
            return Err(ModelError::PriceOrdering {
                date,
                detail: format!("low {} above high {}", low, high),
            });
        }
        Ok(Self {
            date,
            open,
            high,
            low,
            close,
            volume,
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }
    pub fn open(&self) -> T {
        self.open
    }
    pub fn high(&self) -> T {
        self.high
    }
    pub fn low(&self) -> T {
        self.low
    }
    pub fn close(&self) -> T {
        self.close
    }
    pub fn volume(&self) -> Option<u64> {
        self.volume
    }
}

/// One day's relative search-interest score plus the rescaling factor the
/// retrieval attached to it. The factor is retained as a control variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendPoint<T: Scalar> {
    date: NaiveDate,
    score: T,
    scale: T,
}

impl<T: Scalar> TrendPoint<T> {
    pub fn new(date: NaiveDate, score: T, scale: T) -> Result<Self, ModelError> {
        if !score.is_finite() {
            return Err(ModelError::NonFiniteValue {
                date,
                field: "score",
            });
        }
        if !scale.is_finite() {
            return Err(ModelError::NonFiniteValue {
                date,
                field: "scale",
            });
        }
        let hundred = T::from_u8(100).expect("100 representable");
        if score < T::zero() || score > hundred {
            return Err(ModelError::ScoreOutOfRange {
                date,
                value: score.to_string(),
            });
        }
        if scale <= T::zero() {
            return Err(ModelError::NonPositiveScale {
                date,
                value: scale.to_string(),
            });
        }
        Ok(Self { date, score, scale })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }
    pub fn score(&self) -> T {
        self.score
    }
    pub fn scale(&self) -> T {
        self.scale
    }
}

/// A date-joined price plus trend row for one company.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergedRecord<T: Scalar> {
    date: NaiveDate,
    open: T,
    high: T,
    low: T,
    close: T,
    score: T,
    scale: T,
}

impl<T: Scalar> MergedRecord<T> {
    /// Joins a price bar and a trend point that fell on the same date,
    /// copying both sides unmodified.
    pub fn join(bar: &PriceBar<T>, point: &TrendPoint<T>) -> Self {
        debug_assert_eq!(bar.date, point.date);
        Self {
            date: bar.date,
            open: bar.open,
            high: bar.high,
            low: bar.low,
            close: bar.close,
            score: point.score,
            scale: point.scale,
        }
    }

    /// Builds a record from raw fields, enforcing both parents' invariants.
    pub fn new(
        date: NaiveDate,
        open: T,
        high: T,
        low: T,
        close: T,
        score: T,
        scale: T,
    ) -> Result<Self, ModelError> {
        let bar = PriceBar::new(date, open, high, low, close, None)?;
        let point = TrendPoint::new(date, score, scale)?;
        Ok(Self::join(&bar, &point))
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }
    pub fn open(&self) -> T {
        self.open
    }
    pub fn high(&self) -> T {
        self.high
    }
    pub fn low(&self) -> T {
        self.low
    }
    pub fn close(&self) -> T {
        self.close
    }
    pub fn score(&self) -> T {
        self.score
    }
    pub fn scale(&self) -> T {
        self.scale
    }
}

/// The merged series for one company, dates strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanySeries<T: Scalar> {
    company: String,
    ticker: String,
    records: Vec<MergedRecord<T>>,
}

impl<T: Scalar> CompanySeries<T> {
    pub fn new(
        company: impl Into<String>,
        ticker: impl Into<String>,
        records: Vec<MergedRecord<T>>,
    ) -> Result<Self, ModelError> {
        for pair in records.windows(2) {
            if pair[1].date == pair[0].date {
                return Err(ModelError::DuplicateDate { date: pair[1].date });
            }
            if pair[1].date < pair[0].date {
                return Err(ModelError::UnorderedDates { date: pair[1].date });
            }
        }
        Ok(Self {
            company: company.into(),
            ticker: ticker.into(),
            records,
        })
    }

    fn with_records(&self, records: Vec<MergedRecord<T>>) -> Self {
        Self {
            company: self.company.clone(),
            ticker: self.ticker.clone(),
            records,
        }
    }

    pub fn company(&self) -> &str {
        &self.company
    }
    pub fn ticker(&self) -> &str {
        &self.ticker
    }
    pub fn records(&self) -> &[MergedRecord<T>] {
        &self.records
    }
    pub fn len(&self) -> usize {
        self.records.len()
    }
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self) -> Vec<T> {
        self.records.iter().map(|r| r.score).collect()
    }
    pub fn scales(&self) -> Vec<T> {
        self.records.iter().map(|r| r.scale).collect()
    }
    pub fn closes(&self) -> Vec<T> {
        self.records.iter().map(|r| r.close).collect()
    }
}

/// Which slice of the timeline a series or report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowLabel {
    Full,
    PreRollout,
    PostRollout,
}

impl WindowLabel {
    /// Short form used in file names.
    pub fn slug(self) -> &'static str {
        match self {
            WindowLabel::Full => "full",
            WindowLabel::PreRollout => "pre",
            WindowLabel::PostRollout => "post",
        }
    }
}

impl std::fmt::Display for WindowLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            WindowLabel::Full => "Full",
            WindowLabel::PreRollout => "Pre-Rollout",
            WindowLabel::PostRollout => "Post-Rollout",
        };
        f.write_str(name)
    }
}

/// An inclusive date range with its report label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisWindow {
    label: WindowLabel,
    start: NaiveDate,
    end: NaiveDate,
}

impl AnalysisWindow {
    pub fn new(label: WindowLabel, start: NaiveDate, end: NaiveDate) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvalidWindow { start, end });
        }
        Ok(Self { label, start, end })
    }

    pub fn label(&self) -> WindowLabel {
        self.label
    }
    pub fn start(&self) -> NaiveDate {
        self.start
    }
    pub fn end(&self) -> NaiveDate {
        self.end
    }
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Per-company rollout dates. A company with no entry has no event and is
/// excluded from pre/post analysis; lookups never invent a default date.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventRegistry {
    events: BTreeMap<String, NaiveDate>,
}

impl EventRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, company: impl Into<String>, date: NaiveDate) {
        self.events.insert(company.into(), date);
    }

    pub fn event_for(&self, company: &str) -> Option<NaiveDate> {
        self.events.get(company).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NaiveDate)> {
        self.events.iter().map(|(c, d)| (c.as_str(), *d))
    }
}

/// Inner-joins the two series on their date columns.
///
/// The output covers exactly the intersection of the two date sets, sorted
/// ascending, with every field copied unmodified from the matching inputs.
/// Days present in only one source (holidays, weekends) drop out. An empty
/// intersection is a valid empty result.
pub fn merge_on_dates<T: Scalar>(
    prices: &[PriceBar<T>],
    trends: &[TrendPoint<T>],
) -> Vec<MergedRecord<T>> {
    let by_date: BTreeMap<NaiveDate, &PriceBar<T>> =
        prices.iter().map(|bar| (bar.date, bar)).collect();
    let trend_dates: BTreeMap<NaiveDate, &TrendPoint<T>> =
        trends.iter().map(|point| (point.date, point)).collect();
    by_date
        .iter()
        .filter_map(|(date, bar)| {
            trend_dates
                .get(date)
                .map(|point| MergedRecord::join(bar, point))
        })
        .collect()
}

/// Splits a series at an event date: records strictly before the event go to
/// `pre`, records on or after it go to `post`. The event day itself belongs
/// to `post` (the rollout has begun that day). Either side may be empty and
/// concatenating the two sides reproduces the input.
pub fn split_by_event<T: Scalar>(
    series: &CompanySeries<T>,
    event: NaiveDate,
) -> (CompanySeries<T>, CompanySeries<T>) {
    let cut = series.records.partition_point(|record| record.date < event);
    let pre = series.with_records(series.records[..cut].to_vec());
    let post = series.with_records(series.records[cut..].to_vec());
    (pre, post)
}

/// Keeps only the records falling inside the window (inclusive bounds),
/// preserving order.
pub fn restrict_to_window<T: Scalar>(
    series: &CompanySeries<T>,
    window: &AnalysisWindow,
) -> CompanySeries<T> {
    let records = series
        .records
        .iter()
        .filter(|record| window.contains(record.date))
        .copied()
        .collect();
    series.with_records(records)
}

/// Dates present in both inputs, used by callers that need the join keys
/// without materializing records.
pub fn date_intersection<T: Scalar>(
    prices: &[PriceBar<T>],
    trends: &[TrendPoint<T>],
) -> BTreeSet<NaiveDate> {
    let price_dates: BTreeSet<NaiveDate> = prices.iter().map(|b| b.date).collect();
    let trend_dates: BTreeSet<NaiveDate> = trends.iter().map(|t| t.date).collect();
    price_dates.intersection(&trend_dates).copied().collect()
}
