//! Parsing and validation of the two raw data formats, snapshot
//! persistence, and the seeded spot-check that re-derives snapshot rows
//! from their sources.
//!
//! Input price files follow the common finance-portal export header
//! (`Date,Open,High,Low,Close,Adj Close,Volume`, the adjusted column
//! ignored and volume optional). Trend files follow the snapshot contract
//! `Date,Score,Scale`, scale defaulting to 1.0 when the column is absent.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::model::{AnalysisWindow, CompanySeries, MergedRecord, PriceBar, TrendPoint};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: expected {expected}, found '{found}'")]
    MalformedHeader {
        expected: &'static str,
        found: String,
    },
    #[error("bad row at line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected payload: missing {path}")]
    UnexpectedPayload { path: String },
}

/// Where a company's data comes from.
#[derive(Debug, Clone)]
pub enum PriceSource {
    LocalFile(PathBuf),
    /// Endpoint template with `{ticker}`, `{period1}`, `{period2}`
    /// placeholders; an optional local file serves as fallback when the
    /// fetch fails or networking is disabled.
    Remote {
        endpoint: String,
        fallback: Option<PathBuf>,
    },
}

/// Resolved acquisition settings for one company.
#[derive(Debug, Clone)]
pub struct SourceConfig {
    pub company: String,
    pub ticker: String,
    pub trend_keyword: String,
    pub price_source: PriceSource,
    pub trend_source: PathBuf,
    pub date_range: AnalysisWindow,
}

const PRICE_HEADER: &str = "Date,Open,High,Low,Close[,Adj Close][,Volume]";
const TREND_HEADER: &str = "Date,Score[,Scale]";
const MERGED_HEADER: &str = "Date,Open,High,Low,Close,Score,Scale";

fn open_reader(raw: impl io::Read) -> csv::Reader<impl io::Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(raw)
}

fn header_names(
    reader: &mut csv::Reader<impl io::Read>,
    expected: &'static str,
) -> Result<Vec<String>, IngestError> {
    let headers = reader
        .headers()
        .map_err(|err| IngestError::MalformedHeader {
            expected,
            found: err.to_string(),
        })?;
    Ok(headers.iter().map(|h| h.to_ascii_lowercase()).collect())
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn row_error(err: csv::Error) -> IngestError {
    let line = match err.position() {
        Some(pos) => pos.line(),
        None => 0,
    };
    IngestError::BadRow {
        line,
        reason: err.to_string(),
    }
}

fn parse_date(record: &csv::StringRecord, idx: usize, line: u64) -> Result<NaiveDate, IngestError> {
    let text = record.get(idx).unwrap_or("");
    text.parse().map_err(|_| IngestError::BadRow {
        line,
        reason: format!("invalid date '{text}'"),
    })
}

fn parse_value<T: Scalar>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T, IngestError> {
    let text = record.get(idx).unwrap_or("");
    if text.is_empty() {
        return Err(IngestError::BadRow {
            line,
            reason: format!("missing {name}"),
        });
    }
    let value: f64 = text.parse().map_err(|_| IngestError::BadRow {
        line,
        reason: format!("invalid {name} '{text}'"),
    })?;
    T::from_f64(value).ok_or_else(|| IngestError::BadRow {
        line,
        reason: format!("invalid {name} '{text}'"),
    })
}

fn sort_and_check_dates<R>(
    rows: &mut [R],
    date_of: impl Fn(&R) -> NaiveDate,
) -> Result<(), IngestError> {
    rows.sort_by_key(&date_of);
    for pair in rows.windows(2) {
        if date_of(&pair[0]) == date_of(&pair[1]) {
            return Err(IngestError::DuplicateDate {
                date: date_of(&pair[0]),
            });
        }
    }
    Ok(())
}

/// Parses a finance-portal price export. Rows with missing, unparsable, or
/// non-positive prices fail with the offending line number; duplicate dates
/// are an error; output is sorted ascending.
pub fn parse_price_csv<T: Scalar>(raw: impl io::Read) -> Result<Vec<PriceBar<T>>, IngestError> {
    let mut reader = open_reader(raw);
    let names = header_names(&mut reader, PRICE_HEADER)?;

    let base: [&str; 5] = ["date", "open", "high", "low", "close"];
    let matches_base = names.len() >= 5 && names[..5] == base;
    let volume_idx = match (matches_base, &names[5.min(names.len())..]) {
        (true, []) => None,
        (true, [adj]) if adj == "adj close" => None,
        (true, [vol]) if vol == "volume" => Some(5),
        (true, [adj, vol]) if adj == "adj close" && vol == "volume" => Some(6),
        _ => {
            return Err(IngestError::MalformedHeader {
                expected: PRICE_HEADER,
                found: names.join(","),
            })
        }
    };

    let mut bars = Vec::new();
    for result in reader.records() {
        let record = result.map_err(row_error)?;
        let line = record_line(&record);
        let date = parse_date(&record, 0, line)?;
        let open = parse_value(&record, 1, "open", line)?;
        let high = parse_value(&record, 2, "high", line)?;
        let low = parse_value(&record, 3, "low", line)?;
        let close = parse_value(&record, 4, "close", line)?;
        let volume = match volume_idx {
            Some(idx) => parse_volume(&record, idx, line)?,
            None => None,
        };
        let bar = PriceBar::new(date, open, high, low, close, volume).map_err(|err| {
            IngestError::BadRow {
                line,
                reason: err.to_string(),
            }
        })?;
        bars.push(bar);
    }
    sort_and_check_dates(&mut bars, PriceBar::date)?;
    Ok(bars)
}

fn parse_volume(
    record: &csv::StringRecord,
    idx: usize,
    line: u64,
) -> Result<Option<u64>, IngestError> {
    let text = record.get(idx).unwrap_or("");
    if text.is_empty() || text.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    text.parse::<u64>()
        .map(Some)
        .map_err(|_| IngestError::BadRow {
            line,
            reason: format!("invalid volume '{text}'"),
        })
}

/// Parses a trend snapshot. Scores must sit in [0, 100] and scales must be
/// positive; a missing Scale column defaults every row to 1.0.
pub fn parse_trend_csv<T: Scalar>(raw: impl io::Read) -> Result<Vec<TrendPoint<T>>, IngestError> {
    let mut reader = open_reader(raw);
    let names = header_names(&mut reader, TREND_HEADER)?;
    let has_scale = match names.as_slice() {
        [date, score] if date == "date" && score == "score" => false,
        [date, score, scale] if date == "date" && score == "score" && scale == "scale" => true,
        _ => {
            return Err(IngestError::MalformedHeader {
                expected: TREND_HEADER,
                found: names.join(","),
            })
        }
    };

    let mut points = Vec::new();
    for result in reader.records() {
        let record = result.map_err(row_error)?;
        let line = record_line(&record);
        let date = parse_date(&record, 0, line)?;
        let score = parse_value(&record, 1, "score", line)?;
        let scale = if has_scale {
            parse_value(&record, 2, "scale", line)?
        } else {
            T::one()
        };
        let point = TrendPoint::new(date, score, scale).map_err(|err| IngestError::BadRow {
            line,
            reason: err.to_string(),
        })?;
        points.push(point);
    }
    sort_and_check_dates(&mut points, TrendPoint::date)?;
    Ok(points)
}

/// Parses a merged snapshot written by [`write_snapshots`].
pub fn parse_merged_csv<T: Scalar>(
    raw: impl io::Read,
) -> Result<Vec<MergedRecord<T>>, IngestError> {
    let mut reader = open_reader(raw);
    let names = header_names(&mut reader, MERGED_HEADER)?;
    let expected = ["date", "open", "high", "low", "close", "score", "scale"];
    if names != expected {
        return Err(IngestError::MalformedHeader {
            expected: MERGED_HEADER,
            found: names.join(","),
        });
    }

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(row_error)?;
        let line = record_line(&record);
        let date = parse_date(&record, 0, line)?;
        let open = parse_value(&record, 1, "open", line)?;
        let high = parse_value(&record, 2, "high", line)?;
        let low = parse_value(&record, 3, "low", line)?;
        let close = parse_value(&record, 4, "close", line)?;
        let score = parse_value(&record, 5, "score", line)?;
        let scale = parse_value(&record, 6, "scale", line)?;
        let merged =
            MergedRecord::new(date, open, high, low, close, score, scale).map_err(|err| {
                IngestError::BadRow {
                    line,
                    reason: err.to_string(),
                }
            })?;
        records.push(merged);
    }
    sort_and_check_dates(&mut records, MergedRecord::date)?;
    Ok(records)
}

fn read_file(path: &Path) -> Result<fs::File, IngestError> {
    fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_price_file<T: Scalar>(path: &Path) -> Result<Vec<PriceBar<T>>, IngestError> {
    parse_price_csv(read_file(path)?)
}

pub fn parse_trend_file<T: Scalar>(path: &Path) -> Result<Vec<TrendPoint<T>>, IngestError> {
    parse_trend_csv(read_file(path)?)
}

pub fn parse_merged_file<T: Scalar>(path: &Path) -> Result<Vec<MergedRecord<T>>, IngestError> {
    parse_merged_csv(read_file(path)?)
}

/// The three per-company snapshot files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotPaths {
    pub trend: PathBuf,
    pub value: PathBuf,
    pub merged: PathBuf,
}

impl SnapshotPaths {
    pub fn for_ticker(dir: &Path, ticker: &str) -> Self {
        Self {
            trend: dir.join(format!("{ticker}_trend.csv")),
            value: dir.join(format!("{ticker}_value.csv")),
            merged: dir.join(format!("{ticker}_merged.csv")),
        }
    }
}

fn price_text<T: Scalar>(value: T) -> String {
    format!("{value:.6}")
}

fn trend_text<T: Scalar>(value: T) -> String {
    format!("{value}")
}

/// Persists the cleaned trend, value, and merged snapshots for one company.
///
/// Dates are ISO-8601, prices carry six decimal places, rows are in date
/// order, and re-running on identical inputs produces byte-identical files.
pub fn write_snapshots<T: Scalar>(
    out_dir: &Path,
    ticker: &str,
    prices: &[PriceBar<T>],
    trends: &[TrendPoint<T>],
    merged: &[MergedRecord<T>],
) -> Result<SnapshotPaths, IngestError> {
    fs::create_dir_all(out_dir).map_err(|source| IngestError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let paths = SnapshotPaths::for_ticker(out_dir, ticker);

    let mut trend_body = String::from("Date,Score,Scale\n");
    for point in trends {
        let _ = writeln!(
            trend_body,
            "{},{},{}",
            point.date(),
            trend_text(point.score()),
            trend_text(point.scale()),
        );
    }

    let mut value_body = String::from("Date,Open,High,Low,Close\n");
    for bar in prices {
        let _ = writeln!(
            value_body,
            "{},{},{},{},{}",
            bar.date(),
            price_text(bar.open()),
            price_text(bar.high()),
            price_text(bar.low()),
            price_text(bar.close()),
        );
    }

    let mut merged_body = String::from("Date,Open,High,Low,Close,Score,Scale\n");
    for record in merged {
        let _ = writeln!(
            merged_body,
            "{},{},{},{},{},{},{}",
            record.date(),
            price_text(record.open()),
            price_text(record.high()),
            price_text(record.low()),
            price_text(record.close()),
            trend_text(record.score()),
            trend_text(record.scale()),
        );
    }

    for (path, body) in [
        (&paths.trend, trend_body),
        (&paths.value, value_body),
        (&paths.merged, merged_body),
    ] {
        fs::write(path, body).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(paths)
}

/// One field that failed re-derivation, with both renderings.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct FieldMismatch {
    pub date: NaiveDate,
    pub field: &'static str,
    pub snapshot: String,
    pub source: String,
}

/// Result of the seeded snapshot spot check.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VerificationReport {
    pub sampled: usize,
    pub mismatches: Vec<FieldMismatch>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Picks `k` distinct indices out of `n` deterministically for the given
/// seed, returned ascending. When `k >= n` every index is returned exactly
/// once.
fn sample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut pool: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..k {
        let j = i + (rng.next_u64() as usize) % (n - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Re-derives a seeded sample of merged snapshot rows from the raw inputs
/// and reports every field that disagrees. Comparison happens at snapshot
/// precision (six decimal places for prices), so a healthy pipeline yields
/// zero mismatches. Mismatches are report content, not errors.
pub fn verify_against_source<T: Scalar>(
    snapshot: &CompanySeries<T>,
    raw_prices: &[PriceBar<T>],
    raw_trends: &[TrendPoint<T>],
    sample_size: usize,
    seed: u64,
) -> VerificationReport {
    let records = snapshot.records();
    let indices = sample_indices(records.len(), sample_size, seed);
    let mut mismatches = Vec::new();

    for &idx in &indices {
        let record = &records[idx];
        let date = record.date();
        match raw_prices.iter().find(|bar| bar.date() == date) {
            None => mismatches.push(FieldMismatch {
                date,
                field: "price row",
                snapshot: "present".into(),
                source: "absent".into(),
            }),
            Some(bar) => {
                let pairs = [
                    ("open", record.open(), bar.open()),
                    ("high", record.high(), bar.high()),
                    ("low", record.low(), bar.low()),
                    ("close", record.close(), bar.close()),
                ];
                for (field, snap, src) in pairs {
                    let snap = price_text(snap);
                    let src = price_text(src);
                    if snap != src {
                        mismatches.push(FieldMismatch {
                            date,
                            field,
                            snapshot: snap,
                            source: src,
                        });
                    }
                }
            }
        }
        match raw_trends.iter().find(|point| point.date() == date) {
            None => mismatches.push(FieldMismatch {
                date,
                field: "trend row",
                snapshot: "present".into(),
                source: "absent".into(),
            }),
            Some(point) => {
                let pairs = [
                    ("score", record.score(), point.score()),
                    ("scale", record.scale(), point.scale()),
                ];
                for (field, snap, src) in pairs {
                    let snap = trend_text(snap);
                    let src = trend_text(src);
                    if snap != src {
                        mismatches.push(FieldMismatch {
                            date,
                            field,
                            snapshot: snap,
                            source: src,
                        });
                    }
                }
            }
        }
    }
    VerificationReport {
        sampled: indices.len(),
        mismatches,
    }
}
