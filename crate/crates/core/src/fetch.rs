//! Remote price-history acquisition: HTTPS GET against a chart-API
//! endpoint template plus parsing of the JSON payload into validated
//! price bars.

use std::time::Duration;

use chrono::NaiveDate;
use serde_json::Value;

use crate::ingest::{IngestError, PriceSource, SourceConfig};
use crate::model::{AnalysisWindow, PriceBar};
use crate::scalar::Scalar;

/// Transport settings. One retry on transient failures and a 30 second
/// timeout by default.
#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub user_agent: String,
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            user_agent: concat!("eventlens/", env!("CARGO_PKG_VERSION")).to_string(),
            timeout: Duration::from_secs(30),
            retries: 1,
        }
    }
}

/// Parsed chart payload: the validated bars plus how many days were
/// dropped because the quote arrays held nulls for them.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome<T: Scalar> {
    pub bars: Vec<PriceBar<T>>,
    pub skipped_days: usize,
}

/// Fills the `{ticker}`, `{period1}`, `{period2}` placeholders of an
/// endpoint template. Periods are epoch seconds covering the window's
/// start day through the end day inclusive.
pub fn endpoint_url(template: &str, ticker: &str, window: &AnalysisWindow) -> String {
    let period1 = window
        .start()
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp();
    let period2 = (window.end() + chrono::Days::new(1))
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp();
    template
        .replace("{ticker}", ticker)
        .replace("{period1}", &period1.to_string())
        .replace("{period2}", &period2.to_string())
}

fn missing(path: &str) -> IngestError {
    IngestError::UnexpectedPayload {
        path: path.to_string(),
    }
}

fn quote_array<'a>(quote: &'a Value, field: &str, len: usize) -> Result<&'a [Value], IngestError> {
    let path = format!("chart.result[0].indicators.quote[0].{field}");
    let array = quote
        .get(field)
        .and_then(Value::as_array)
        .ok_or_else(|| missing(&path))?;
    if array.len() != len {
        return Err(missing(&format!("{path}[{len} entries]")));
    }
    Ok(array)
}

/// Parses a chart-API v8 JSON payload into validated price bars.
///
/// Expects `chart.result[0].timestamp[]` plus
/// `indicators.quote[0].{open,high,low,close,volume}[]`. A day whose OHLC
/// entries contain a null is skipped (and counted); the surviving rows go
/// through the same validation as the CSV parser.
pub fn parse_chart_payload<T: Scalar>(json: &str) -> Result<FetchOutcome<T>, IngestError> {
    let root: Value = serde_json::from_str(json)
        .map_err(|err| IngestError::Network(format!("payload is not JSON: {err}")))?;

    let chart = root
        .get("chart")
        .filter(|v| !v.is_null())
        .ok_or_else(|| missing("chart"))?;
    let result = chart
        .get("result")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("chart.result"))?;
    let first = result
        .first()
        .filter(|v| !v.is_null())
        .ok_or_else(|| missing("chart.result[0]"))?;
    let timestamps = first
        .get("timestamp")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("chart.result[0].timestamp"))?;
    let quote = first
        .get("indicators")
        .ok_or_else(|| missing("chart.result[0].indicators"))?
        .get("quote")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("chart.result[0].indicators.quote"))?
        .first()
        .filter(|v| !v.is_null())
        .ok_or_else(|| missing("chart.result[0].indicators.quote[0]"))?;

    let n = timestamps.len();
    let opens = quote_array(quote, "open", n)?;
    let highs = quote_array(quote, "high", n)?;
    let lows = quote_array(quote, "low", n)?;
    let closes = quote_array(quote, "close", n)?;
    let volumes = quote_array(quote, "volume", n)?;

    let mut bars: Vec<PriceBar<T>> = Vec::with_capacity(n);
    let mut skipped_days = 0usize;
    for i in 0..n {
        let line = (i + 1) as u64;
        let ts = timestamps[i].as_i64().ok_or_else(|| IngestError::BadRow {
            line,
            reason: format!("invalid timestamp {}", timestamps[i]),
        })?;
        let date: NaiveDate = chrono::DateTime::from_timestamp(ts, 0)
            .ok_or_else(|| IngestError::BadRow {
                line,
                reason: format!("timestamp {ts} out of range"),
            })?
            .date_naive();

        let ohlc = [
            opens[i].as_f64(),
            highs[i].as_f64(),
            lows[i].as_f64(),
            closes[i].as_f64(),
        ];
        let [open, high, low, close] = ohlc;
        let (Some(open), Some(high), Some(low), Some(close)) = (open, high, low, close) else {
            skipped_days += 1;
            continue;
        };
        let volume = match &volumes[i] {
            Value::Null => None,
            value => Some(value.as_u64().ok_or_else(|| IngestError::BadRow {
                line,
                reason: format!("invalid volume {value}"),
            })?),
        };

        let from = |v: f64, name: &str| {
            T::from_f64(v).ok_or_else(|| IngestError::BadRow {
                line,
                reason: format!("invalid {name} {v}"),
            })
        };
        let bar = PriceBar::new(
            date,
            from(open, "open")?,
            from(high, "high")?,
            from(low, "low")?,
            from(close, "close")?,
            volume,
        )
        .map_err(|err| IngestError::BadRow {
            line,
            reason: err.to_string(),
        })?;
        bars.push(bar);
    }

    bars.sort_by_key(PriceBar::date);
    for pair in bars.windows(2) {
        if pair[0].date() == pair[1].date() {
            return Err(IngestError::DuplicateDate {
                date: pair[0].date(),
            });
        }
    }
    Ok(FetchOutcome { bars, skipped_days })
}

fn is_transient(err: &ureq::Error) -> bool {
    matches!(
        err,
        ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::HostNotFound
            | ureq::Error::StatusCode(500..=599)
    )
}

fn get_body(agent: &ureq::Agent, url: &str, user_agent: &str) -> Result<String, ureq::Error> {
    agent
        .get(url)
        .header("User-Agent", user_agent)
        .call()?
        .body_mut()
        .read_to_string()
}

/// Issues the GET for a remote price source and parses the payload.
///
/// The source must be [`PriceSource::Remote`]; fallback handling lives with
/// the pipeline caller. Transient transport failures are retried once per
/// [`FetchOptions::retries`].
pub fn fetch_price_history<T: Scalar>(
    config: &SourceConfig,
    options: &FetchOptions,
) -> Result<FetchOutcome<T>, IngestError> {
    let PriceSource::Remote { endpoint, .. } = &config.price_source else {
        return Err(IngestError::Network(
            "price source is not a remote endpoint".into(),
        ));
    };
    let url = endpoint_url(endpoint, &config.ticker, &config.date_range);

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(options.timeout))
        .build()
        .into();

    let mut attempt = 0;
    let body = loop {
        match get_body(&agent, &url, &options.user_agent) {
            Ok(body) => break body,
            Err(err) if attempt < options.retries && is_transient(&err) => {
                attempt += 1;
            }
            Err(err) => return Err(IngestError::Network(err.to_string())),
        }
    };
    parse_chart_payload(&body)
}
