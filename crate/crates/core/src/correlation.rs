//! Correlation rows, pairwise matrices, the scale control check, strength
//! classification, and table aggregation.

use thiserror::Error;

use crate::model::{CompanySeries, WindowLabel};
use crate::scalar::Scalar;
use crate::stats::{self, StatsError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("cannot aggregate an empty row set")]
    EmptyInput,
}

/// Price column of a report row, in table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriceField {
    Open,
    Close,
    High,
    Low,
}

impl PriceField {
    pub const ALL: [PriceField; 4] = [
        PriceField::Open,
        PriceField::Close,
        PriceField::High,
        PriceField::Low,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PriceField::Open => "Open",
            PriceField::Close => "Close",
            PriceField::High => "High",
            PriceField::Low => "Low",
        }
    }

    fn index(self) -> usize {
        match self {
            PriceField::Open => 0,
            PriceField::Close => 1,
            PriceField::High => 2,
            PriceField::Low => 3,
        }
    }
}

/// Column of the all-factors pairwise matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixColumn {
    Open,
    High,
    Low,
    Close,
    Score,
    Scale,
}

impl MatrixColumn {
    pub const ALL: [MatrixColumn; 6] = [
        MatrixColumn::Open,
        MatrixColumn::High,
        MatrixColumn::Low,
        MatrixColumn::Close,
        MatrixColumn::Score,
        MatrixColumn::Scale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixColumn::Open => "Open",
            MatrixColumn::High => "High",
            MatrixColumn::Low => "Low",
            MatrixColumn::Close => "Close",
            MatrixColumn::Score => "Score",
            MatrixColumn::Scale => "Scale",
        }
    }

    fn index(self) -> usize {
        match self {
            MatrixColumn::Open => 0,
            MatrixColumn::High => 1,
            MatrixColumn::Low => 2,
            MatrixColumn::Close => 3,
            MatrixColumn::Score => 4,
            MatrixColumn::Scale => 5,
        }
    }

    fn extract<T: Scalar>(self, series: &CompanySeries<T>) -> Vec<T> {
        let records = series.records();
        match self {
            MatrixColumn::Open => records.iter().map(|r| r.open()).collect(),
            MatrixColumn::High => records.iter().map(|r| r.high()).collect(),
            MatrixColumn::Low => records.iter().map(|r| r.low()).collect(),
            MatrixColumn::Close => records.iter().map(|r| r.close()).collect(),
            MatrixColumn::Score => records.iter().map(|r| r.score()).collect(),
            MatrixColumn::Scale => records.iter().map(|r| r.scale()).collect(),
        }
    }

    fn for_price(field: PriceField) -> MatrixColumn {
        match field {
            PriceField::Open => MatrixColumn::Open,
            PriceField::Close => MatrixColumn::Close,
            PriceField::High => MatrixColumn::High,
            PriceField::Low => MatrixColumn::Low,
        }
    }
}

/// One report-table row: the trend-vs-price coefficient per price column
/// plus their mean. A degenerate cell (constant column, too few points) is
/// `None` and renders as N/A; it is never treated as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow<T: Scalar> {
    company: String,
    window: WindowLabel,
    cells: [Option<T>; 4],
    avg: Option<T>,
}

impl<T: Scalar> CorrelationRow<T> {
    /// Builds a row from the four coefficients; the average is the
    /// arithmetic mean when all four are present and N/A otherwise.
    pub fn from_coefficients(
        company: impl Into<String>,
        window: WindowLabel,
        cells: [Option<T>; 4],
    ) -> Self {
        let avg = if cells.iter().all(Option::is_some) {
            let values: Vec<T> = cells.iter().map(|c| c.unwrap()).collect();
            Some(stats::mean(&values))
        } else {
            None
        };
        Self {
            company: company.into(),
            window,
            cells,
            avg,
        }
    }

    /// Row for a company excluded from this window (no event date): every
    /// cell is N/A.
    pub fn not_applicable(company: impl Into<String>, window: WindowLabel) -> Self {
        Self::from_coefficients(company, window, [None; 4])
    }

    pub fn company(&self) -> &str {
        &self.company
    }
    pub fn window(&self) -> WindowLabel {
        self.window
    }
    pub fn cell(&self, field: PriceField) -> Option<T> {
        self.cells[field.index()]
    }
    pub fn avg(&self) -> Option<T> {
        self.avg
    }
    pub fn is_all_na(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }
}

/// A full report table: one row per company plus the per-column average row.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable<T: Scalar> {
    window: WindowLabel,
    rows: Vec<CorrelationRow<T>>,
    average_row: CorrelationRow<T>,
}

impl<T: Scalar> CorrelationTable<T> {
    pub fn window(&self) -> WindowLabel {
        self.window
    }
    pub fn rows(&self) -> &[CorrelationRow<T>] {
        &self.rows
    }
    pub fn average_row(&self) -> &CorrelationRow<T> {
        &self.average_row
    }
}

/// Qualitative strength of a coefficient, by absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strength {
    Negligible,
    Weak,
    Moderate,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
    None,
}

/// Report color: green for clearly positive, red for clearly negative,
/// orange for everything in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportColor {
    Green,
    Orange,
    Red,
}

impl ReportColor {
    /// Annotation token used in text report formats.
    pub fn token(self) -> &'static str {
        match self {
            ReportColor::Green => "[G]",
            ReportColor::Orange => "[O]",
            ReportColor::Red => "[R]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrengthBand {
    pub strength: Strength,
    pub sign: Sign,
    pub color: ReportColor,
}

/// Classifies a finite coefficient in [-1, 1].
///
/// Bands partition [0, 1] by absolute value: [0, 0.1] negligible,
/// (0.1, 0.3) weak, [0.3, 0.6) moderate, [0.6, 1] strong. Color is green
/// above 0.3, red below -0.3, orange otherwise.
pub fn classify<T: Scalar>(r: T) -> StrengthBand {
    debug_assert!(r.is_finite(), "classify expects a finite coefficient");
    let r = r.min(T::one()).max(-T::one());
    let mag = r.abs();
    let negligible = T::from_f64(0.1).unwrap();
    let moderate = T::from_f64(0.3).unwrap();
    let strong = T::from_f64(0.6).unwrap();

    let strength = if mag >= strong {
        Strength::Strong
    } else if mag >= moderate {
        Strength::Moderate
    } else if mag > negligible {
        Strength::Weak
    } else {
        Strength::Negligible
    };
    let sign = if r > T::zero() {
        Sign::Positive
    } else if r < T::zero() {
        Sign::Negative
    } else {
        Sign::None
    };
    let color = if r > moderate {
        ReportColor::Green
    } else if r < -moderate {
        ReportColor::Red
    } else {
        ReportColor::Orange
    };
    StrengthBand {
        strength,
        sign,
        color,
    }
}

/// Renders a coefficient the way reports print it: four decimal places,
/// rounded on the exact value at format time. Aggregation never sees
/// rounded numbers.
pub fn display_rounded<T: Scalar>(value: T) -> String {
    format!("{:.4}", value)
}

/// Computes the trend-vs-price coefficients for one series and window.
/// Degenerate columns surface as N/A cells rather than errors.
pub fn trend_price_row<T: Scalar>(
    series: &CompanySeries<T>,
    window: WindowLabel,
) -> CorrelationRow<T> {
    let scores = series.scores();
    let mut cells = [None; 4];
    for field in PriceField::ALL {
        let prices = MatrixColumn::for_price(field).extract(series);
        cells[field.index()] = match stats::pearson(&scores, &prices) {
            Ok(r) => Some(r),
            Err(StatsError::ZeroVariance { .. }) | Err(StatsError::TooFewPoints { .. }) => None,
            Err(err) => unreachable!("columns of one series cannot mismatch: {err}"),
        };
    }
    CorrelationRow::from_coefficients(series.company(), window, cells)
}

/// Symmetric all-factors correlation matrix over the six series columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix<T: Scalar> {
    cells: [[Option<T>; 6]; 6],
}

impl<T: Scalar> PairwiseMatrix<T> {
    pub fn get(&self, row: MatrixColumn, col: MatrixColumn) -> Option<T> {
        self.cells[row.index()][col.index()]
    }
}

/// Builds the pairwise matrix for a series. The diagonal is exactly 1 for
/// non-constant columns and N/A for constant ones; off-diagonal cells are
/// the pairwise coefficients, mirrored so the matrix is symmetric by
/// construction.
pub fn pairwise_matrix<T: Scalar>(series: &CompanySeries<T>) -> PairwiseMatrix<T> {
    let columns: Vec<Vec<T>> = MatrixColumn::ALL
        .iter()
        .map(|c| c.extract(series))
        .collect();
    let constant: Vec<bool> = columns
        .iter()
        .map(|col| col.len() < 2 || col.iter().all(|v| *v == col[0]))
        .collect();

    let mut cells = [[None; 6]; 6];
    for i in 0..6 {
        if !constant[i] {
            cells[i][i] = Some(T::one());
        }
        for j in (i + 1)..6 {
            let value = stats::pearson(&columns[i], &columns[j]).ok();
            cells[i][j] = value;
            cells[j][i] = value;
        }
    }
    PairwiseMatrix { cells }
}

/// Outcome of the scale control check.
///
/// The scale column rides along purely as a pipeline check: it must
/// correlate with each price column nearly identically to the score column.
/// A constant scale has no coefficients to compare, so the check is skipped
/// and counts as passing.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlCheckResult<T: Scalar> {
    pub deviations: [(PriceField, Option<T>); 4],
    pub max_deviation: Option<T>,
    pub tolerance: T,
    pub pass: bool,
    pub skipped: bool,
    pub note: Option<String>,
}

pub fn control_check<T: Scalar>(matrix: &PairwiseMatrix<T>, tolerance: T) -> ControlCheckResult<T> {
    let mut deviations = [
        (PriceField::Open, None),
        (PriceField::Close, None),
        (PriceField::High, None),
        (PriceField::Low, None),
    ];

    if matrix
        .get(MatrixColumn::Scale, MatrixColumn::Scale)
        .is_none()
    {
        return ControlCheckResult {
            deviations,
            max_deviation: None,
            tolerance,
            pass: true,
            skipped: true,
            note: Some("scale column is constant; control check skipped".into()),
        };
    }

    let mut max_deviation: Option<T> = None;
    for slot in deviations.iter_mut() {
        let price = MatrixColumn::for_price(slot.0);
        let scale_r = matrix.get(MatrixColumn::Scale, price);
        let score_r = matrix.get(MatrixColumn::Score, price);
        if let (Some(a), Some(b)) = (scale_r, score_r) {
            let deviation = (a - b).abs();
            slot.1 = Some(deviation);
            max_deviation = Some(match max_deviation {
                Some(current) => current.max(deviation),
                None => deviation,
            });
        }
    }

    match max_deviation {
        Some(max) => ControlCheckResult {
            deviations,
            max_deviation: Some(max),
            tolerance,
            pass: max <= tolerance,
            skipped: false,
            note: None,
        },
        None => ControlCheckResult {
            deviations,
            max_deviation: None,
            tolerance,
            pass: true,
            skipped: true,
            note: Some("no comparable coefficients; control check skipped".into()),
        },
    }
}

/// Aggregates company rows into a table with a per-column average row.
/// N/A cells are excluded from both numerator and denominator, so a column
/// with no data stays N/A.
pub fn aggregate_table<T: Scalar>(
    rows: Vec<CorrelationRow<T>>,
) -> Result<CorrelationTable<T>, AggregateError> {
    let Some(first) = rows.first() else {
        return Err(AggregateError::EmptyInput);
    };
    let window = first.window();
    debug_assert!(rows.iter().all(|r| r.window() == window));

    let mut cells = [None; 4];
    for field in PriceField::ALL {
        let values: Vec<T> = rows.iter().filter_map(|r| r.cell(field)).collect();
        if !values.is_empty() {
            cells[field.index()] = Some(stats::mean(&values));
        }
    }
    let avg_values: Vec<T> = rows.iter().filter_map(|r| r.avg()).collect();
    let avg = if avg_values.is_empty() {
        None
    } else {
        Some(stats::mean(&avg_values))
    };

    let average_row = CorrelationRow {
        company: "Average".to_string(),
        window,
        cells,
        avg,
    };
    Ok(CorrelationTable {
        window,
        rows,
        average_row,
    })
}
