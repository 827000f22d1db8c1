//! Scalar statistics: compensated summation, means, and the Pearson
//! correlation coefficient.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points, got {actual}")]
    TooFewPoints { actual: usize },
    #[error("{side} series is constant, coefficient undefined")]
    ZeroVariance { side: &'static str },
}

/// Neumaier-compensated sum. Keeps the running error term so long
/// accumulations stay close to the correctly rounded result.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut compensation = T::zero();
    for value in values {
        let tentative = sum + value;
        if sum.abs() >= value.abs() {
            compensation = compensation + ((sum - tentative) + value);
        } else {
            compensation = compensation + ((value - tentative) + sum);
        }
        sum = tentative;
    }
    sum + compensation
}

/// Arithmetic mean with compensated accumulation. Empty input yields zero.
pub fn mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let n = T::from_usize(values.len()).expect("length representable");
    compensated_sum(values.iter().copied()) / n
}

/// Pearson correlation coefficient of two equal-length series.
///
/// Two-pass evaluation: means first, then compensated centered sums. The
/// raw ratio can exceed unity by a rounding hair, so the result is clamped
/// into [-1, 1]. A constant series has no defined coefficient and reports
/// [`StatsError::ZeroVariance`]; callers surface that as an N/A cell.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewPoints { actual: xs.len() });
    }
    let x_mean = mean(xs);
    let y_mean = mean(ys);

    let cross = compensated_sum(
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| (x - x_mean) * (y - y_mean)),
    );
    let x_sq = compensated_sum(xs.iter().map(|&x| (x - x_mean) * (x - x_mean)));
    let y_sq = compensated_sum(ys.iter().map(|&y| (y - y_mean) * (y - y_mean)));

    if x_sq == T::zero() {
        return Err(StatsError::ZeroVariance { side: "left" });
    }
    if y_sq == T::zero() {
        return Err(StatsError::ZeroVariance { side: "right" });
    }

    let r = cross / (x_sq * y_sq).sqrt();
    Ok(r.min(T::one()).max(-T::one()))
}
