//! Scalar abstraction for the numeric pipeline.
//!
//! All statistics and domain types are generic over [`Scalar`] so the same
//! code runs at `f32` or `f64` precision. The crate root exposes `f64`
//! aliases for the common case.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + Debug + Copy + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}
