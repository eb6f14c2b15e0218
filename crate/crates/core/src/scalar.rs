//! Scalar abstraction for measurement values.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Numeric type carrying measurement values through the analysis.
///
/// Implemented by `f32` and `f64`; all statistics in this crate are written
/// against this trait so the kernels stay independent of the concrete float
/// width.
pub trait Scalar:
    Float + FromPrimitive + Sum + fmt::Display + fmt::Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Sum + fmt::Display + fmt::Debug + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the scalar type.
///
/// Panics only for conversions that cannot fail for real float targets.
pub(crate) fn from_f64<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts a count into the scalar type.
pub(crate) fn from_usize<F: Scalar>(n: usize) -> F {
    F::from_usize(n).expect("count representable in scalar type")
}
