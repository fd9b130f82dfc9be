use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Numeric precision of a tensor element type.
///
/// Training runs in single precision; gradient checking instantiates the
/// same graph code at double precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

/// Scalar element type the tensor engine is generic over.
pub trait Element:
    Float + Sum + Copy + PartialOrd + Debug + Display + Default + Send + Sync + 'static
{
    const PRECISION: Precision;

    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Element for f32 {
    const PRECISION: Precision = Precision::Single;

    #[inline(always)]
    fn of_f64(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Element for f64 {
    const PRECISION: Precision = Precision::Double;

    #[inline(always)]
    fn of_f64(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}
