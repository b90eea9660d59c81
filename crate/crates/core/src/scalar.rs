//! Scalar abstraction for the closed-form parts of the library.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the closed-form formulas are evaluated in: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a site offset or separation.
    #[inline]
    fn from_index(n: i64) -> Self {
        Self::from_i64(n).expect("index representable")
    }

    /// Relative tolerance used by iterative solvers: `1e-12`, floored at a few ulps.
    #[inline]
    fn solver_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(8.0))
    }

    /// `acosh(1 + x)` for `x >= 0`, accurate for small `x`.
    #[inline]
    fn acosh1p(x: Self) -> Self {
        (x + (x * (x + Self::lit(2.0))).sqrt()).ln_1p()
    }
}

impl Real for f32 {}
impl Real for f64 {}
