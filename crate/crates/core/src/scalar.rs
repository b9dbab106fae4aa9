//! Floating-point scalar abstraction shared by the geometric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the geometry and point-field code is written against: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Clamp tolerance applied to `acos`/`sqrt` arguments at tangency.
    fn clamp_tol() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn clamp_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn clamp_tol() -> Self {
        1e-6
    }
}
