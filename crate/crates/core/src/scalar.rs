//! Scalar abstraction shared by the distribution and information-measure code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable for channel arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Normalization tolerance: 1e-12, widened to a few ulps for narrow types.
    fn norm_tol() -> Self {
        Self::c(1e-12).max(Self::epsilon() * Self::c(64.0))
    }

    /// `log2(e)`.
    fn log2_e() -> Self {
        Self::c(std::f64::consts::LOG2_E)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
