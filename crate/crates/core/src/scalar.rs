//! Scalar abstraction shared by the spectral, dynamics and certification code.
//!
//! Everything numeric in this crate is written against [`Scalar`], with
//! implementations for `f32`, `f64` and [`DoubleDouble`]. The
//! extended type matters in practice: for distant vertex pairs the top
//! eigenvalue gap shrinks like `Q^{1-d}` and drops below `f64` rounding long
//! before the loop weights get large.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, NumAssign};
use crate::dd::DoubleDouble;

/// Real field the numerical core is generic over.
///
/// Conversions go through this trait rather than `NumCast` so that a failed
/// conversion can never silently happen in the middle of a computation.
pub trait Scalar:
    Float + FloatConst + NumAssign + Copy + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Unit roundoff of basic arithmetic (half an ulp at 1.0, conservatively rounded up).
    const UNIT_ROUNDOFF: f64;
    /// Short name used in reports.
    const NAME: &'static str;

    fn cast(x: f64) -> Self;
    fn as_f64(self) -> f64;

    #[inline]
    fn from_usize(n: usize) -> Self {
        Self::cast(n as f64)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::PI() + Self::PI()
    }

    /// Reduces an angle into `[-pi, pi]` in working precision.
    fn reduce_angle(theta: Self) -> Self {
        let tau = Self::two_pi();
        theta - (theta / tau).round() * tau
    }
}

impl Scalar for f32 {
    const UNIT_ROUNDOFF: f64 = f32::EPSILON as f64 / 2.0;
    const NAME: &'static str = "f32";

    #[inline]
    fn cast(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
    const NAME: &'static str = "f64";

    #[inline]
    fn cast(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for DoubleDouble {
    // 2^-100: a few bits below the nominal 106-bit significand.
    const UNIT_ROUNDOFF: f64 = 7.888609052210118e-31;
    const NAME: &'static str = "double-double";

    #[inline]
    fn cast(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self.hi() + self.lo()
    }
}

/// Precision requested for a pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Double,
    DoubleDouble,
    /// Double first, escalating when the top eigenpair is too ill-conditioned.
    #[default]
    Auto,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" | "f64" => Ok(Precision::Double),
            "double-double" | "dd" => Ok(Precision::DoubleDouble),
            "auto" => Ok(Precision::Auto),
            other => Err(format!("unknown precision '{other}' (double, double-double, auto)")),
        }
    }
}
