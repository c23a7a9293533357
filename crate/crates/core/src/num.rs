//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra as na;
use num_traits as nt;

/// Floating point scalar the simulator is generic over.
///
/// `f64` is the reference type; `f32` works everywhere but inherits looser
/// validation tolerances through [`Real::sum_tolerance`].
pub trait Real:
    na::RealField + nt::FromPrimitive + nt::ToPrimitive + Copy + Debug + Display + Sum + Send + Sync + 'static
{
    /// Tolerance used when validating that weights sum to one.
    fn sum_tolerance() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as nt::FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($f:ty, $tol:expr) => {
        impl Real for $f {
            #[inline]
            fn sum_tolerance() -> Self {
                $tol
            }
        }
    };
}

impl_real!(f32, 1e-5);
impl_real!(f64, 1e-9);
