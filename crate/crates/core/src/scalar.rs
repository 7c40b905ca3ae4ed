//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating point scalar usable by the numerics: `f32` or `f64`.
///
/// Everything in the crate is generic over this trait. The root of the
/// crate exposes `f64` aliases for the common types.
pub trait Real:
    Float + FloatConst + FftNum + Sum + Display + LowerExp + Default + Debug
{
}

impl<T> Real for T where
    T: Float + FloatConst + FftNum + Sum + Display + LowerExp + Default + Debug
{
}

/// Lossless-enough conversion of an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
