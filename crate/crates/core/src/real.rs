//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra as na;
use num_traits as nt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar usable by the kernels, solvers and diagnostics.
///
/// Implemented for `f32` and `f64`. Infinite values are used as the
/// divergence marker for energies and shell integrals.
pub trait Real:
    Copy
    + na::RealField
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    #[inline]
    fn nan() -> Self {
        Self::lit(f64::NAN)
    }

    #[inline]
    fn epsilon() -> Self {
        Self::default_epsilon()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as nt::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_infinite_pos(self) -> bool {
        self.to_f64_lossy() == f64::INFINITY
    }

    #[inline]
    fn finite(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Euclidean norm of `a - b`.
#[inline]
pub(crate) fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}

#[inline]
pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    a.iter()
        .map(|&x| x * x)
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}

#[inline]
#[allow(clippy::eq_op)]
pub(crate) fn is_nan<T: Real>(x: T) -> bool {
    x != x
}
