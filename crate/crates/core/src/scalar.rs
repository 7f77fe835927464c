//! Scalar abstraction shared by every numerical module.
//!
//! The solver is written once against [`Real`]; the crate root exposes
//! `f64` aliases for the common case.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating point type usable by the spectral solver.
pub trait Real: Float + FloatConst + FftNum + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("literal representable in scalar type")
    }

    /// Conversion from a count or index.
    fn from_count(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FloatConst + FftNum + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static {}

/// `1 + ε` style relative comparison helper used by invariant checks.
pub fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}
