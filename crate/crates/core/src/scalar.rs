//! Floating-point abstraction shared by the model, bound and estimator code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the estimation core is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Relative tolerance used by conditioning checks.
    fn conditioning_eps() -> Self;
}

impl Real for f32 {
    fn conditioning_eps() -> Self {
        1e-6
    }
}

impl Real for f64 {
    fn conditioning_eps() -> Self {
        1e-12
    }
}

/// Maps an angle onto `[0, period)`.
pub fn wrap_to_period<T: Real>(angle: T, period: T) -> T {
    let r = angle % period;
    let r = if r < T::zero() { r + period } else { r };
    // `r + period` can round up to exactly `period` for tiny negative inputs
    if r >= period {
        T::zero()
    } else {
        r
    }
}

/// Signed difference `a - b` wrapped into `[-period/2, period/2)`.
pub fn wrapped_difference<T: Real>(a: T, b: T, period: T) -> T {
    let half = period / T::lit(2.0);
    wrap_to_period(a - b + half, period) - half
}

/// Distance between two angles on a circle of the given period.
pub fn circular_distance<T: Real>(a: T, b: T, period: T) -> T {
    wrapped_difference(a, b, period).abs()
}
