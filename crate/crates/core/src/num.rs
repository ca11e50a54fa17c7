//! Scalar abstraction shared by the numeric kernels.
//!
//! The radio, economics, solar and battery kernels are written once against
//! [`Scalar`] and instantiated for `f64` (the planning pipeline) and `f32`
//! (compact tables, quick what-if sweeps).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Never fails for the supported types.
    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `a` and `b` agree to a relative tolerance, with `tol` as the absolute floor.
pub fn rel_close<T: Scalar>(a: T, b: T, tol: T) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= tol * scale
}
