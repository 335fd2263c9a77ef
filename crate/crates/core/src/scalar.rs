//! Floating-point abstraction shared by the dictionary, solver and detector.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the numerical core: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// KKT tolerance the solver defaults to for this precision.
    fn default_kkt_tol() -> Self;

    /// Lossy conversion from `f64`; values used here are always representable.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn default_kkt_tol() -> Self {
        1e-4
    }
}

impl Scalar for f64 {
    fn default_kkt_tol() -> Self {
        1e-8
    }
}

/// Unit triangle `max(0, 1 - |x|)`, the ideal C/A autocorrelation in chips.
pub fn triangle<T: Scalar>(x: T) -> T {
    (T::one() - x.abs()).max(T::zero())
}
