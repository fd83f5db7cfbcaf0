//! Floating point abstraction shared by every algorithm in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for weights, times, speeds and energies: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Default relative tolerance of the convex solver for this precision.
    const SOLVER_TOL: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const SOLVER_TOL: f64 = 1e-4;
}

impl Scalar for f64 {
    const SOLVER_TOL: f64 = 1e-9;
}

/// `a <= b` up to a relative tolerance on `b`.
#[inline]
pub fn le_rel<T: Scalar>(a: T, b: T, rtol: T) -> bool {
    a <= b + rtol * (T::one() + b.abs())
}
