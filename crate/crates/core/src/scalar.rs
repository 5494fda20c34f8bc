use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};

/// Floating point scalar used by every numeric routine in the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant (tolerances, hyperparameters) into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `tol`, raised to what a sum of `terms` values can resolve at this precision.
    #[inline]
    fn attainable_tol(tol: f64, terms: usize) -> Self {
        Self::lit(tol).max(Self::epsilon() * Self::from_count(4 * terms.max(1)))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
