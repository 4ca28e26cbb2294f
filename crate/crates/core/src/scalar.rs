//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All geometry is written once, generic over [`Scalar`]. Plain `f64`/`f32`
//! give values; [`Dual`](crate::dual::Dual) (possibly nested) gives exact
//! partial derivatives of the very same code path.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + Debug
    + Send
    + Sync
    + 'static
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    /// Innermost real part, with every derivative layer stripped.
    fn re(&self) -> f64;

    /// True when the value and every derivative component are exactly zero.
    fn is_exact_zero(&self) -> bool;

    /// Lift a plain constant.
    #[inline]
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }
}

impl Scalar for f64 {
    #[inline]
    fn re(&self) -> f64 {
        *self
    }

    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for f32 {
    #[inline]
    fn re(&self) -> f64 {
        *self as f64
    }

    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}
