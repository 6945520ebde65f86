//! Scalar abstraction.
//!
//! Every numeric kernel in this crate is generic over [`Real`], so the same
//! code runs in `f32` or `f64`. The crate root exports `f64` aliases for the
//! public types; `f64` is the default everywhere precision matters (gradient
//! checks at 1e-4 tolerance are not reliable in single precision).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Lifts an `f64` constant into the scalar type.
#[inline]
pub fn real<S: Real>(v: f64) -> S {
    S::from_f64(v).expect("constant not representable in scalar type")
}

/// Mean of a slice. Returns zero for an empty slice.
pub fn mean<S: Real>(values: &[S]) -> S {
    if values.is_empty() {
        return S::zero();
    }
    values.iter().copied().sum::<S>() / real(values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_converts_constants() {
        assert_eq!(real::<f64>(0.25), 0.25);
        assert_eq!(real::<f32>(0.25), 0.25f32);
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(mean::<f64>(&[]), 0.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
    }
}
