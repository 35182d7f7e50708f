//! Floating-point abstraction so every kernel works for both `f32` and `f64`.

use num_traits::{Float, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display, LowerExp};

/// Real scalar type the solvers are generic over.
///
/// `of` converts literals written as `f64`; for `f32` this rounds once, which
/// is exact for the tolerances and small integers used throughout.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Convert a count into this scalar type (exact for the sizes we handle).
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
