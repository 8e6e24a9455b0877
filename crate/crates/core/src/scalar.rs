use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point storage type for field values: `f32` or `f64`.
///
/// Order-based operations (quantiles, ordinal patterns, cluster scans) run
/// directly on the stored type; everything that accumulates (means, weights,
/// regression) widens to `f64` first.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn to_f64_lossless(self) -> f64;
    fn from_f64_rounded(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64_rounded(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64_rounded(v: f64) -> Self {
        v
    }
}

/// Total order on finite values. Callers guarantee finiteness.
#[inline]
pub(crate) fn cmp_finite<T: PartialOrd>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).expect("finite values compare")
}
