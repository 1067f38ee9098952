//! Scalar abstraction for the numeric parts of the crate.
//!
//! Similarity metrics, correlation statistics and effect sizes are generic
//! over [`Real`] so they can run on `f32` or `f64`. The pipeline instantiates
//! everything with [`crate::Score`].

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + std::fmt::Debug {
    /// Lossless-enough conversion from a set cardinality.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
