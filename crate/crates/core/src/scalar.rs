//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry kernels are generic over.
///
/// Finite-difference step sizes depend on the precision of the type, so they
/// live here rather than as global constants.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Central-difference step for first derivatives.
    fn fd_step() -> Self;
    /// Central-difference step for second derivatives.
    fn fd_step2() -> Self;

    /// Converts an `f64` literal. Panics only on values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn fd_step() -> Self {
        1e-5
    }
    #[inline]
    fn fd_step2() -> Self {
        1e-4
    }
}

impl Real for f32 {
    #[inline]
    fn fd_step() -> Self {
        5e-3
    }
    #[inline]
    fn fd_step2() -> Self {
        2e-2
    }
}
