//! Floating-point abstraction for the learning code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by the value network, replay buffer and reward math.
///
/// Implemented for `f32` and `f64`. Simulation quantities (minutes, counts) stay
/// `f64`/integers and are converted at the state/reward boundary.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    /// Widening conversion to `f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Short tag written into checkpoints.
    const TAG: &'static str;
}

impl Real for f32 {
    const TAG: &'static str = "f32";
}

impl Real for f64 {
    const TAG: &'static str = "f64";
}
