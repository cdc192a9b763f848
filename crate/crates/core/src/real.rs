//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate (DSP, embeddings, classifiers, metrics)
//! is written against [`Real`] rather than a hard-coded float type, so the
//! same pipeline runs in `f32` or `f64`. The shipped CLI and the synthetic
//! corpus use the [`crate::Scalar`] alias (`f64`).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + rustfft::FftNum + 'static
{
    /// Lossless-enough conversion from `f64` for constants and config values.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    /// Conversion to `f64` for reporting.
    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
