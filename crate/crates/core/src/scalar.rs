//! Floating-point abstraction shared by every numerical routine.

use ndarray::NdFloat;
use num_traits::FromPrimitive;
use serde::Serialize;

/// Real scalar type the library is generic over (`f32` or `f64`).
pub trait Scalar: NdFloat + FromPrimitive + Serialize + Default {
    /// Converts an `f64` literal. Every literal used by the library is representable.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: NdFloat + FromPrimitive + Serialize + Default {}
