//! Storage scalar abstraction for temperature data.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used to store temperatures: `f32` or `f64`.
///
/// The THS1 container stores `f32`; tests and oracles build `f64`
/// sequences. Averaging always accumulates in `f64` (see
/// [`crate::thermal::spatial_average_3x3`]), so the storage scalar only
/// bounds the quantization of the inputs, not of the estimates.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Widen to the accumulation type.
    #[inline]
    fn to_accum(self) -> f64 {
        self.to_f64().expect("finite float widens to f64")
    }

    /// Narrow from the accumulation type, rounding to storage precision.
    #[inline]
    fn from_accum(value: f64) -> Self {
        Self::from_f64(value).expect("f64 narrows to storage float")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widen_narrow_round_trip() {
        let x = 307.012_f32;
        assert_eq!(f32::from_accum(x.to_accum()), x);
        let y = 307.0123456789_f64;
        assert_eq!(f64::from_accum(y.to_accum()), y);
    }

    #[test]
    fn narrowing_rounds_to_storage_precision() {
        let exact = 307.01234567_f64;
        let narrowed = f32::from_accum(exact);
        assert!((narrowed.to_accum() - exact).abs() < 3.0e-5);
    }
}
