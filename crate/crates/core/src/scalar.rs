use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar accepted by the numerical core.
///
/// `RealField` supplies the arithmetic and the linear algebra (Cholesky,
/// SVD); `ToPrimitive` lets the few routines that need a special function
/// (the normal CDF) evaluate it in `f64`.
pub trait Real: RealField + Copy + ToPrimitive {
    /// Converts an `f64` literal or constant into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
