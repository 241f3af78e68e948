//! Scalar abstraction shared by the density, state-space and model layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the generic numerical core (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `ln(2π)`
    #[inline]
    fn ln_2pi() -> Self {
        Self::c(1.837_877_066_409_345_5)
    }

    /// Log-density of `N(mean, var)` at `x`.
    #[inline]
    fn ln_normal_pdf(x: Self, mean: Self, var: Self) -> Self {
        let d = x - mean;
        Self::c(-0.5) * (Self::ln_2pi() + var.ln() + d * d / var)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Numerically stable `ln Σ exp(x_i)`; returns `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp<F: Real>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if !max.is_finite() {
        return max;
    }
    let s: F = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}
