//! Scalar abstraction for the scoring formulas.
//!
//! All weighting math is written against [`Real`] so it can run at `f32` or
//! `f64`; the pipeline instantiates it at [`crate::Score`]. Counts stay `u64`
//! everywhere and are converted at the edge via [`Real::count`].

use num_traits::{Float, FromPrimitive};

pub trait Real: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {
    /// Lossy conversion from a publication/term count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    /// Conversion from an `f64` parameter such as `m` or `alpha`.
    fn param(x: f64) -> Self {
        Self::from_f64(x).expect("parameter representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Rounds to `digits` significant decimal digits.
///
/// Zero and non-finite values pass through unchanged. Used by the ranking
/// contract to decide score ties before the deterministic tie-break.
pub fn round_sig<F: Real>(x: F, digits: u32) -> F {
    if x == F::zero() || !x.is_finite() {
        return x;
    }
    let ten = F::from_u32(10).unwrap();
    let exp = x.abs().log10().floor();
    let shift = F::from_u32(digits - 1).unwrap() - exp;
    let factor = ten.powf(shift);
    (x * factor).round() / factor
}
