//! Scalar abstraction shared by every generic container in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance used for additivity checks.
    ///
    /// `1e-12` for `f64`; widened to a few ulps of accumulated rounding for
    /// narrower types.
    fn additivity_rel_tol() -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let target = Self::lit(1e-12);
        if floor > target {
            floor
        } else {
            target
        }
    }

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Exact power of two `2^e`.
#[inline]
pub(crate) fn pow2<T: Scalar>(e: i32) -> T {
    T::lit(2f64.powi(e))
}

/// `2^(e/2)`, exact for even `e`.
#[inline]
pub(crate) fn sqrt2_pow<T: Scalar>(e: i64) -> T {
    if e % 2 == 0 {
        pow2((e / 2) as i32)
    } else {
        T::lit(2f64.powf(e as f64 / 2.0))
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when the fit is exact or has two points.
    pub slope_se: f64,
}

/// Least-squares line through `(xs, ys)`, or `None` with fewer than two
/// distinct abscissae.
pub(crate) fn ls_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
    })
}
