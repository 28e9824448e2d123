//! One-dimensional Faber–Schauder analysis and Hölder diagnostics.
//!
//! For a continuous `f` on `[0,1]`,
//!
//! ```text
//! f(x) − f(0) = a_{-1} x + Σ_n Σ_k a_{n,k} f_{n,k}(x)
//! a_{-1}  = f(1) − f(0)
//! a_{n,k} = 2^{n/2+1} (f(m) − (f(l) + f(r))/2)
//! ```
//!
//! with `l, m, r` the endpoints and midpoint of the `k`-th generation-`n`
//! interval. The tents `f_{n,k}` peak at `2^{-n/2-1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::charge::FaberCoeffs;
use crate::dyadic::VertexField;
use crate::error::{check_unit_exponent, Error, Result};
use crate::scalar::{ls_fit, pow2, sqrt2_pow, Scalar};

/// Largest resolution for which [`grid_seminorm`] compares all vertex pairs
/// in one dimension.
pub const ALL_PAIRS_MAX_RESOLUTION: u32 = 12;

fn check_1d<T: Scalar>(f: &VertexField<T>) -> Result<()> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    Ok(())
}

/// Faber–Schauder coefficients for generations `n < depth`.
///
/// The value `f(0)` is invisible to every coefficient; synthesis returns
/// `f − f(0)`.
pub fn analyze_1d<T: Scalar>(f: &VertexField<T>, depth: u32) -> Result<FaberCoeffs<T>> {
    check_1d(f)?;
    let res = f.resolution();
    if depth > res {
        return Err(Error::DepthExceedsResolution {
            depth,
            resolution: res,
        });
    }
    let v = f.values();
    let half = T::lit(0.5);
    let levels = (0..depth)
        .map(|n| {
            let step = 1usize << (res - n);
            let scale: T = sqrt2_pow(n as i64 + 2);
            (0..1usize << n)
                .into_par_iter()
                .map(|k| {
                    let l = k * step;
                    scale * (v[l + step / 2] - (v[l] + v[l + step]) * half)
                })
                .collect()
        })
        .collect();
    FaberCoeffs::new(1, v[v.len() - 1] - v[0], levels)
}

/// Partial sum `a_{-1} x + Σ_{n<depth} Σ_k a_{n,k} f_{n,k}(x)` at every
/// vertex of the resolution-`resolution` grid.
pub fn synthesize_1d<T: Scalar>(coeffs: &FaberCoeffs<T>, resolution: u32) -> Result<VertexField<T>> {
    if coeffs.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: coeffs.dim(),
        });
    }
    if coeffs.depth() > resolution {
        return Err(Error::DepthExceedsResolution {
            depth: coeffs.depth(),
            resolution,
        });
    }
    let m = 1usize << resolution;
    let h: T = pow2(-(resolution as i32));
    let a_ex = coeffs.exceptional();
    let values: Vec<T> = (0..=m)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                // every basis function vanishes at 0; avoid a signed zero
                return T::zero();
            }
            let mut acc = a_ex * T::lit(j as f64) * h;
            for n in 0..coeffs.depth() {
                let shift = resolution - n;
                let k = (j >> shift).min((1usize << n) - 1);
                let t = j - (k << shift);
                let len = 1usize << shift;
                // distance in grid steps to the nearer endpoint
                let near = t.min(len - t);
                if near == 0 {
                    continue;
                }
                let slope: T = sqrt2_pow(n as i64);
                acc += coeffs.level(n)[k] * slope * T::lit(near as f64) * h;
            }
            acc
        })
        .collect();
    VertexField::new(1, resolution, values)
}

/// Discrete Hölder seminorm `sup |f(y) − f(x)| / |y − x|^β` over vertex pairs.
///
/// In one dimension with resolution at most [`ALL_PAIRS_MAX_RESOLUTION`] all
/// pairs are compared; otherwise only axis-parallel pairs at dyadic
/// distances `2^{-m}`.
pub fn grid_seminorm<T: Scalar>(f: &VertexField<T>, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::exponent("beta", beta));
    }
    let res = f.resolution();
    if f.dim() == 1 && res <= ALL_PAIRS_MAX_RESOLUTION {
        let v = f.values();
        let h = (-(res as f64)).exp2();
        let denom: Vec<f64> = (0..v.len()).map(|s| (s as f64 * h).powf(beta)).collect();
        return Ok((0..v.len())
            .into_par_iter()
            .map(|i| {
                let vi = v[i].as_f64();
                (i + 1..v.len())
                    .map(|j| (v[j].as_f64() - vi).abs() / denom[j - i])
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max));
    }
    Ok(scale_oscillations(f)
        .iter()
        .enumerate()
        .map(|(m, &osc)| osc / (-(m as f64) * beta).exp2())
        .fold(0.0, f64::max))
}

/// `osc_m = max |f(x + 2^{-m} e_i) − f(x)|` over grid vertices and axes,
/// for `m = 0..=resolution`.
pub fn scale_oscillations<T: Scalar>(f: &VertexField<T>) -> Vec<f64> {
    let res = f.resolution();
    let d = f.dim();
    let p = f.points_per_axis();
    let v = f.values();
    (0..=res)
        .map(|m| {
            let step = 1usize << (res - m);
            (0..v.len())
                .into_par_iter()
                .map(|flat| {
                    let mut best = 0.0f64;
                    let mut stride = 1usize;
                    for _axis in 0..d {
                        let coord = (flat / stride) % p;
                        if coord + step < p {
                            let diff = (v[flat + step * stride] - v[flat]).as_f64().abs();
                            best = best.max(diff);
                        }
                        stride *= p;
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect()
}

/// Hölder exponent suggested by the decay of [`scale_oscillations`]; fitted
/// on scales `m ≥ 1` with nonzero oscillation, clipped to `[0, 1]`.
pub fn oscillation_exponent<T: Scalar>(f: &VertexField<T>) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = scale_oscillations(f)
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, o)| o > 0.0)
        .map(|(m, o)| (m as f64, o.log2()))
        .unzip();
    ls_fit(&xs, &ys).map(|fit| (-fit.slope).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub gamma: f64,
    /// `max{|a_{-1}|, sup_{n,k} 2^{n(γ−1/2)} |a_{n,k}|}`
    pub coeff_norm: f64,
    pub grid_seminorm: f64,
    /// `coeff_norm / grid_seminorm`, reported, never asserted.
    pub norm_ratio: Option<f64>,
    /// `(n, log2 max_k |a_{n,k}|)` for every generation with a nonzero coefficient.
    pub log2_max_coeff: Vec<(u32, f64)>,
    /// `1/2 − slope` of `log2 max_k |a_{n,k}|` over `2 ≤ n ≤ N − 2`.
    pub gamma_hat: Option<f64>,
    /// Largest `2^{n(γ−1/2)} |a_{n,k}| / (2^{1−γ} [f]_γ)`.
    pub bound_ratio: f64,
    pub bound_holds: bool,
    pub warnings: Vec<String>,
}

/// Coefficient-side and grid-side Hölder diagnostics of a 1D field.
pub fn holder_estimate<T: Scalar>(f: &VertexField<T>, gamma: f64) -> Result<HolderEstimate> {
    check_1d(f)?;
    check_unit_exponent("gamma", gamma)?;
    let res = f.resolution();
    let coeffs = analyze_1d(f, res)?;
    let seminorm = grid_seminorm(f, gamma)?;

    let mut sup = 0.0f64;
    let mut log2_max_coeff = Vec::new();
    for n in 0..coeffs.depth() {
        let m = coeffs.max_abs_at(n).as_f64();
        sup = sup.max((n as f64 * (gamma - 0.5)).exp2() * m);
        if m > 0.0 {
            log2_max_coeff.push((n, m.log2()));
        }
    }
    let coeff_norm = coeffs.exceptional().as_f64().abs().max(sup);
    let bound = (1.0 - gamma).exp2() * seminorm;
    let bound_ratio = if bound > 0.0 {
        sup / bound
    } else if sup == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let bound_holds = sup <= bound * (1.0 + 1e-12) + f64::MIN_POSITIVE;

    let top = res.saturating_sub(2);
    let (xs, ys): (Vec<f64>, Vec<f64>) = log2_max_coeff
        .iter()
        .filter(|(n, _)| *n >= 2 && *n <= top)
        .map(|&(n, l)| (n as f64, l))
        .unzip();
    let gamma_hat = ls_fit(&xs, &ys).map(|fit| 0.5 - fit.slope);
    let mut warnings = Vec::new();
    match gamma_hat {
        Some(g) if !(0.0..=1.0).contains(&g) => warnings.push(format!(
            "fitted exponent {g:.4} lies outside (0, 1)"
        )),
        None => warnings.push("too few generations to fit an exponent".into()),
        _ => {}
    }
    Ok(HolderEstimate {
        gamma,
        coeff_norm,
        grid_seminorm: seminorm,
        norm_ratio: (seminorm > 0.0).then(|| coeff_norm / seminorm),
        log2_max_coeff,
        gamma_hat,
        bound_ratio,
        bound_holds,
        warnings,
    })
}
