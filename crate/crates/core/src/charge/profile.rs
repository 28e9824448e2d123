use rayon::prelude::*;
use serde::Serialize;

use super::{to_faber_coeffs, CubeCharge};
use crate::dyadic::CubeIndex;
use crate::error::{Error, Result};
use crate::scalar::{ls_fit, Scalar};

/// Allowed excess of the fitted coefficient slope over `1 − γ − d/2`.
pub const PROFILE_SLOPE_SLACK: f64 = 0.1;
/// Generations below this are left out of the slope fit.
pub const PROFILE_FIRST_FIT_GEN: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionalProfile {
    pub gamma: f64,
    /// `(d − 1 + γ)/d`
    pub delta: f64,
    /// `M_n = max_K |ω(K)| / |K|^δ`, `n = 0..=depth`.
    pub sup_ratios: Vec<f64>,
    /// `C_n = max_{k,e} |a_{n,k,e}|`, `n = 0..depth`.
    pub coeff_max: Vec<f64>,
    /// Least-squares slope of `log2 C_n` against `n`, when it can be fitted.
    pub decay_slope: Option<f64>,
    /// `1 − γ − d/2`
    pub predicted_slope: f64,
    pub consistent: bool,
    /// `max_n M_n`
    pub c_hat: f64,
}

pub fn fractional_profile<T: Scalar>(cc: &CubeCharge<T>, gamma: f64) -> Result<FractionalProfile> {
    crate::error::check_unit_exponent("gamma", gamma)?;
    let d = cc.dim() as f64;
    let delta = (d - 1.0 + gamma) / d;
    let sup_ratios: Vec<f64> = (0..=cc.depth())
        .map(|n| {
            let vol = (-(n as f64) * d).exp2();
            let m = cc
                .level(n)
                .par_iter()
                .map(|v| v.as_f64().abs())
                .reduce(|| 0.0, f64::max);
            m / vol.powf(delta)
        })
        .collect();
    let coeff_max: Vec<f64> = if cc.depth() >= 1 {
        let fc = to_faber_coeffs(cc)?;
        (0..fc.depth()).map(|n| fc.max_abs_at(n).as_f64()).collect()
    } else {
        Vec::new()
    };

    let (xs, ys): (Vec<f64>, Vec<f64>) = coeff_max
        .iter()
        .enumerate()
        .filter(|&(n, &c)| n as u32 >= PROFILE_FIRST_FIT_GEN && c > 0.0)
        .map(|(n, &c)| (n as f64, c.log2()))
        .unzip();
    let decay_slope = ls_fit(&xs, &ys).map(|f| f.slope);
    let predicted_slope = 1.0 - gamma - d / 2.0;
    let consistent = decay_slope.map_or(true, |s| s <= predicted_slope + PROFILE_SLOPE_SLACK);
    let c_hat = sup_ratios.iter().copied().fold(0.0, f64::max);
    Ok(FractionalProfile {
        gamma,
        delta,
        sup_ratios,
        coeff_max,
        decay_slope,
        predicted_slope,
        consistent,
        c_hat,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderControl {
    pub holds: bool,
    /// Cube maximizing `|ω(K)| / |K|^δ`.
    pub worst_cube: CubeIndex,
    pub worst_ratio: f64,
    /// `|ω(K)| − C|K|^δ` at the worst cube; positive when the bound fails.
    pub worst_excess: f64,
}

/// Checks `|ω(K)| ≤ C |K|^δ` at every stored cube, `δ = (d − 1 + γ)/d`.
///
/// `γ = 1` is accepted and gives `δ = 1`.
pub fn holder_control_check<T: Scalar>(cc: &CubeCharge<T>, c: f64, gamma: f64) -> Result<HolderControl> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidExponent {
            name: "gamma",
            value: gamma,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("constant C = {c} must be >= 0")));
    }
    let d = cc.dim();
    let delta = (d as f64 - 1.0 + gamma) / d as f64;
    let mut holds = true;
    let mut worst = (0u32, 0usize, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 0..=cc.depth() {
        let bound = (-(n as f64) * d as f64).exp2().powf(delta);
        let (k, ratio, excess) = cc
            .level(n)
            .par_iter()
            .enumerate()
            .map(|(k, v)| {
                let a = v.as_f64().abs();
                (k, a / bound, a - c * bound)
            })
            .reduce_with(|a, b| if b.1 > a.1 { b } else { a })
            .expect("non-empty generation");
        let level_fails = cc.level(n).iter().any(|v| v.as_f64().abs() > c * bound);
        holds &= !level_fails;
        if ratio > worst.2 {
            worst = (n, k, ratio, excess);
        }
    }
    Ok(HolderControl {
        holds,
        worst_cube: CubeIndex::from_linear(d, worst.0, worst.1),
        worst_ratio: worst.2,
        worst_excess: worst.3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::{charge_from_increments, CubeTable};
    use crate::dyadic::VertexField;

    #[test]
    fn lebesgue_profile() {
        let l = CubeCharge::<f64>::lebesgue(2, 6).unwrap();
        let p = fractional_profile(&l, 0.5).unwrap();
        assert_eq!(p.delta, 0.75);
        for (n, m) in p.sup_ratios.iter().enumerate() {
            assert!((m - 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-14);
        }
        assert_eq!(p.c_hat, 1.0);
        assert!(p.consistent);
        assert!(p.decay_slope.is_none());
        let one_d = fractional_profile(&CubeCharge::<f64>::lebesgue(1, 3).unwrap(), 0.5).unwrap();
        assert_eq!(one_d.delta, 0.5);
        assert!(fractional_profile(&l, 1.0).is_err());
    }

    #[test]
    fn lebesgue_is_controlled() {
        let l = CubeCharge::<f64>::lebesgue(3, 4).unwrap();
        for g in [0.1, 0.5, 0.9, 1.0] {
            assert!(holder_control_check(&l, 1.0, g).unwrap().holds);
        }
    }

    #[test]
    fn spike_is_reported() {
        let mut leaves = vec![0.0; 64];
        leaves[37] = 1.0;
        let t = CubeTable::sum_from_leaves(2, 3, leaves).unwrap();
        let cc = CubeCharge::from_table(t).unwrap();
        let r = holder_control_check(&cc, 1.0, 0.5).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_cube, CubeIndex::from_linear(2, 3, 37));
        assert!(r.worst_excess > 0.0);
    }

    #[test]
    fn smooth_increments_bounded_by_mixed_derivative() {
        // mixed derivative 2 cos(x) cos(2y) is bounded by 2
        let g = VertexField::<f64>::from_fn(2, 6, |x| x[0].sin() * (2.0 * x[1]).sin()).unwrap();
        let cc = charge_from_increments(&g, 6).unwrap();
        assert!(holder_control_check(&cc, 2.0, 1.0).unwrap().holds);
    }
}
