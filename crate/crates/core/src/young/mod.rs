//! Dyadic sewing and the Young integral of a Hölder function against a
//! fractional charge.

mod loeve;

pub use loeve::{young_loeve_report, FigureError, YoungLoeveOptions, YoungLoeveReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charge::{
    charge_from_density, fractional_profile, level_len, to_faber_coeffs, CubeCharge, CubeTable,
    FaberCoeffs,
};
use crate::dyadic::cube::lin;
use crate::dyadic::{CellField, CubeIndex, VertexField};
use crate::error::{check_unit_exponent, Error, Result};
use crate::holder::{analyze_1d, oscillation_exponent};
use crate::scalar::{ls_fit, Scalar};

/// Default relative slack on the almost-additivity bound checked by [`sew`].
pub const DEFAULT_SEW_SLACK: f64 = 1e-9;

/// Cube germ `η(K)` for every cube up to a fixed depth; need not be additive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RawGerm<T> {
    table: CubeTable<T>,
}

impl<T: Scalar> RawGerm<T> {
    pub fn new(dim: usize, levels: Vec<Vec<T>>) -> Result<Self> {
        Ok(Self {
            table: CubeTable::new(dim, levels)?,
        })
    }

    pub fn from_fn(dim: usize, depth: u32, f: impl Fn(&CubeIndex) -> T + Sync) -> Result<Self> {
        Ok(Self {
            table: CubeTable::from_fn(dim, depth, f)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn depth(&self) -> u32 {
        self.table.depth()
    }

    pub fn level(&self, gen: u32) -> &[T] {
        self.table.level(gen)
    }

    pub fn table(&self) -> &CubeTable<T> {
        &self.table
    }

    /// Per-cube `|η(K) − Σ_children η(L)|` for generations `0..depth`.
    fn parent_residuals(&self) -> Vec<Vec<T>> {
        let d = self.dim();
        (0..self.depth())
            .map(|n| {
                let child = self.level(n + 1);
                let offs = lin::child_offsets(n, d);
                self.level(n)
                    .par_iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let base = lin::first_child(k, n, d);
                        let s: T = offs.iter().map(|&o| child[base + o]).sum();
                        (v - s).abs()
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SewReport<T> {
    pub result: CubeCharge<T>,
    pub c: f64,
    pub epsilon: f64,
    /// `r_n = max_K |ω(K) − η(K)|`, `n = 0..=depth`.
    pub residuals: Vec<f64>,
    /// Slope of `log2 r_n` against `log2 |K|`; the top generation is left out.
    pub residual_exponent: Option<f64>,
    /// `1 + ε`
    pub expected_exponent: f64,
    /// `max_K |ω(K) − η(K)| / (C |K|^{1+ε})`
    pub kappa_hat: f64,
}

/// Sews an almost-additive germ into an additive charge at the stored depth.
///
/// Every parent residual must satisfy
/// `|η(K) − Σ_L η(L)| ≤ C|K|^{1+ε}(1 + slack) + tol·Σ|η_N|`, where `tol` is the
/// additivity tolerance of the scalar type. The result is
/// `ω(K) = Σ η(L)` over the generation-`depth` cubes `L ⊂ K`.
pub fn sew<T: Scalar>(germ: &RawGerm<T>, c: f64, epsilon: f64) -> Result<SewReport<T>> {
    sew_with_slack(germ, c, epsilon, DEFAULT_SEW_SLACK)
}

pub fn sew_with_slack<T: Scalar>(
    germ: &RawGerm<T>,
    c: f64,
    epsilon: f64,
    slack: f64,
) -> Result<SewReport<T>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("C = {c} must be >= 0")));
    }
    let d = germ.dim();
    let depth = germ.depth();
    let floor = (T::additivity_rel_tol() * germ.table.leaf_scale()).as_f64();
    let vol = |n: u32| (-(n as f64) * d as f64).exp2();

    for (n, res) in germ.parent_residuals().iter().enumerate() {
        let n = n as u32;
        let bound = c * vol(n).powf(1.0 + epsilon) * (1.0 + slack) + floor;
        if let Some((k, r)) = res
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.as_f64()))
            .find(|&(_, r)| r > bound)
        {
            return Err(Error::AlmostAdditivityViolation {
                gen: n,
                index: k,
                residual: r,
                bound,
            });
        }
    }

    let leaves = germ.level(depth).to_vec();
    let result = CubeCharge::from_leaves(d, depth, leaves)?;

    let residuals: Vec<f64> = (0..=depth)
        .map(|n| {
            result
                .level(n)
                .par_iter()
                .zip(germ.level(n).par_iter())
                .map(|(&w, &e)| (w - e).as_f64().abs())
                .reduce(|| 0.0, f64::max)
        })
        .collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = residuals
        .iter()
        .enumerate()
        .take(depth as usize)
        .filter(|&(_, &r)| r > 0.0)
        .map(|(n, &r)| (-(n as f64) * d as f64, r.log2()))
        .unzip();
    let residual_exponent = ls_fit(&xs, &ys).map(|f| f.slope);

    let kappa_hat = residuals
        .iter()
        .enumerate()
        .map(|(n, &r)| {
            let b = c * vol(n as u32).powf(1.0 + epsilon);
            if r == 0.0 {
                0.0
            } else if b > 0.0 {
                r / b
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);

    Ok(SewReport {
        result,
        c,
        epsilon,
        residuals,
        residual_exponent,
        expected_exponent: 1.0 + epsilon,
        kappa_hat,
    })
}

/// Where the germ evaluates `f` inside each cube.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagRule {
    /// `x_K` is the lower corner; always a grid vertex when the field
    /// resolution is at least the charge depth.
    #[default]
    LowerCorner,
    /// `x_K` is the centre; needs field resolution above the charge depth.
    Center,
}

/// `η(K) = f(x_K) ω(K)`.
pub fn germ_young<T: Scalar>(
    f: &VertexField<T>,
    cc: &CubeCharge<T>,
    tag: TagRule,
) -> Result<RawGerm<T>> {
    let d = cc.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    let depth = cc.depth();
    let need = match tag {
        TagRule::LowerCorner => depth,
        TagRule::Center => depth + 1,
    };
    if f.resolution() < need {
        return Err(Error::DepthExceedsResolution {
            depth: need,
            resolution: f.resolution(),
        });
    }
    let res = f.resolution();
    let levels = (0..=depth)
        .map(|n| {
            let w = cc.level(n);
            (0..level_len(d, n))
                .into_par_iter()
                .map_init(
                    || (vec![0usize; d], vec![0usize; d]),
                    |(pos, grid), k| {
                        lin::coords(k, n, d, pos);
                        for (g, &p) in grid.iter_mut().zip(pos.iter()) {
                            *g = match tag {
                                TagRule::LowerCorner => p << (res - n),
                                TagRule::Center => (2 * p + 1) << (res - n - 1),
                            };
                        }
                        f.values()[f.flat_index(grid)] * w[k]
                    },
                )
                .collect()
        })
        .collect();
    RawGerm::new(d, levels)
}

#[derive(Clone, Debug, Serialize)]
pub struct YoungReport<T> {
    pub sew: SewReport<T>,
    pub beta: f64,
    pub gamma: f64,
    pub tag: TagRule,
    /// Exponent of `f` suggested by dyadic oscillations.
    pub beta_estimate: Option<f64>,
    /// Exponent of the charge suggested by `max_K |ω(K)|` against `|K|`.
    pub gamma_estimate: Option<f64>,
    pub warnings: Vec<String>,
}

impl<T> YoungReport<T> {
    pub fn result(&self) -> &CubeCharge<T> {
        &self.sew.result
    }
}

/// Tolerated shortfall of an estimated exponent before a warning is issued.
pub const EXPONENT_WARN_MARGIN: f64 = 0.1;

/// `(Y)∫_• f dω` by sewing the germ `f(x_K) ω(K)`.
///
/// `ε = (β + γ − 1)/d`; `C` is the largest observed ratio of germ residual to
/// `|K|^{1+ε}`.
pub fn young_integral<T: Scalar>(
    f: &VertexField<T>,
    cc: &CubeCharge<T>,
    beta: f64,
    gamma: f64,
    tag: TagRule,
) -> Result<YoungReport<T>> {
    check_unit_exponent("beta", beta)?;
    check_unit_exponent("gamma", gamma)?;
    if beta + gamma <= 1.0 {
        return Err(Error::YoungConditionViolated { sum: beta + gamma });
    }
    let d = cc.dim();
    let epsilon = (beta + gamma - 1.0) / d as f64;
    let germ = germ_young(f, cc, tag)?;
    let c = germ
        .parent_residuals()
        .iter()
        .enumerate()
        .map(|(n, res)| {
            let b = (-(n as f64) * d as f64).exp2().powf(1.0 + epsilon);
            res.iter().map(|r| r.as_f64()).fold(0.0, f64::max) / b
        })
        .fold(0.0, f64::max);
    let sew = sew(&germ, c, epsilon)?;

    let beta_estimate = oscillation_exponent(f);
    let gamma_estimate = charge_exponent(cc);
    let mut warnings = Vec::new();
    if let Some(b) = beta_estimate {
        if b < beta - EXPONENT_WARN_MARGIN {
            warnings.push(format!(
                "declared beta = {beta} but grid oscillations suggest {b:.3}"
            ));
        }
    }
    if let Some(g) = gamma_estimate {
        if g < gamma - EXPONENT_WARN_MARGIN {
            warnings.push(format!(
                "declared gamma = {gamma} but the charge profile suggests {g:.3}"
            ));
        }
    }
    Ok(YoungReport {
        sew,
        beta,
        gamma,
        tag,
        beta_estimate,
        gamma_estimate,
        warnings,
    })
}

/// `γ̂ = d δ̂ − (d − 1)` where `δ̂` is the slope of `log2 max_K |ω(K)|`
/// against `log2 |K|`, clipped to `[0, 1]`.
fn charge_exponent<T: Scalar>(cc: &CubeCharge<T>) -> Option<f64> {
    let d = cc.dim() as f64;
    let profile = fractional_profile(cc, 0.5).ok()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = profile
        .sup_ratios
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, &m)| m > 0.0)
        .map(|(n, &m)| {
            let logvol = -(n as f64) * d;
            (logvol, m.log2() + profile.delta * logvol)
        })
        .unzip();
    let delta_hat = ls_fit(&xs, &ys)?.slope;
    Some((d * delta_hat - (d - 1.0)).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Young1d {
    pub value: f64,
    /// Running value after the exceptional term and after each generation.
    pub partial_sums: Vec<f64>,
}

/// `a_{-1} b_{-1} + Σ_{n<N} Σ_k a_{n,k} b_{n,k}` for Haar coefficients `a`
/// of `f` and Faber–Schauder coefficients `b` of `g` with `g(0) = 0`.
pub fn young_1d<T: Scalar>(a: &FaberCoeffs<T>, b: &FaberCoeffs<T>) -> Result<Young1d> {
    for c in [a, b] {
        if c.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: c.dim(),
            });
        }
    }
    if a.depth() != b.depth() {
        return Err(Error::InvalidParameter(format!(
            "coefficient depths differ: {} vs {}",
            a.depth(),
            b.depth()
        )));
    }
    let mut acc = a.exceptional().as_f64() * b.exceptional().as_f64();
    let mut partial_sums = vec![acc];
    for n in 0..a.depth() {
        acc += a
            .level(n)
            .iter()
            .zip(b.level(n))
            .map(|(x, y)| x.as_f64() * y.as_f64())
            .sum::<f64>();
        partial_sums.push(acc);
    }
    Ok(Young1d {
        value: acc,
        partial_sums,
    })
}

/// [`young_1d`] from vertex samples of `f` and `g` at a common resolution.
///
/// The Haar coefficients of `f` come from trapezoid cell averages and the
/// Faber–Schauder coefficients of `g` from its samples; `g(0)` is subtracted
/// implicitly since no coefficient depends on it.
pub fn young_1d_samples<T: Scalar>(
    f: &VertexField<T>,
    g: &VertexField<T>,
    depth: u32,
) -> Result<Young1d> {
    if depth == 0 {
        return Err(Error::InvalidDepth(0));
    }
    if f.resolution() < depth {
        return Err(Error::DepthExceedsResolution {
            depth,
            resolution: f.resolution(),
        });
    }
    let cells = CellField::from_vertex_trapezoid(f)?;
    let a = to_faber_coeffs(&charge_from_density(&cells, depth)?)?;
    let b = analyze_1d(g, depth)?;
    young_1d(&a, &b)
}
