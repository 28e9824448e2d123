use serde::Serialize;

use crate::charge::{fractional_profile, CubeCharge};
use crate::dyadic::cube::lin;
use crate::dyadic::{figure_geometry, DyadicFigure, VertexField};
use crate::error::{check_unit_exponent, Error, Result};
use crate::holder::grid_seminorm;
use crate::scalar::{ls_fit, Scalar};

#[derive(Clone, Debug)]
pub struct YoungLoeveOptions {
    /// Generations used for the per-cube slope fit, clipped to the depth.
    pub first_gen: u32,
    pub last_gen: u32,
}

impl Default for YoungLoeveOptions {
    fn default() -> Self {
        Self {
            first_gen: 3,
            last_gen: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureError {
    pub figure: DyadicFigure,
    /// `|(Y)∫_B f dω − f(x) ω(B)|`
    pub lhs: f64,
    /// `|B|^δ (diam B)^β / (isop B)^{1−γ}`
    pub structural: f64,
    pub ratio: f64,
    pub volume: f64,
    pub diameter: f64,
    pub isop: f64,
    pub reg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YoungLoeveReport {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub figures: Vec<FigureError>,
    /// Largest `lhs / structural` over the figures.
    pub c_hat: f64,
    /// `(n, max_K lhs_K)` over the fitted generations.
    pub cube_errors: Vec<(u32, f64)>,
    /// Slope of `log2 max_K lhs_K` against `log2 |K|`.
    pub cube_slope: Option<f64>,
    /// `δ + β/d`
    pub expected_slope: f64,
    /// Grid Hölder seminorm of `f` at exponent `β`.
    pub f_seminorm: f64,
    /// Fractional profile constant of the charge at exponent `γ`.
    pub charge_constant: f64,
    pub note: String,
}

/// Tabulates the local error `(Y)∫_B f dω − f(x) ω(B)` against its
/// structural bound on each figure, with `x` the lower corner of the first
/// cube of `B`, and fits the per-cube error decay.
pub fn young_loeve_report<T: Scalar>(
    f: &VertexField<T>,
    cc: &CubeCharge<T>,
    result: &CubeCharge<T>,
    figures: &[DyadicFigure],
    beta: f64,
    gamma: f64,
    opts: &YoungLoeveOptions,
) -> Result<YoungLoeveReport> {
    check_unit_exponent("beta", beta)?;
    check_unit_exponent("gamma", gamma)?;
    let d = cc.dim();
    if result.dim() != d || result.depth() != cc.depth() || f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: result.dim(),
        });
    }
    if f.resolution() < cc.depth() {
        return Err(Error::DepthExceedsResolution {
            depth: cc.depth(),
            resolution: f.resolution(),
        });
    }
    let df = d as f64;
    let delta = (df - 1.0 + gamma) / df;
    let res = f.resolution();
    let f_at = |gen: u32, pos: &[usize]| {
        let grid: Vec<usize> = pos.iter().map(|&p| p << (res - gen)).collect();
        f.values()[f.flat_index(&grid)].as_f64()
    };

    let mut rows = Vec::with_capacity(figures.len());
    for fig in figures {
        let first = fig.cubes().first().ok_or(Error::EmptyFigure)?;
        let pos: Vec<usize> = first.pos().iter().map(|&p| p as usize).collect();
        let fx = f_at(first.gen(), &pos);
        let lhs = (result.eval_figure(fig)?.as_f64() - fx * cc.eval_figure(fig)?.as_f64()).abs();
        let geo = figure_geometry::<f64>(fig)?;
        let structural =
            geo.volume.powf(delta) * geo.diameter.powf(beta) / geo.isop.powf(1.0 - gamma);
        rows.push(FigureError {
            figure: fig.clone(),
            lhs,
            structural,
            ratio: lhs / structural,
            volume: geo.volume,
            diameter: geo.diameter,
            isop: geo.isop,
            reg: geo.reg,
        });
    }
    let c_hat = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);

    let last = opts.last_gen.min(cc.depth());
    let mut cube_errors = Vec::new();
    let mut pos = vec![0usize; d];
    for n in opts.first_gen..=last {
        let mut m = 0.0f64;
        for k in 0..cc.level(n).len() {
            lin::coords(k, n, d, &mut pos);
            let e = (result.level(n)[k].as_f64() - f_at(n, &pos) * cc.level(n)[k].as_f64()).abs();
            m = m.max(e);
        }
        cube_errors.push((n, m));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = cube_errors
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| (-(n as f64) * df, e.log2()))
        .unzip();
    let cube_slope = ls_fit(&xs, &ys).map(|fit| fit.slope);

    Ok(YoungLoeveReport {
        beta,
        gamma,
        delta,
        figures: rows,
        c_hat,
        cube_errors,
        cube_slope,
        expected_slope: delta + beta / df,
        f_seminorm: grid_seminorm(f, beta)?,
        charge_constant: fractional_profile(cc, gamma)?.c_hat,
        note: "charge_constant is the fractional-profile constant max_K |w(K)|/|K|^delta; \
               it stands in for the dual charge norm, which is not computed"
            .into(),
    })
}
