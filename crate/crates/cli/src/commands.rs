use std::cell::Cell;
use std::fs;
use std::path::{Path, PathBuf};

use charges_core::charge::{
    charge_from_density, charge_from_increments, default_depth, from_faber_coeffs, to_faber_coeffs,
    CubeCharge, FaberCoeffs, DEFAULT_FLUX_ORDER,
};
use charges_core::dyadic::{figure_geometry, CellField, CubeIndex, DyadicFigure, VertexField};
use charges_core::gauge::{divergence_check, hk_integrate, DEFAULT_INTERVAL_BUDGET};
use charges_core::holder::holder_estimate;
use charges_core::io::{self, ChargeEnvelope, FieldHeader, FieldKind};
use charges_core::stochastic::{
    chargeability_diagnostic, increment_variance_check, levy_ciesielski_stream, sample_fbs,
    HurstVector, DEFAULT_MOMENT_ORDER,
};
use charges_core::young::{young_1d_samples, young_integral, TagRule};
use charges_core::{Error, TOOL_VERSION};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{artifact, echo, emit_json, invalid, is_false, resolve, write_csv, CliError};
use crate::expr::Expr;

/// Largest relative round-trip error accepted by `transform --roundtrip`.
pub const ROUNDTRIP_TOL: f64 = 1e-10;

fn parse_expr(src: &str, max_dim: usize) -> Result<Expr, CliError> {
    let e = Expr::parse(src).map_err(|e| invalid(format!("expression `{src}`: {e}")))?;
    if e.arity() > max_dim {
        return Err(invalid(format!(
            "expression `{src}` uses more than {max_dim} variable(s)"
        )));
    }
    Ok(e)
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(format!("--{flag} is required")))
}

fn sample_vertex(e: &Expr, dim: usize, resolution: u32) -> Result<VertexField<f64>, CliError> {
    Ok(VertexField::from_fn(dim, resolution, |x: &[f64]| e.eval(x))?)
}

fn field_kind(path: &Path) -> Result<FieldKind, CliError> {
    let hp = io::header_path(path);
    let text = fs::read_to_string(&hp).map_err(|e| CliError::File(format!("{}: {e}", hp.display())))?;
    let h: FieldHeader = serde_json::from_str(&text)?;
    Ok(h.kind)
}

fn fmt_f64(v: f64) -> String {
    v.to_string()
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TransformArgs {
    /// Charge or coefficient envelope (.json), or a vertex/cell field.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Build the charge of this density in x, y, z instead of reading one.
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Where to write the converted envelope.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Convert back and report the largest deviation.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub roundtrip: bool,
    /// Summary JSON; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

enum Source {
    Charge(CubeCharge<f64>),
    Coeffs(FaberCoeffs<f64>),
}

fn load_source(a: &mut TransformArgs) -> Result<Source, CliError> {
    match (&a.input, &a.density) {
        (Some(_), Some(_)) => Err(invalid("give either --input or --density")),
        (None, None) => Err(invalid("--input or --density is required")),
        (None, Some(src)) => {
            let e = parse_expr(src, 3)?;
            let dim = *a.dim.get_or_insert(e.arity().max(1));
            let depth = *a.depth.get_or_insert(default_depth(dim));
            let cells = CellField::from_fn_midpoint(dim, depth, |x: &[f64]| e.eval(x))?;
            Ok(Source::Charge(charge_from_density(&cells, depth)?))
        }
        (Some(path), None) => {
            let is_envelope = path.extension().is_some_and(|e| e == "json") && {
                let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                matches!(v.get("kind").and_then(Value::as_str), Some("cube-charge" | "faber-coeffs"))
            };
            if is_envelope {
                let env = io::read_envelope(path)?;
                return Ok(match env.kind {
                    io::ChargeKind::CubeCharge => Source::Charge(env.into_charge()?),
                    io::ChargeKind::FaberCoeffs => Source::Coeffs(env.into_coeffs()?),
                });
            }
            let path = path.clone();
            match field_kind(&path)? {
                FieldKind::Vertex => {
                    let f = io::read_vertex_field(&path)?;
                    let depth = *a.depth.get_or_insert(f.resolution());
                    Ok(Source::Charge(charge_from_increments(&f, depth)?))
                }
                FieldKind::Cell => {
                    let f = io::read_cell_field(&path)?;
                    let depth = *a.depth.get_or_insert(f.resolution());
                    Ok(Source::Charge(charge_from_density(&f, depth)?))
                }
            }
        }
    }
}

fn coeff_diff(a: &FaberCoeffs<f64>, b: &FaberCoeffs<f64>) -> (f64, f64) {
    let mut diff = (a.exceptional() - b.exceptional()).abs();
    let mut scale = a.exceptional().abs();
    for (la, lb) in a.levels().iter().zip(b.levels()) {
        for (x, y) in la.iter().zip(lb) {
            diff = diff.max((x - y).abs());
            scale = scale.max(x.abs());
        }
    }
    (diff, scale)
}

pub fn transform(flags: TransformArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("transform", &flags, cfg)?;
    let src = load_source(&mut a)?;
    let echo = echo(&a)?;
    let (summary, roundtrip) = match &src {
        Source::Charge(cc) => {
            let fc = to_faber_coeffs(cc)?;
            if let Some(out) = &a.output {
                io::write_envelope(out, &ChargeEnvelope::from_coeffs(&fc).with_config(echo.clone()))?;
            }
            let rt = if a.roundtrip {
                let back = from_faber_coeffs(&fc)?;
                Some((back.max_abs_diff(cc)?, cc.max_abs()))
            } else {
                None
            };
            (
                json!({
                    "input_kind": "cube-charge",
                    "output_kind": "faber-coeffs",
                    "dim": cc.dim(),
                    "depth": cc.depth(),
                    "total": cc.total(),
                }),
                rt,
            )
        }
        Source::Coeffs(fc) => {
            let cc = from_faber_coeffs(fc)?;
            if let Some(out) = &a.output {
                io::write_envelope(out, &ChargeEnvelope::from_charge(&cc).with_config(echo.clone()))?;
            }
            let rt = if a.roundtrip {
                Some(coeff_diff(&to_faber_coeffs(&cc)?, fc))
            } else {
                None
            };
            (
                json!({
                    "input_kind": "faber-coeffs",
                    "output_kind": "cube-charge",
                    "dim": fc.dim(),
                    "depth": fc.depth(),
                    "total": cc.total(),
                }),
                rt,
            )
        }
    };
    let mut result = summary;
    let mut failed = None;
    if let Some((err, scale)) = roundtrip {
        let rel = err / scale.max(f64::MIN_POSITIVE);
        let pass = rel < ROUNDTRIP_TOL;
        result["roundtrip"] = json!({
            "max_abs_error": err,
            "max_rel_error": rel,
            "tolerance": ROUNDTRIP_TOL,
            "pass": pass,
        });
        if !pass {
            failed = Some(rel);
        }
    }
    emit_json(a.report.as_deref(), &artifact("transform", &a, result)?)?;
    match failed {
        Some(rel) => Err(CliError::Numerical(format!(
            "round-trip error {rel:e} exceeds {ROUNDTRIP_TOL:e}"
        ))),
        None => Ok(()),
    }
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct YoungArgs {
    /// Integrand as an expression in x, y, z.
    #[arg(long)]
    pub f: Option<String>,
    /// Integrand as a vertex field file.
    #[arg(long)]
    pub f_file: Option<PathBuf>,
    /// Charge envelope to integrate against.
    #[arg(long)]
    pub charge_file: Option<PathBuf>,
    /// Integrate against the charge of this density instead.
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Hölder exponent of the integrand, in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fractional exponent of the charge, in (0, 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Tag of each cube: lower-corner or center.
    #[arg(long)]
    pub tag: Option<String>,
    /// Where to write the resulting charge.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Sewing report JSON; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn young(flags: YoungArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("young", &flags, cfg)?;
    let tag = match a.tag.get_or_insert_with(|| "lower-corner".into()).as_str() {
        "lower-corner" => TagRule::LowerCorner,
        "center" => TagRule::Center,
        t => return Err(invalid(format!("unknown tag rule `{t}`"))),
    };
    let beta = need(a.beta, "beta")?;
    let gamma = need(a.gamma, "gamma")?;
    let cc = match (&a.charge_file, &a.density) {
        (Some(p), None) => io::read_charge(p)?,
        (None, Some(src)) => {
            let e = parse_expr(src, 3)?;
            let dim = *a.dim.get_or_insert(e.arity().max(1));
            let depth = *a.depth.get_or_insert(default_depth(dim));
            charge_from_density(&CellField::from_fn_midpoint(dim, depth, |x: &[f64]| e.eval(x))?, depth)?
        }
        _ => return Err(invalid("give exactly one of --charge-file and --density")),
    };
    a.dim = Some(cc.dim());
    a.depth = Some(cc.depth());
    let f = match (&a.f, &a.f_file) {
        (Some(src), None) => sample_vertex(&parse_expr(src, cc.dim())?, cc.dim(), cc.depth() + 1)?,
        (None, Some(p)) => io::read_vertex_field(p)?,
        _ => return Err(invalid("give exactly one of --f and --f-file")),
    };
    let rep = young_integral(&f, &cc, beta, gamma, tag)?;
    let echo = echo(&a)?;
    if let Some(out) = &a.output {
        io::write_envelope(out, &ChargeEnvelope::from_charge(rep.result()).with_config(echo))?;
    }
    let s = &rep.sew;
    let result = json!({
        "total": rep.result().total(),
        "c": s.c,
        "epsilon": s.epsilon,
        "residuals": s.residuals,
        "residual_exponent": s.residual_exponent,
        "expected_exponent": s.expected_exponent,
        "kappa_hat": s.kappa_hat,
        "beta": rep.beta,
        "gamma": rep.gamma,
        "tag": rep.tag,
        "beta_estimate": rep.beta_estimate,
        "gamma_estimate": rep.gamma_estimate,
        "warnings": rep.warnings,
    });
    emit_json(a.report.as_deref(), &artifact("young", &a, result)?)
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Young1dArgs {
    /// Integrand as an expression in x.
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub f_file: Option<PathBuf>,
    /// Integrator as an expression in x.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub g_file: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// CSV of partial sums by generation.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Summary JSON; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn load_1d(expr: &Option<String>, file: &Option<PathBuf>, name: &str, res: u32) -> Result<VertexField<f64>, CliError> {
    match (expr, file) {
        (Some(src), None) => sample_vertex(&parse_expr(src, 1)?, 1, res),
        (None, Some(p)) => Ok(io::read_vertex_field(p)?),
        _ => Err(invalid(format!("give exactly one of --{name} and --{name}-file"))),
    }
}

pub fn young1d(flags: Young1dArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("young1d", &flags, cfg)?;
    let depth = *a.depth.get_or_insert(12);
    let f = load_1d(&a.f, &a.f_file, "f", depth)?;
    let g = load_1d(&a.g, &a.g_file, "g", depth)?;
    let r = young_1d_samples(&f, &g, depth)?;
    if let Some(out) = &a.output {
        let rows: Vec<Vec<String>> = r
            .partial_sums
            .iter()
            .enumerate()
            .map(|(i, s)| vec![(i as i64 - 1).to_string(), fmt_f64(*s)])
            .collect();
        write_csv(out, &["generation", "partial_sum"], &rows)?;
    }
    emit_json(
        a.report.as_deref(),
        &artifact("young1d", &a, json!({ "value": r.value, "partial_sums": r.partial_sums }))?,
    )
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HkArgs {
    /// Integrand as an expression in x.
    #[arg(long)]
    pub f: Option<String>,
    /// Integrate the derivative of this expression and compare with its increment.
    #[arg(long)]
    pub primitive: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Value used where the integrand is not finite.
    #[arg(long, allow_hyphen_values = true)]
    pub fill: Option<f64>,
    /// Result JSON; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV of the Riemann sum after each refinement round.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

pub fn hk(flags: HkArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("hk", &flags, cfg)?;
    let lo = *a.a.get_or_insert(0.0);
    let hi = *a.b.get_or_insert(1.0);
    let tol = *a.tol.get_or_insert(1e-3);
    let budget = *a.budget.get_or_insert(DEFAULT_INTERVAL_BUDGET);
    let (integrand, primitive) = match (&a.f, &a.primitive) {
        (Some(src), None) => (parse_expr(src, 1)?, None),
        (None, Some(src)) => {
            let p = parse_expr(src, 1)?;
            (p.derivative(0), Some(p))
        }
        _ => return Err(invalid("give exactly one of --f and --primitive")),
    };
    let filled = Cell::new(0usize);
    let fill = a.fill;
    let f = |x: f64| {
        let y = integrand.eval(&[x]);
        match fill {
            Some(v) if !y.is_finite() => {
                filled.set(filled.get() + 1);
                v
            }
            _ => y,
        }
    };
    let outcome = hk_integrate(f, lo, hi, tol, budget);
    let (res, converged_err) = match outcome {
        Ok(r) => (r, None),
        Err(Error::BudgetExceeded(r)) => {
            let msg = format!("budget of {budget} intervals exhausted; best estimate {}", r.value);
            (*r, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &a.history {
        let rows: Vec<Vec<String>> = res
            .history
            .iter()
            .enumerate()
            .map(|(i, s)| vec![(i + 1).to_string(), fmt_f64(*s)])
            .collect();
        write_csv(path, &["round", "sum"], &rows)?;
    }
    let mut result = serde_json::to_value(&res)?;
    result["filled_samples"] = json!(filled.get());
    if let Some(p) = &primitive {
        let exact = p.eval(&[hi]) - p.eval(&[lo]);
        if exact.is_finite() {
            result["primitive_increment"] = json!(exact);
            result["error"] = json!((res.value - exact).abs());
        }
        result["integrand"] = json!(integrand.to_string());
    }
    emit_json(a.output.as_deref(), &artifact("hk", &a, result)?)?;
    match converged_err {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DivcheckArgs {
    /// Vector field components separated by `;`, e.g. "x^2*y; -x*y^2".
    #[arg(long)]
    pub field: Option<String>,
    /// Figure JSON; the unit cube when absent.
    #[arg(long)]
    pub figure_file: Option<PathBuf>,
    /// Built-in figure: unit or l-shape.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Gauss points per face axis.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn l_shape() -> DyadicFigure {
    DyadicFigure::new(
        2,
        [[0, 0], [1, 0], [0, 1]].map(|p| CubeIndex::new(1, p.to_vec()).expect("generation-1 cube")),
    )
    .expect("disjoint cubes")
}

pub fn divcheck(flags: DivcheckArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("divcheck", &flags, cfg)?;
    let tol = *a.tol.get_or_insert(1e-6);
    let order = *a.order.get_or_insert(DEFAULT_FLUX_ORDER);
    let src = need(a.field.clone(), "field")?;
    let comps = Expr::parse_list(&src).map_err(|e| invalid(format!("field `{src}`: {e}")))?;
    let dim = comps.len();
    if dim > 3 || comps.iter().any(|c| c.arity() > dim) {
        return Err(invalid("field needs one component per variable, at most 3"));
    }
    let fig = match (&a.figure_file, a.shape.as_deref()) {
        (Some(p), None) => io::read_figure(p)?,
        (None, None | Some("unit")) => DyadicFigure::unit(dim),
        (None, Some("l-shape")) if dim == 2 => l_shape(),
        (None, Some(s)) => return Err(invalid(format!("unknown shape `{s}` in dimension {dim}"))),
        (Some(_), Some(_)) => return Err(invalid("give either --figure-file or --shape")),
    };
    if fig.dim() != dim {
        return Err(invalid(format!("figure has dimension {}, field {dim}", fig.dim())));
    }
    let div = comps
        .iter()
        .enumerate()
        .map(|(i, c)| c.derivative(i))
        .reduce(|x, y| Expr::Add(Box::new(x), Box::new(y)))
        .expect("at least one component");
    let v = |x: &[f64], out: &mut [f64]| {
        for (o, c) in out.iter_mut().zip(&comps) {
            *o = c.eval(x);
        }
    };
    let r = divergence_check(v, |x: &[f64]| div.eval(x), &fig, tol, order)?;
    let mut result = serde_json::to_value(&r)?;
    result["divergence"] = json!(div.to_string());
    emit_json(a.output.as_deref(), &artifact("divcheck", &a, result)?)
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BmArgs {
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// csv or bin
    #[arg(long)]
    pub format: Option<String>,
}

fn data_ext(format: &str) -> Result<&'static str, CliError> {
    match format {
        "csv" => Ok("csv"),
        "bin" => Ok("bin"),
        f => Err(invalid(format!("unknown format `{f}`"))),
    }
}

fn write_ensemble(
    dir: &Path,
    ext: &str,
    fields: &[VertexField<f64>],
    echo: &Value,
    meta: Value,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::File(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::with_capacity(fields.len());
    for (j, f) in fields.iter().enumerate() {
        let name = format!("member_{j:05}.{ext}");
        io::write_vertex_field_with_config(&dir.join(&name), f, echo)?;
        names.push(name);
    }
    let mut meta = meta;
    meta["tool_version"] = json!(TOOL_VERSION);
    meta["config"] = echo.clone();
    meta["members"] = json!(names);
    emit_json(Some(&dir.join("metadata.json")), &meta)
}

pub fn bm(flags: BmArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("bm", &flags, cfg)?;
    let seed = need(a.seed, "seed")?;
    let depth = *a.depth.get_or_insert(10);
    let ensemble = *a.ensemble.get_or_insert(1);
    let ext = data_ext(a.format.get_or_insert_with(|| "csv".into()))?;
    let dir = need(a.out_dir.clone(), "out-dir")?;
    let fields: Vec<VertexField<f64>> = (0..ensemble as u64)
        .into_par_iter()
        .map(|j| levy_ciesielski_stream(depth, seed, j))
        .collect::<Result<_, _>>()?;
    let echo = echo(&a)?;
    let meta = json!({ "H": [0.5], "N": depth, "seed": seed, "ensemble": ensemble });
    write_ensemble(&dir, ext, &fields, &echo, meta)?;
    println!("wrote {ensemble} path(s) to {}", dir.display());
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FbsArgs {
    /// Hurst exponents, comma-separated, one per axis.
    #[arg(long = "H", value_delimiter = ',')]
    #[serde(rename = "H")]
    pub hurst: Option<Vec<f64>>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Test the product variance law on random rectangles.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub check_variance: bool,
    #[arg(long)]
    pub rectangles: Option<usize>,
    /// Allowed deviation in standard errors.
    #[arg(long)]
    pub sigmas: Option<f64>,
    /// Variance check JSON; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn fbs(flags: FbsArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("fbs", &flags, cfg)?;
    let seed = need(a.seed, "seed")?;
    let hurst = HurstVector::new(need(a.hurst.clone(), "H")?)?;
    let depth = *a.depth.get_or_insert(6);
    let check = a.check_variance;
    let ensemble = *a.ensemble.get_or_insert(if check { 10_000 } else { 1 });
    if !check && a.out_dir.is_none() {
        return Err(invalid("nothing to do: give --out-dir or --check-variance"));
    }
    let ext = data_ext(a.format.get_or_insert_with(|| "csv".into()))?;
    let rects = *a.rectangles.get_or_insert(20);
    let sigmas = *a.sigmas.get_or_insert(4.0);
    let fields = sample_fbs(&hurst, depth, seed, ensemble)?;
    let echo = echo(&a)?;
    if let Some(dir) = &a.out_dir {
        let meta = json!({ "H": hurst.components(), "N": depth, "seed": seed, "ensemble": ensemble });
        write_ensemble(dir, ext, &fields, &echo, meta)?;
    }
    if check {
        let c = increment_variance_check(&fields, &hurst, seed, rects, sigmas)?;
        emit_json(a.report.as_deref(), &artifact("fbs", &a, serde_json::to_value(&c)?)?)?;
        if !c.passed {
            let worst = c.rectangles.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
            return Err(CliError::Numerical(format!(
                "variance check failed: largest |z| = {worst:.3} > {sigmas}"
            )));
        }
    }
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ChargeabilityArgs {
    /// Directory of vertex fields, as written by `fbs` or `bm`.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Moment order.
    #[arg(long)]
    pub q: Option<u32>,
    /// Generations to fit, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub gens: Option<Vec<u32>>,
    /// Hurst exponents of the Gaussian model; read from metadata.json when absent.
    #[arg(long = "H", value_delimiter = ',')]
    #[serde(rename = "H")]
    pub hurst: Option<Vec<f64>>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV of (n, log2 m_n).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn read_ensemble_dir(dir: &Path) -> Result<Vec<VertexField<f64>>, CliError> {
    let mut headers: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::File(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != "metadata.json"))
        .collect();
    headers.sort();
    let mut out = Vec::with_capacity(headers.len());
    for h in headers {
        let v: Value = serde_json::from_str(&fs::read_to_string(&h)?)?;
        if v.get("kind").and_then(Value::as_str) == Some("vertex") {
            out.push(io::read_vertex_field(&h)?);
        }
    }
    Ok(out)
}

pub fn chargeability(flags: ChargeabilityArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("chargeability", &flags, cfg)?;
    let dir = need(a.dir.clone(), "dir")?;
    let q = *a.q.get_or_insert(DEFAULT_MOMENT_ORDER);
    let fields = read_ensemble_dir(&dir)?;
    let n = fields.first().ok_or(Error::EmptyEnsemble)?.resolution();
    let gens = a.gens.get_or_insert_with(|| (2..=n).collect()).clone();
    if a.hurst.is_none() {
        let meta = dir.join("metadata.json");
        if meta.exists() {
            let v: Value = serde_json::from_str(&fs::read_to_string(&meta)?)?;
            if let Some(h) = v.get("H").and_then(|h| serde_json::from_value::<Vec<f64>>(h.clone()).ok()) {
                if h.len() == fields[0].dim() {
                    a.hurst = Some(h);
                }
            }
        }
    }
    let model = a.hurst.clone().map(HurstVector::new).transpose()?;
    let r = chargeability_diagnostic(&fields, q, &gens, model.as_ref())?;
    if let Some(path) = &a.csv {
        let rows: Vec<Vec<String>> = r
            .generations
            .iter()
            .map(|g| vec![g.gen.to_string(), fmt_f64(g.log2_moment)])
            .collect();
        write_csv(path, &["n", "log2_m_n"], &rows)?;
    }
    emit_json(a.output.as_deref(), &artifact("chargeability", &a, serde_json::to_value(&r)?)?)
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HolderArgs {
    /// Function of x sampled at resolution --depth.
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub f_file: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV of (n, log2 max_k |a_{n,k}|).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn holder(flags: HolderArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let mut a = resolve("holder", &flags, cfg)?;
    let depth = *a.depth.get_or_insert(12);
    let gamma = *a.gamma.get_or_insert(0.5);
    let f = load_1d(&a.f, &a.f_file, "f", depth)?;
    let est = holder_estimate(&f, gamma)?;
    if let Some(path) = &a.csv {
        let rows: Vec<Vec<String>> = est
            .log2_max_coeff
            .iter()
            .map(|(n, v)| vec![n.to_string(), fmt_f64(*v)])
            .collect();
        write_csv(path, &["n", "log2_max_coeff"], &rows)?;
    }
    emit_json(a.output.as_deref(), &artifact("holder", &a, serde_json::to_value(&est)?)?)
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GeometryArgs {
    #[arg(long)]
    pub figure_file: Option<PathBuf>,
    /// Cubes as `gen:k1,k2;gen:k1,k2`.
    #[arg(long)]
    pub cubes: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_cubes(src: &str) -> Result<DyadicFigure, CliError> {
    let mut cubes = Vec::new();
    for item in src.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (g, pos) = item
            .split_once(':')
            .ok_or_else(|| invalid(format!("cube `{item}` is not gen:k1,k2,...")))?;
        let gen: u32 = g.trim().parse().map_err(|_| invalid(format!("bad generation in `{item}`")))?;
        let pos: Vec<u64> = pos
            .split(',')
            .map(|k| k.trim().parse().map_err(|_| invalid(format!("bad position in `{item}`"))))
            .collect::<Result<_, _>>()?;
        cubes.push(CubeIndex::new(gen, pos)?);
    }
    let dim = cubes.first().ok_or_else(|| invalid("no cubes given"))?.dim();
    Ok(DyadicFigure::new(dim, cubes)?)
}

pub fn geometry(flags: GeometryArgs, cfg: Option<&Path>) -> Result<(), CliError> {
    let a = resolve("geometry", &flags, cfg)?;
    let fig = match (&a.figure_file, &a.cubes) {
        (Some(p), None) => io::read_figure(p)?,
        (None, Some(s)) => parse_cubes(s)?,
        _ => return Err(invalid("give exactly one of --figure-file and --cubes")),
    };
    let g = figure_geometry::<f64>(&fig)?;
    let mut result = serde_json::to_value(&g)?;
    result["dim"] = json!(fig.dim());
    result["cubes"] = json!(fig.cubes().len());
    emit_json(a.output.as_deref(), &artifact("geometry", &a, result)?)
}
