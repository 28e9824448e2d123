use thiserror::Error;

use crate::gauge::IntegralResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cube index: {0}")]
    InvalidCube(String),

    #[error("invalid Haar pattern {pattern} for dimension {dim}")]
    InvalidPattern { pattern: u32, dim: usize },

    #[error("point {0:?} lies outside the unit cube")]
    OutOfDomain(Vec<f64>),

    #[error("point {0:?} is not on the vertex grid")]
    OffGrid(Vec<f64>),

    #[error("malformed field: {0}")]
    MalformedField(String),

    #[error("figure cubes overlap: {0}")]
    OverlappingFigure(String),

    #[error("figure is empty")]
    EmptyFigure,

    #[error("requested depth {depth} exceeds available resolution {resolution}")]
    DepthExceedsResolution { depth: u32, resolution: u32 },

    #[error("invalid depth {0}")]
    InvalidDepth(u32),

    #[error("additivity violated at cube (gen {gen}, index {index}): residual {residual:e} > tolerance {tolerance:e}")]
    AdditivityViolation {
        gen: u32,
        index: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("almost-additivity violated at cube (gen {gen}, index {index}): residual {residual:e} > bound {bound:e}")]
    AlmostAdditivityViolation {
        gen: u32,
        index: usize,
        residual: f64,
        bound: f64,
    },

    #[error("Young condition violated: beta + gamma = {sum} must exceed 1")]
    YoungConditionViolated { sum: f64 },

    #[error("exponent {name} = {value} outside ({lo}, {hi})")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gauge must be positive, got {value} at {at}")]
    InvalidGauge { at: f64, value: f64 },

    #[error("bisection exceeded maximum depth {0}")]
    DepthExceeded(u32),

    #[error("refinement budget exhausted; best estimate {:.12}", .0.value)]
    BudgetExceeded(Box<IntegralResult>),

    #[error("non-finite sample at {0:?}")]
    NonFiniteSample(Vec<f64>),

    #[error("Cholesky factorisation failed for Hurst exponent {hurst}")]
    FactorizationFailure { hurst: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn exponent(name: &'static str, value: f64) -> Self {
        Error::InvalidExponent {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

pub(crate) fn check_unit_exponent(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::exponent(name, value))
    }
}
