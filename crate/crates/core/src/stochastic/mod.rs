//! Brownian motion, fractional Brownian sheets and the moment test for
//! chargeability of their sample paths.
//!
//! Every random draw is addressed by `(seed, stream, counter)`; ensemble
//! member `j` always reads stream `j`, so results do not depend on the
//! number of worker threads.

mod fbs;
mod moments;
pub mod rng;

pub use fbs::{
    fbm_cov_1d, levy_ciesielski, levy_ciesielski_stream, sample_fbs, FbsSampler, HurstVector,
    CHOLESKY_JITTER, MAX_BM_DEPTH, MAX_SHEET_POINTS,
};
pub use moments::{
    chargeability_diagnostic, gaussian_abs_moment, increment_moments, increment_variance_check,
    ChargeabilityReport, GenerationMoment, ModelPrediction, MomentFit, RectangleVariance,
    VarianceCheck, Verdict, DEFAULT_MOMENT_ORDER, MIN_ENSEMBLE, MIN_VERDICT_MARGIN, Q_SWEEP,
};
pub use rng::{counter_normal, NormalStream};
