//! Gauge (Henstock–Kurzweil) integration on `[0,1]` and on dyadic cubes.
//!
//! Everything here works in `f64`: integrands are closures evaluated at
//! adaptively chosen tags, not stored grid data.

mod dyadic;
mod hk;
mod partition;

pub use dyadic::{
    divergence_check, dyadic_henstock, dyadic_henstock_on, uniform_riemann_sum, DivergenceCheck,
    DEFAULT_CUBE_BUDGET,
};
pub use hk::{alexiewicz_norm_1d, hk_integrate, hk_integrate_1d, DEFAULT_INTERVAL_BUDGET};
pub use partition::{cousin_partition_1d, TaggedPartition1D, DEFAULT_MAX_BISECTIONS};

use std::cmp::Ordering;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    /// Intervals or cubes in the final partition.
    pub count: usize,
    /// Largest interval length or cube side in the final partition.
    pub finest_mesh: f64,
    pub converged: bool,
    /// Riemann sum recorded after each refinement round.
    pub history: Vec<f64>,
}

/// Refinement priority: larger discrepancy first, then smaller id.
#[derive(Clone, Copy, Debug)]
struct Priority {
    disc: f64,
    id: u64,
}

impl PartialEq for Priority {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Priority {}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.disc
            .total_cmp(&other.disc)
            .then_with(|| other.id.cmp(&self.id))
    }
}
