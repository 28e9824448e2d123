use serde::Serialize;

use crate::error::{Error, Result};

/// Bisection depth at which [`cousin_partition_1d`] gives up.
pub const DEFAULT_MAX_BISECTIONS: u32 = 48;

/// Tagged partition `0 = a_0 < … < a_n = 1` with `x_i ∈ [a_i, a_{i+1}]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaggedPartition1D {
    breakpoints: Vec<f64>,
    tags: Vec<f64>,
}

impl TaggedPartition1D {
    pub fn new(breakpoints: Vec<f64>, tags: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || tags.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidParameter(
                "need n + 1 breakpoints for n tags".into(),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().expect("non-empty") != 1.0 {
            return Err(Error::InvalidParameter("partition must span [0, 1]".into()));
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "breakpoints not increasing at {i}"
                )));
            }
            if !(tags[i] >= w[0] && tags[i] <= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "tag {} outside [{}, {}]",
                    tags[i], w[0], w[1]
                )));
            }
        }
        Ok(Self { breakpoints, tags })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn tags(&self) -> &[f64] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Whether every interval is strictly shorter than the gauge at its tag.
    pub fn is_fine(&self, gauge: impl Fn(f64) -> f64) -> bool {
        self.breakpoints
            .windows(2)
            .zip(&self.tags)
            .all(|(w, &x)| w[1] - w[0] < gauge(x))
    }

    pub fn riemann_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.tags)
            .map(|(w, &x)| f(x) * (w[1] - w[0]))
            .sum()
    }
}

/// δ-fine tagged partition by bisection: `[a, b]` is kept with tag at its
/// midpoint `m` when `b − a < δ(m)`, and split in half otherwise.
pub fn cousin_partition_1d(
    gauge: impl Fn(f64) -> f64,
    max_bisections: u32,
) -> Result<TaggedPartition1D> {
    let mut breakpoints = vec![0.0];
    let mut tags = Vec::new();
    // (a, b, depth), right half pushed first so intervals come out in order
    let mut stack = vec![(0.0f64, 1.0f64, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let g = gauge(m);
        if !(g > 0.0) {
            return Err(Error::InvalidGauge { at: m, value: g });
        }
        if b - a < g {
            breakpoints.push(b);
            tags.push(m);
            continue;
        }
        if depth >= max_bisections {
            return Err(Error::DepthExceeded(max_bisections));
        }
        stack.push((m, b, depth + 1));
        stack.push((a, m, depth + 1));
    }
    TaggedPartition1D::new(breakpoints, tags)
}
