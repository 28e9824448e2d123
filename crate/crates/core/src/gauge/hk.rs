use std::collections::BinaryHeap;

use super::{IntegralResult, Priority};
use crate::error::{Error, Result};

/// Default cap on the number of intervals in the 1D partition.
pub const DEFAULT_INTERVAL_BUDGET: usize = 1 << 20;

struct Interval {
    a: f64,
    b: f64,
    /// Midpoint Riemann contribution `f(m)(b − a)`.
    s1: f64,
    /// `|s1 − s3|` where `s3` uses the midpoints of the three thirds.
    disc: f64,
}

struct Integrator<F> {
    f: F,
    heap: BinaryHeap<(Priority, usize)>,
    store: Vec<Option<Interval>>,
    next_id: u64,
    total_disc: f64,
    live: usize,
}

impl<F: Fn(f64) -> f64> Integrator<F> {
    fn eval(&self, x: f64) -> Result<f64> {
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteSample(vec![x]))
        }
    }

    fn push(&mut self, a: f64, b: f64) -> Result<()> {
        let h = b - a;
        let fm = self.eval(a + 0.5 * h)?;
        let s1 = fm * h;
        let s3 = h / 3.0 * (self.eval(a + h / 6.0)? + fm + self.eval(a + 5.0 * h / 6.0)?);
        let disc = (s1 - s3).abs();
        let slot = self.store.len();
        self.store.push(Some(Interval { a, b, s1, disc }));
        self.heap.push((
            Priority {
                disc,
                id: self.next_id,
            },
            slot,
        ));
        self.next_id += 1;
        self.total_disc += disc;
        self.live += 1;
        Ok(())
    }

    fn pop(&mut self) -> Option<Interval> {
        let (_, slot) = self.heap.pop()?;
        let iv = self.store[slot].take().expect("live interval");
        self.total_disc -= iv.disc;
        self.live -= 1;
        Some(iv)
    }

    fn exact_disc(&self) -> f64 {
        self.store.iter().flatten().map(|iv| iv.disc).sum()
    }

    fn interior_sum(&self) -> f64 {
        self.store.iter().flatten().map(|iv| iv.s1).sum()
    }

    fn finest_interior(&self) -> f64 {
        self.store
            .iter()
            .flatten()
            .map(|iv| iv.b - iv.a)
            .fold(0.0, f64::max)
    }
}

/// Henstock–Kurzweil integral of `f` over `[0, 1]`.
///
/// Interior intervals carry midpoint tags; each is compared with the
/// three-point sum over its thirds, and the interval with the largest
/// discrepancy is trisected until the total discrepancy drops below
/// `tol/2`. The two end intervals are tagged at `0` and `1`, which lets the
/// partition stay gauge-fine where the integrand is defined only by its
/// endpoint value; they are trisected once per round. Rounds repeat until two
/// successive Riemann sums differ by less than `tol`.
///
/// Exhausting `budget` intervals returns [`Error::BudgetExceeded`] carrying
/// the best estimate.
pub fn hk_integrate_1d(f: impl Fn(f64) -> f64, tol: f64, budget: usize) -> Result<IntegralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be > 0")));
    }
    if budget < 3 {
        return Err(Error::InvalidParameter("budget must allow 3 intervals".into()));
    }
    let mut it = Integrator {
        f,
        heap: BinaryHeap::new(),
        store: Vec::new(),
        next_id: 0,
        total_disc: 0.0,
        live: 0,
    };
    let f0 = it.eval(0.0)?;
    let f1 = it.eval(1.0)?;
    let (mut left, mut right) = ((0.0f64, 1.0 / 3.0), (2.0 / 3.0, 1.0f64));
    it.push(left.1, right.0)?;
    let inner = 0.5 * tol;
    let mut history = Vec::new();

    loop {
        loop {
            // live intervals plus the two end pieces, after one more trisection
            if it.live + 4 > budget {
                break;
            }
            if it.total_disc <= inner {
                it.total_disc = it.exact_disc();
                if it.total_disc <= inner {
                    break;
                }
            }
            let Some(iv) = it.pop() else { break };
            let h = (iv.b - iv.a) / 3.0;
            it.push(iv.a, iv.a + h)?;
            it.push(iv.a + h, iv.b - h)?;
            it.push(iv.b - h, iv.b)?;
        }
        let sum = it.interior_sum() + f0 * (left.1 - left.0) + f1 * (right.1 - right.0);
        history.push(sum);
        let count = it.live + 2;
        let done = history.len() >= 2 && (sum - history[history.len() - 2]).abs() < tol;
        let exhausted = count + 4 > budget;
        if done || exhausted {
            let result = IntegralResult {
                value: sum,
                count,
                finest_mesh: it
                    .finest_interior()
                    .max(left.1 - left.0)
                    .max(right.1 - right.0),
                converged: done,
                history,
            };
            return if done {
                Ok(result)
            } else {
                Err(Error::BudgetExceeded(Box::new(result)))
            };
        }
        let h = (left.1 - left.0) / 3.0;
        it.push(left.0 + h, left.1 - h)?;
        it.push(left.1 - h, left.1)?;
        left.1 = left.0 + h;
        let h = (right.1 - right.0) / 3.0;
        it.push(right.0, right.0 + h)?;
        it.push(right.0 + h, right.1 - h)?;
        right.0 = right.1 - h;
    }
}

/// [`hk_integrate_1d`] on `[a, b]` through the affine map `t ↦ a + (b − a)t`.
pub fn hk_integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<IntegralResult> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    let len = b - a;
    let scaled = |r: IntegralResult| IntegralResult {
        value: r.value * len,
        finest_mesh: r.finest_mesh * len,
        history: r.history.iter().map(|v| v * len).collect(),
        ..r
    };
    match hk_integrate_1d(|t| f(a + len * t), tol / len, budget) {
        Ok(r) => Ok(scaled(r)),
        Err(Error::BudgetExceeded(r)) => Err(Error::BudgetExceeded(Box::new(scaled(*r)))),
        Err(e) => Err(e),
    }
}

/// Finest dyadic level probed by [`alexiewicz_norm_1d`].
const ALEXIEWICZ_MAX_LEVEL: u32 = 14;

/// `max_x |∫_0^x f|` over dyadic points, with the grid refined until the
/// maximum changes by less than `tol` between levels.
pub fn alexiewicz_norm_1d(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let mut prev: Option<f64> = None;
    for level in 1..=ALEXIEWICZ_MAX_LEVEL {
        let cells = 1usize << level;
        let h = 1.0 / cells as f64;
        let mut acc = 0.0f64;
        let mut best = 0.0f64;
        for j in 0..cells {
            let r = hk_integrate(&f, j as f64 * h, (j + 1) as f64 * h, tol * h, DEFAULT_INTERVAL_BUDGET)?;
            acc += r.value;
            best = best.max(acc.abs());
        }
        if let Some(p) = prev {
            if level >= 3 && (best - p).abs() < tol {
                return Ok(best);
            }
        }
        prev = Some(best);
    }
    Ok(prev.unwrap_or(0.0))
}
