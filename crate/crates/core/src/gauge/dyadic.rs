use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use super::{IntegralResult, Priority};
use crate::charge::flux_charge;
use crate::dyadic::cube::MAX_GEN;
use crate::dyadic::{CubeIndex, DyadicFigure};
use crate::error::{Error, Result};

/// Default cap on the number of cubes in a dyadic partition.
pub const DEFAULT_CUBE_BUDGET: usize = 1 << 22;

/// Most refinement rounds before giving up on two agreeing sums.
const MAX_ROUNDS: usize = 64;

struct Cell {
    cube: CubeIndex,
    /// `Σ_children f(centre_L)|L|`
    s2: f64,
    /// `|f(centre)|K| − s2|`
    disc: f64,
}

struct Refiner<F> {
    f: F,
    dim: usize,
    heap: BinaryHeap<(Priority, usize)>,
    store: Vec<Option<Cell>>,
    next_id: u64,
    live: usize,
    point: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Refiner<F> {
    fn centre_value(&mut self, cube: &CubeIndex) -> Result<f64> {
        let h = cube.side::<f64>();
        for (x, &k) in self.point.iter_mut().zip(cube.pos()) {
            *x = (k as f64 + 0.5) * h;
        }
        let y = (self.f)(&self.point);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteSample(self.point.clone()))
        }
    }

    fn push(&mut self, cube: CubeIndex) -> Result<()> {
        let vol = cube.volume::<f64>();
        let s1 = self.centre_value(&cube)? * vol;
        let s2 = if cube.gen() < MAX_GEN {
            let mut s = 0.0;
            for child in cube.children() {
                s += self.centre_value(&child)?;
            }
            s * vol / (1u64 << self.dim) as f64
        } else {
            s1
        };
        let disc = (s1 - s2).abs();
        let slot = self.store.len();
        self.store.push(Some(Cell { cube, s2, disc }));
        self.heap.push((
            Priority {
                disc,
                id: self.next_id,
            },
            slot,
        ));
        self.next_id += 1;
        self.live += 1;
        Ok(())
    }

    fn total_disc(&self) -> f64 {
        self.store.iter().flatten().map(|c| c.disc).sum()
    }
}

/// Dyadic Henstock integral over the unit cube `[0,1]^dim`.
pub fn dyadic_henstock(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    tol: f64,
    budget: usize,
) -> Result<IntegralResult> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    dyadic_henstock_on(f, &DyadicFigure::unit(dim), tol, budget)
}

/// Dyadic Henstock integral over a dyadic figure.
///
/// Riemann sums use cube centres as tags. The cube whose one-point sum
/// differs most from the sum over its `2^d` children is split first; round
/// `r` refines until the total discrepancy is below `tol·2^{-r-1}`. The
/// reported sum is taken over the children of the current cubes, whose
/// centre values are already known. The result has converged once two
/// successive rounds agree within `tol`.
pub fn dyadic_henstock_on(
    f: impl Fn(&[f64]) -> f64,
    fig: &DyadicFigure,
    tol: f64,
    budget: usize,
) -> Result<IntegralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be > 0")));
    }
    if fig.is_empty() {
        return Err(Error::EmptyFigure);
    }
    let dim = fig.dim();
    let fanout = 1usize << dim;
    if budget < fig.cubes().len() {
        return Err(Error::InvalidParameter("budget below figure size".into()));
    }
    let mut r = Refiner {
        f,
        dim,
        heap: BinaryHeap::new(),
        store: Vec::new(),
        next_id: 0,
        live: 0,
        point: vec![0.0; dim],
    };
    for c in fig.cubes() {
        r.push(c.clone())?;
    }
    let mut history = Vec::new();
    let mut exhausted = false;
    for round in 0..MAX_ROUNDS {
        let target = tol * (-(round as f64) - 1.0).exp2();
        let mut disc = r.total_disc();
        while disc > target {
            if r.live + fanout - 1 > budget {
                exhausted = true;
                break;
            }
            let Some((_, slot)) = r.heap.pop() else { break };
            let cell = r.store[slot].take().expect("live cube");
            r.live -= 1;
            disc -= cell.disc;
            if cell.disc == 0.0 {
                // nothing left worth splitting
                r.store[slot] = Some(cell);
                r.live += 1;
                break;
            }
            let kids: Vec<CubeIndex> = cell.cube.children().collect();
            let before = r.store.len();
            for k in kids {
                r.push(k)?;
            }
            disc += r.store[before..].iter().flatten().map(|c| c.disc).sum::<f64>();
            if disc <= target {
                disc = r.total_disc();
            }
        }
        let sum: f64 = r.store.iter().flatten().map(|c| c.s2).sum();
        history.push(sum);
        let n = history.len();
        let done = n >= 2 && (history[n - 1] - history[n - 2]).abs() < tol;
        if done || exhausted {
            let finest = r
                .store
                .iter()
                .flatten()
                .map(|c| c.cube.side::<f64>())
                .fold(0.0, f64::max);
            let result = IntegralResult {
                value: sum,
                count: r.live,
                finest_mesh: finest,
                converged: done,
                history,
            };
            return if done {
                Ok(result)
            } else {
                Err(Error::BudgetExceeded(Box::new(result)))
            };
        }
    }
    let sum = *history.last().expect("at least one round");
    Err(Error::BudgetExceeded(Box::new(IntegralResult {
        value: sum,
        count: r.live,
        finest_mesh: 0.0,
        converged: false,
        history,
    })))
}

/// Centre-tagged Riemann sum over the generation-`level` cells of a figure.
pub fn uniform_riemann_sum(
    f: impl Fn(&[f64]) -> f64 + Sync,
    fig: &DyadicFigure,
    level: u32,
) -> Result<f64> {
    if level < fig.max_gen() {
        return Err(Error::InvalidDepth(level));
    }
    let d = fig.dim();
    let h = (-(level as f64)).exp2();
    let vol = h.powi(d as i32);
    Ok(fig
        .cells_at(level)
        .par_iter()
        .map(|&k| {
            let c = CubeIndex::from_linear(d, level, k);
            let x: Vec<f64> = c.pos().iter().map(|&p| (p as f64 + 0.5) * h).collect();
            f(&x) * vol
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceCheck {
    /// Dyadic Henstock integral of the divergence over the figure.
    pub lhs: f64,
    /// Outward boundary flux of the field through the figure.
    pub rhs: f64,
    pub gap: f64,
    pub cubes_used: usize,
}

/// Compares `∫_B div v` with the boundary flux of `v` over a figure `B`.
///
/// The flux is integrated face by face with `order` Gauss points per face
/// axis at the figure's finest generation.
pub fn divergence_check<V, D>(
    v: V,
    div: D,
    fig: &DyadicFigure,
    tol: f64,
    order: usize,
) -> Result<DivergenceCheck>
where
    V: Fn(&[f64], &mut [f64]) + Sync,
    D: Fn(&[f64]) -> f64,
{
    let lhs = dyadic_henstock_on(div, fig, tol, DEFAULT_CUBE_BUDGET)?;
    let flux = flux_charge::<f64, _>(fig.dim(), fig.max_gen(), order, v)?;
    let rhs = flux.eval_figure(fig)?;
    Ok(DivergenceCheck {
        lhs: lhs.value,
        rhs,
        gap: (lhs.value - rhs).abs(),
        cubes_used: lhs.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> DyadicFigure {
        DyadicFigure::new(
            2,
            [[0, 0], [1, 0], [0, 1]].map(|p| CubeIndex::new(1, p.to_vec()).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn constant_is_exact() {
        for d in 1..=3 {
            let r = dyadic_henstock(|_| 1.0, d, 1e-9, DEFAULT_CUBE_BUDGET).unwrap();
            assert_eq!(r.value, 1.0);
            assert_eq!(r.count, 1);
        }
    }

    #[test]
    fn bilinear_and_smooth() {
        let r = dyadic_henstock(|x| 4.0 * x[0] * x[1], 2, 1e-6, DEFAULT_CUBE_BUDGET).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
        let s = dyadic_henstock(|x| (x[0] + x[1]).exp(), 2, 1e-7, DEFAULT_CUBE_BUDGET).unwrap();
        let exact = (1f64.exp() - 1.0).powi(2);
        assert!((s.value - exact).abs() < 1e-6);
    }

    #[test]
    fn integrable_singularity_on_face() {
        let r = dyadic_henstock(|x| 0.5 / x[0].sqrt(), 2, 1e-3, DEFAULT_CUBE_BUDGET).unwrap();
        assert!((r.value - 1.0).abs() < 1e-2, "{}", r.value);
    }

    #[test]
    fn additive_over_member_cubes() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() + x[1] * x[1];
        let fig = l_shape();
        let whole = dyadic_henstock_on(f, &fig, 1e-5, DEFAULT_CUBE_BUDGET).unwrap().value;
        let parts: f64 = fig
            .cubes()
            .iter()
            .map(|c| {
                let single = DyadicFigure::new(2, vec![c.clone()]).unwrap();
                dyadic_henstock_on(f, &single, 1e-5, DEFAULT_CUBE_BUDGET).unwrap().value
            })
            .sum();
        assert!((whole - parts).abs() < 2e-5);
    }

    #[test]
    fn divergence_suite() {
        let c = divergence_check(
            |_, o| {
                o[0] = 2.0;
                o[1] = -1.0;
            },
            |_| 0.0,
            &l_shape(),
            1e-9,
            4,
        )
        .unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs.abs() < 1e-15);
        let r = divergence_check(|x, o| o.copy_from_slice(x), |_| 2.0, &DyadicFigure::unit(2), 1e-9, 4)
            .unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-8 && (r.rhs - 2.0).abs() < 1e-8);
        let p = divergence_check(
            |x, o| {
                o[0] = x[0] * x[0] * x[1];
                o[1] = -x[0] * x[1] * x[1];
            },
            |_| 0.0,
            &l_shape(),
            1e-9,
            4,
        )
        .unwrap();
        assert!(p.gap < 1e-6);
    }

    #[test]
    fn uniform_sum_converges_at_second_order() {
        let f = |x: &[f64]| x[0] * x[0] * x[1] + x[1] * x[1] * x[1];
        let exact = 1.0 / 6.0 + 0.25;
        let fig = DyadicFigure::unit(2);
        let e2 = (uniform_riemann_sum(f, &fig, 2).unwrap() - exact).abs();
        let e5 = (uniform_riemann_sum(f, &fig, 5).unwrap() - exact).abs();
        assert!((e2 / e5).log2() / 3.0 > 1.9);
    }
}
