//! Additive set functions on the dyadic cubes of `[0,1]^d`, stored to a
//! finite depth with every generation kept.

mod faber;
mod flux;
mod profile;

pub use faber::{from_faber_coeffs, to_faber_coeffs, FaberCoeffs};
pub use flux::{flux_charge, DEFAULT_FLUX_ORDER};
pub use profile::{fractional_profile, holder_control_check, FractionalProfile, HolderControl};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::cube::lin;
use crate::dyadic::{cube_increments, CellField, CubeIndex, DyadicFigure, VertexField};
use crate::error::{Error, Result};
use crate::scalar::{pow2, Scalar};

/// Default storage depth: 8 for `d ≤ 2`, 5 for `d = 3`, 4 beyond.
pub fn default_depth(dim: usize) -> u32 {
    match dim {
        0..=2 => 8,
        3 => 5,
        _ => 4,
    }
}

/// Largest `dim·depth` accepted for a stored cube table.
pub const MAX_CELL_BITS: u32 = 26;

/// Per-cube values for every generation `0..=depth`, row-major within a
/// generation. No additivity is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeTable<T> {
    dim: usize,
    depth: u32,
    levels: Vec<Vec<T>>,
}

pub(crate) fn level_len(dim: usize, gen: u32) -> usize {
    1usize << (gen as usize * dim)
}

fn check_table_shape(dim: usize, depth: u32) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if dim as u32 * depth > MAX_CELL_BITS {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(())
}

impl<T: Scalar> CubeTable<T> {
    pub fn new(dim: usize, levels: Vec<Vec<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::MalformedField("no generations supplied".into()));
        }
        let depth = levels.len() as u32 - 1;
        check_table_shape(dim, depth)?;
        for (n, lv) in levels.iter().enumerate() {
            let want = level_len(dim, n as u32);
            if lv.len() != want {
                return Err(Error::MalformedField(format!(
                    "generation {n}: expected {want} values, got {}",
                    lv.len()
                )));
            }
            if let Some(k) = lv.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedField(format!(
                    "non-finite value at generation {n}, index {k}"
                )));
            }
        }
        Ok(Self { dim, depth, levels })
    }

    /// Table with `η(K) = f(K)` for every cube up to `depth`.
    pub fn from_fn(dim: usize, depth: u32, f: impl Fn(&CubeIndex) -> T + Sync) -> Result<Self> {
        check_table_shape(dim, depth)?;
        let levels = (0..=depth)
            .map(|n| {
                (0..level_len(dim, n))
                    .into_par_iter()
                    .map(|k| f(&CubeIndex::from_linear(dim, n, k)))
                    .collect()
            })
            .collect();
        Self::new(dim, levels)
    }

    /// Builds every coarser generation from the leaves by summing children.
    pub fn sum_from_leaves(dim: usize, depth: u32, leaves: Vec<T>) -> Result<Self> {
        check_table_shape(dim, depth)?;
        if leaves.len() != level_len(dim, depth) {
            return Err(Error::MalformedField(format!(
                "expected {} leaves, got {}",
                level_len(dim, depth),
                leaves.len()
            )));
        }
        let mut levels = vec![leaves];
        for n in (0..depth).rev() {
            let child = levels.last().expect("non-empty");
            let offs = lin::child_offsets(n, dim);
            let lv: Vec<T> = (0..level_len(dim, n))
                .into_par_iter()
                .map(|k| {
                    let base = lin::first_child(k, n, dim);
                    offs.iter().map(|&o| child[base + o]).sum()
                })
                .collect();
            levels.push(lv);
        }
        levels.reverse();
        Self::new(dim, levels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn level(&self, gen: u32) -> &[T] {
        &self.levels[gen as usize]
    }

    pub fn levels(&self) -> &[Vec<T>] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<Vec<T>> {
        self.levels
    }

    pub fn get(&self, cube: &CubeIndex) -> Result<T> {
        if cube.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: cube.dim(),
            });
        }
        if cube.gen() > self.depth {
            return Err(Error::DepthExceedsResolution {
                depth: cube.gen(),
                resolution: self.depth,
            });
        }
        Ok(self.levels[cube.gen() as usize][cube.linear()])
    }

    /// `Σ |η(L)|` over the deepest generation.
    pub fn leaf_scale(&self) -> T {
        self.levels[self.depth as usize].iter().map(|v| v.abs()).sum()
    }

    /// Largest `|η(K) − Σ_children η(L)|`, with its generation and index.
    pub fn worst_additivity_residual(&self) -> Option<(u32, usize, T)> {
        let d = self.dim;
        (0..self.depth)
            .filter_map(|n| {
                let child = &self.levels[n as usize + 1];
                let offs = lin::child_offsets(n, d);
                self.levels[n as usize]
                    .par_iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let base = lin::first_child(k, n, d);
                        let s: T = offs.iter().map(|&o| child[base + o]).sum();
                        (k, (v - s).abs())
                    })
                    .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
                    .map(|(k, r)| (n, k, r))
            })
            .fold(None, |best: Option<(u32, usize, T)>, cur| match best {
                Some(b) if b.2 >= cur.2 => Some(b),
                _ => Some(cur),
            })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::MalformedField("cube tables differ in shape".into()));
        }
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Self {
            dim: self.dim,
            depth: self.depth,
            levels,
        })
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dim: self.dim,
            depth: self.depth,
            levels: self
                .levels
                .iter()
                .map(|lv| lv.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }
}

/// Exactly additive set function on dyadic cubes up to a fixed depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeCharge<T> {
    #[serde(flatten)]
    table: CubeTable<T>,
}

impl<T: Scalar> CubeCharge<T> {
    /// Validates additivity of arbitrary per-cube values.
    ///
    /// The tolerance is `additivity_rel_tol · Σ|ω_N|`.
    pub fn from_cube_values(dim: usize, levels: Vec<Vec<T>>) -> Result<Self> {
        Self::from_table(CubeTable::new(dim, levels)?)
    }

    pub fn from_table(table: CubeTable<T>) -> Result<Self> {
        let tol = T::additivity_rel_tol() * table.leaf_scale();
        if let Some((gen, index, residual)) = table.worst_additivity_residual() {
            if residual > tol {
                return Err(Error::AdditivityViolation {
                    gen,
                    index,
                    residual: residual.as_f64(),
                    tolerance: tol.as_f64(),
                });
            }
        }
        Ok(Self { table })
    }

    /// Charge determined by its deepest generation; coarser values are sums.
    pub fn from_leaves(dim: usize, depth: u32, leaves: Vec<T>) -> Result<Self> {
        Self::from_table(CubeTable::sum_from_leaves(dim, depth, leaves)?)
    }

    pub(crate) fn from_table_unchecked(table: CubeTable<T>) -> Self {
        Self { table }
    }

    /// Lebesgue measure, `ω(K) = |K|`.
    pub fn lebesgue(dim: usize, depth: u32) -> Result<Self> {
        check_table_shape(dim, depth)?;
        let levels = (0..=depth)
            .map(|n| vec![pow2::<T>(-((n as usize * dim) as i32)); level_len(dim, n)])
            .collect();
        Self::from_cube_values(dim, levels)
    }

    pub fn zero(dim: usize, depth: u32) -> Result<Self> {
        check_table_shape(dim, depth)?;
        Self::from_leaves(dim, depth, vec![T::zero(); level_len(dim, depth)])
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn depth(&self) -> u32 {
        self.table.depth
    }

    pub fn level(&self, gen: u32) -> &[T] {
        self.table.level(gen)
    }

    pub fn levels(&self) -> &[Vec<T>] {
        self.table.levels()
    }

    pub fn table(&self) -> &CubeTable<T> {
        &self.table
    }

    pub fn into_table(self) -> CubeTable<T> {
        self.table
    }

    /// `ω([0,1]^d)`.
    pub fn total(&self) -> T {
        self.table.levels[0][0]
    }

    pub fn get(&self, cube: &CubeIndex) -> Result<T> {
        self.table.get(cube)
    }

    /// Sum of `ω` over the member cubes of a dyadic figure.
    pub fn eval_figure(&self, fig: &DyadicFigure) -> Result<T> {
        if fig.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: fig.dim(),
            });
        }
        fig.cubes().iter().map(|c| self.get(c)).sum()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        Ok(Self {
            table: self.table.zip_with(&other.table, |x, y| a * x + b * y)?,
        })
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            table: self.table.map(|v| a * v),
        }
    }

    /// Largest `|ω(K) − ω(L)|` over all cubes.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        let diff = self.table.zip_with(&other.table, |x, y| (x - y).abs())?;
        Ok(diff
            .levels
            .iter()
            .flatten()
            .fold(T::zero(), |m, &v| m.max(v)))
    }

    /// Largest `|ω(K)|` over all cubes.
    pub fn max_abs(&self) -> T {
        self.table
            .levels
            .iter()
            .flatten()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// `T_f(K) = ∫_K f` for a field of cell averages: each generation-`depth`
/// cube receives the sum of its cells' averages times the cell volume.
pub fn charge_from_density<T: Scalar>(f: &CellField<T>, depth: u32) -> Result<CubeCharge<T>> {
    let res = f.resolution();
    if depth > res {
        return Err(Error::DepthExceedsResolution {
            depth,
            resolution: res,
        });
    }
    let d = f.dim();
    let cell_vol = pow2::<T>(-((res as usize * d) as i32));
    let vals = f.values();
    let leaves: Vec<T> = if depth == res {
        vals.iter().map(|&v| v * cell_vol).collect()
    } else {
        (0..level_len(d, depth))
            .into_par_iter()
            .map(|k| {
                CubeIndex::from_linear(d, depth, k)
                    .descendants_linear(res)
                    .into_iter()
                    .map(|c| vals[c])
                    .sum::<T>()
                    * cell_vol
            })
            .collect()
    };
    CubeCharge::from_leaves(d, depth, leaves)
}

/// `ω(K) = Δ_f(K)`, the rectangular increment of vertex samples.
pub fn charge_from_increments<T: Scalar>(f: &VertexField<T>, depth: u32) -> Result<CubeCharge<T>> {
    let leaves = cube_increments(f, depth)?;
    CubeCharge::from_leaves(f.dim(), depth, leaves)
}
