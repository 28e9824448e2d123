use rayon::prelude::*;
use serde::Serialize;

use super::{level_len, CubeCharge, CubeTable};
use crate::dyadic::cube::lin;
use crate::dyadic::{CubeIndex, HaarIndex, Pattern};
use crate::error::{Error, Result};
use crate::scalar::{pow2, sqrt2_pow, Scalar};

/// Haar coefficients `ω(h_{-1})` and `ω(h_{n,k,e})` for `n < depth`.
///
/// Generation `n` holds `2^{nd}·(2^d − 1)` values; the entry for cube `k` and
/// pattern mask `e` sits at `k·(2^d − 1) + (e − 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaberCoeffs<T> {
    dim: usize,
    depth: u32,
    exceptional: T,
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> FaberCoeffs<T> {
    pub fn new(dim: usize, exceptional: T, levels: Vec<Vec<T>>) -> Result<Self> {
        let depth = levels.len() as u32;
        super::check_table_shape(dim, depth)?;
        if !exceptional.is_finite() {
            return Err(Error::MalformedField("non-finite exceptional coefficient".into()));
        }
        let per = (1usize << dim) - 1;
        for (n, lv) in levels.iter().enumerate() {
            let want = level_len(dim, n as u32) * per;
            if lv.len() != want {
                return Err(Error::MalformedField(format!(
                    "generation {n}: expected {want} coefficients, got {}",
                    lv.len()
                )));
            }
            if let Some(i) = lv.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedField(format!(
                    "non-finite coefficient at generation {n}, slot {i}"
                )));
            }
        }
        Ok(Self {
            dim,
            depth,
            exceptional,
            levels,
        })
    }

    pub fn zero(dim: usize, depth: u32) -> Result<Self> {
        let per = (1usize << dim) - 1;
        let levels = (0..depth).map(|n| vec![T::zero(); level_len(dim, n) * per]).collect();
        Self::new(dim, T::zero(), levels)
    }

    /// Coefficient tree with a single unit entry.
    pub fn unit(dim: usize, depth: u32, idx: &HaarIndex) -> Result<Self> {
        let mut c = Self::zero(dim, depth)?;
        c.set(idx, T::one())?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn exceptional(&self) -> T {
        self.exceptional
    }

    /// Generation-`n` coefficients in storage order.
    pub fn level(&self, gen: u32) -> &[T] {
        &self.levels[gen as usize]
    }

    pub fn levels(&self) -> &[Vec<T>] {
        &self.levels
    }

    fn slot(&self, cube: &CubeIndex, pattern: Pattern) -> Result<(usize, usize)> {
        if cube.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: cube.dim(),
            });
        }
        if cube.gen() >= self.depth {
            return Err(Error::DepthExceedsResolution {
                depth: cube.gen(),
                resolution: self.depth,
            });
        }
        let per = (1usize << self.dim) - 1;
        Ok((
            cube.gen() as usize,
            cube.linear() * per + pattern.mask() as usize - 1,
        ))
    }

    pub fn get(&self, idx: &HaarIndex) -> Result<T> {
        match idx {
            HaarIndex::Exceptional { dim } if *dim == self.dim => Ok(self.exceptional),
            HaarIndex::Exceptional { dim } => Err(Error::DimensionMismatch {
                expected: self.dim,
                got: *dim,
            }),
            HaarIndex::Regular { cube, pattern } => {
                let (n, i) = self.slot(cube, *pattern)?;
                Ok(self.levels[n][i])
            }
        }
    }

    pub fn set(&mut self, idx: &HaarIndex, value: T) -> Result<()> {
        match idx {
            HaarIndex::Exceptional { dim } if *dim == self.dim => {
                self.exceptional = value;
                Ok(())
            }
            HaarIndex::Exceptional { dim } => Err(Error::DimensionMismatch {
                expected: self.dim,
                got: *dim,
            }),
            HaarIndex::Regular { cube, pattern } => {
                let (n, i) = self.slot(cube, *pattern)?;
                self.levels[n][i] = value;
                Ok(())
            }
        }
    }

    /// Largest `|a_{n,k,e}|` at generation `n`.
    pub fn max_abs_at(&self, gen: u32) -> T {
        self.levels[gen as usize]
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Haar analysis of a charge:
/// `a_{-1} = ω([0,1]^d)` and `a_{n,k,e} = 2^{nd/2} Σ_L sign_e(L) ω(L)` over
/// the children `L` of cube `(n,k)`.
pub fn to_faber_coeffs<T: Scalar>(cc: &CubeCharge<T>) -> Result<FaberCoeffs<T>> {
    let d = cc.dim();
    let depth = cc.depth();
    if depth < 1 {
        return Err(Error::InvalidDepth(depth));
    }
    let per = (1usize << d) - 1;
    let levels = (0..depth)
        .map(|n| {
            let child = cc.level(n + 1);
            let offs = lin::child_offsets(n, d);
            let scale: T = sqrt2_pow((n as usize * d) as i64);
            let mut out = vec![T::zero(); level_len(d, n) * per];
            out.par_chunks_mut(per).enumerate().for_each(|(k, chunk)| {
                let base = lin::first_child(k, n, d);
                for (e, a) in chunk.iter_mut().enumerate() {
                    let p = Pattern::new(d, e as u32 + 1).expect("valid mask");
                    let mut s = T::zero();
                    for (slot, &o) in offs.iter().enumerate() {
                        let v = child[base + o];
                        if p.sign(slot) > 0 {
                            s += v;
                        } else {
                            s -= v;
                        }
                    }
                    *a = scale * s;
                }
            });
            out
        })
        .collect();
    FaberCoeffs::new(d, cc.total(), levels)
}

/// Haar synthesis: the inverse of [`to_faber_coeffs`].
///
/// Each child receives `ω(K)/2^d + 2^{-nd/2}·2^{-d}·Σ_e sign_e(L) a_{n,k,e}`.
pub fn from_faber_coeffs<T: Scalar>(fc: &FaberCoeffs<T>) -> Result<CubeCharge<T>> {
    let d = fc.dim();
    let depth = fc.depth();
    let per = (1usize << d) - 1;
    let inv_children = pow2::<T>(-(d as i32));
    let mut levels: Vec<Vec<T>> = vec![vec![fc.exceptional()]];
    for n in 0..depth {
        let parent = &levels[n as usize];
        let coeffs = fc.level(n);
        let scale = inv_children / sqrt2_pow::<T>((n as usize * d) as i64);
        let mut next = vec![T::zero(); level_len(d, n + 1)];
        next.par_iter_mut().enumerate().for_each(|(l, out)| {
            let k = lin::parent(l, n + 1, d);
            let slot = lin::slot(l, n + 1, d);
            let mut s = T::zero();
            for (e, &a) in coeffs[k * per..(k + 1) * per].iter().enumerate() {
                let p = Pattern::new(d, e as u32 + 1).expect("valid mask");
                if p.sign(slot) > 0 {
                    s += a;
                } else {
                    s -= a;
                }
            }
            *out = parent[k] * inv_children + scale * s;
        });
        levels.push(next);
    }
    // Each parent equals the sum of its children up to rounding; the table is
    // additive by construction, so only the shape is validated here.
    Ok(CubeCharge::from_table_unchecked(CubeTable::new(d, levels)?))
}
