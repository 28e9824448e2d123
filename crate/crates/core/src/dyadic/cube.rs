use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pow2, Scalar};

/// Largest supported generation. Positions are stored as `u64` and the
/// row-major linear index of a cube must fit a `usize`.
pub const MAX_GEN: u32 = 40;

/// Address of the dyadic cube `Π_i [k_i 2^-n, (k_i + 1) 2^-n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeIndex {
    gen: u32,
    pos: Vec<u64>,
}

impl CubeIndex {
    pub fn new(gen: u32, pos: Vec<u64>) -> Result<Self> {
        if pos.is_empty() {
            return Err(Error::InvalidCube("dimension must be at least 1".into()));
        }
        if gen > MAX_GEN {
            return Err(Error::InvalidCube(format!(
                "generation {gen} exceeds {MAX_GEN}"
            )));
        }
        let side = 1u64 << gen;
        if let Some(k) = pos.iter().find(|&&k| k >= side) {
            return Err(Error::InvalidCube(format!(
                "position {k} out of range for generation {gen}"
            )));
        }
        Ok(Self { gen, pos })
    }

    /// The unit cube `[0,1]^d`.
    pub fn root(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            gen: 0,
            pos: vec![0; dim],
        }
    }

    /// Inverse of [`CubeIndex::linear`].
    pub fn from_linear(dim: usize, gen: u32, lin: usize) -> Self {
        let mask = (1u64 << gen) - 1;
        let pos = (0..dim)
            .map(|i| ((lin as u64) >> (gen as usize * (dim - 1 - i))) & mask)
            .collect();
        Self { gen, pos }
    }

    pub fn dim(&self) -> usize {
        self.pos.len()
    }

    pub fn gen(&self) -> u32 {
        self.gen
    }

    pub fn pos(&self) -> &[u64] {
        &self.pos
    }

    /// Row-major linearisation in `[0, 2^{nd})`; the first axis varies slowest.
    pub fn linear(&self) -> usize {
        let n = self.gen as usize;
        self.pos
            .iter()
            .fold(0usize, |acc, &k| (acc << n) | k as usize)
    }

    pub fn side<T: Scalar>(&self) -> T {
        pow2(-(self.gen as i32))
    }

    /// Lebesgue measure `2^{-nd}`.
    pub fn volume<T: Scalar>(&self) -> T {
        pow2(-((self.gen as usize * self.dim()) as i32))
    }

    /// Lower-left corner `y_{n,k} = k 2^-n`.
    pub fn lower_corner<T: Scalar>(&self) -> Vec<T> {
        let h: T = self.side();
        self.pos.iter().map(|&k| T::lit(k as f64) * h).collect()
    }

    pub fn center<T: Scalar>(&self) -> Vec<T> {
        let h: T = self.side();
        let half = T::lit(0.5);
        self.pos
            .iter()
            .map(|&k| (T::lit(k as f64) + half) * h)
            .collect()
    }

    pub fn parent(&self) -> Option<CubeIndex> {
        (self.gen > 0).then(|| CubeIndex {
            gen: self.gen - 1,
            pos: self.pos.iter().map(|k| k >> 1).collect(),
        })
    }

    /// The `2^d` children in row-major order of their offsets.
    pub fn children(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        let d = self.dim();
        (0..1usize << d).map(move |c| CubeIndex {
            gen: self.gen + 1,
            pos: self
                .pos
                .iter()
                .enumerate()
                .map(|(i, &k)| 2 * k + ((c >> (d - 1 - i)) & 1) as u64)
                .collect(),
        })
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn contains(&self, other: &CubeIndex) -> bool {
        if other.dim() != self.dim() || other.gen < self.gen {
            return false;
        }
        let shift = other.gen - self.gen;
        self.pos
            .iter()
            .zip(&other.pos)
            .all(|(&k, &l)| l >> shift == k)
    }

    /// Position scaled to generation `gen >= self.gen`, i.e. the position of
    /// the lowest descendant.
    pub(crate) fn scaled_pos(&self, gen: u32) -> impl Iterator<Item = u64> + '_ {
        let shift = gen - self.gen;
        self.pos.iter().map(move |&k| k << shift)
    }

    /// Linear indices of all descendants at generation `gen`.
    pub fn descendants_linear(&self, gen: u32) -> Vec<usize> {
        assert!(gen >= self.gen);
        let d = self.dim();
        let shift = gen - self.gen;
        let per_axis = 1u64 << shift;
        let total = 1usize << (shift as usize * d);
        let base: Vec<u64> = self.scaled_pos(gen).collect();
        (0..total)
            .map(|off| {
                let mut lin = 0usize;
                for (i, &b) in base.iter().enumerate() {
                    let o = (off as u64 >> (shift as usize * (d - 1 - i))) & (per_axis - 1);
                    lin = (lin << gen) | (b + o) as usize;
                }
                lin
            })
            .collect()
    }

    /// Lexicographic order of lower corners, coarser cube first on ties.
    pub fn corner_cmp(&self, other: &CubeIndex) -> Ordering {
        let g = self.gen.max(other.gen);
        self.scaled_pos(g)
            .cmp(other.scaled_pos(g))
            .then(self.gen.cmp(&other.gen))
    }
}

/// Index arithmetic on row-major generation arrays.
pub(crate) mod lin {
    /// Linear index of the first child (offset 0) of cube `k` at generation `gen`.
    #[inline]
    pub fn first_child(k: usize, gen: u32, dim: usize) -> usize {
        let n = gen as usize;
        let mask = (1usize << n) - 1;
        let mut out = 0usize;
        for i in 0..dim {
            let ki = (k >> (n * (dim - 1 - i))) & mask;
            out |= (2 * ki) << ((n + 1) * (dim - 1 - i));
        }
        out
    }

    /// Offsets to add to [`first_child`] for each of the `2^d` children.
    pub fn child_offsets(gen: u32, dim: usize) -> Vec<usize> {
        let n1 = gen as usize + 1;
        (0..1usize << dim)
            .map(|c| {
                (0..dim).fold(0usize, |acc, i| {
                    acc | (((c >> (dim - 1 - i)) & 1) << (n1 * (dim - 1 - i)))
                })
            })
            .collect()
    }

    /// Linear index of the parent of cube `k` at generation `gen >= 1`.
    #[inline]
    pub fn parent(k: usize, gen: u32, dim: usize) -> usize {
        let n = gen as usize;
        let mask = (1usize << n) - 1;
        let mut out = 0usize;
        for i in 0..dim {
            let ki = (k >> (n * (dim - 1 - i))) & mask;
            out |= (ki >> 1) << ((n - 1) * (dim - 1 - i));
        }
        out
    }

    /// Child slot of cube `k` within its parent, as a row-major bit pattern.
    #[inline]
    pub fn slot(k: usize, gen: u32, dim: usize) -> usize {
        let n = gen as usize;
        (0..dim).fold(0usize, |acc, i| (acc << 1) | ((k >> (n * (dim - 1 - i))) & 1))
    }

    /// Per-axis positions of cube `k`.
    #[inline]
    pub fn coords(k: usize, gen: u32, dim: usize, out: &mut [usize]) {
        let n = gen as usize;
        let mask = (1usize << n) - 1;
        for (i, o) in out.iter_mut().enumerate().take(dim) {
            *o = (k >> (n * (dim - 1 - i))) & mask;
        }
    }
}
