//! Haar functions on `[0,1]^d` and the one-dimensional Faber–Schauder tents.
//!
//! A pattern `e ∈ {0,1}^d \ {0}` selects, per axis, either the oscillating
//! factor `1_{[0,1/2)} - 1_{[1/2,1]}` (`e_i = 1`) or the constant factor
//! (`e_i = 0`). Bit `d-1-i` of the stored mask is `e_i`, so `e = (1,0)` in
//! two dimensions is the mask `0b10`.
//!
//! Breakpoints follow the half-open convention: cells are `[a, b)` except the
//! last cell along each axis, which also contains the right endpoint `1`.

use serde::{Deserialize, Serialize};

use super::cube::CubeIndex;
use crate::error::{Error, Result};
use crate::scalar::{sqrt2_pow, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern(u32);

impl Pattern {
    pub fn new(dim: usize, mask: u32) -> Result<Self> {
        if mask == 0 || dim >= 32 || mask >= 1 << dim {
            return Err(Error::InvalidPattern { pattern: mask, dim });
        }
        Ok(Self(mask))
    }

    /// Builds a pattern from the bits `(e_1, …, e_d)`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mask = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b != 0));
        Self::new(bits.len(), mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    /// All `2^d - 1` patterns in increasing mask order.
    pub fn all(dim: usize) -> impl Iterator<Item = Pattern> {
        (1u32..1 << dim).map(Pattern)
    }

    /// Sign of the Haar function on the child with row-major slot `slot`.
    #[inline]
    pub fn sign(self, slot: usize) -> i32 {
        if (self.0 as usize & slot).count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HaarIndex {
    /// `h_{-1} = 1` on the unit cube.
    Exceptional { dim: usize },
    /// `h_{n,k,e}` supported on the cube `(n, k)`.
    Regular { cube: CubeIndex, pattern: Pattern },
}

impl HaarIndex {
    pub fn regular(cube: CubeIndex, pattern: Pattern) -> Result<Self> {
        if pattern.mask() >= 1 << cube.dim() {
            return Err(Error::InvalidPattern {
                pattern: pattern.mask(),
                dim: cube.dim(),
            });
        }
        Ok(HaarIndex::Regular { cube, pattern })
    }

    pub fn dim(&self) -> usize {
        match self {
            HaarIndex::Exceptional { dim } => *dim,
            HaarIndex::Regular { cube, .. } => cube.dim(),
        }
    }

    /// Every Haar index up to and including generation `max_gen`, in
    /// increasing generation order.
    pub fn enumerate(dim: usize, max_gen: u32) -> Vec<HaarIndex> {
        let mut out = vec![HaarIndex::Exceptional { dim }];
        for n in 0..=max_gen {
            for k in 0..1usize << (n as usize * dim) {
                for e in Pattern::all(dim) {
                    out.push(HaarIndex::Regular {
                        cube: CubeIndex::from_linear(dim, n, k),
                        pattern: e,
                    });
                }
            }
        }
        out
    }
}

/// Index of the half-open generation-`gen` cell containing `x ∈ [0, 1]`.
#[inline]
pub(crate) fn cell_of<T: Scalar>(x: T, gen: u32) -> u64 {
    let cells = 1u64 << gen;
    let scaled = (x * T::lit(cells as f64)).floor();
    let c = scaled.to_u64().unwrap_or(0);
    c.min(cells - 1)
}

fn check_point<T: Scalar>(x: &[T]) -> Result<()> {
    if x.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
        return Err(Error::OutOfDomain(x.iter().map(|v| v.as_f64()).collect()));
    }
    Ok(())
}

pub fn haar_eval<T: Scalar>(idx: &HaarIndex, x: &[T]) -> Result<T> {
    if x.len() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            got: x.len(),
        });
    }
    check_point(x)?;
    let (cube, pattern) = match idx {
        HaarIndex::Exceptional { .. } => return Ok(T::one()),
        HaarIndex::Regular { cube, pattern } => (cube, pattern),
    };
    let d = cube.dim();
    let n = cube.gen();
    let mut sign = 1i32;
    for (i, (&xi, &ki)) in x.iter().zip(cube.pos()).enumerate() {
        if cell_of(xi, n) != ki {
            return Ok(T::zero());
        }
        let upper = cell_of(xi, n + 1) - 2 * ki;
        let oscillating = (pattern.mask() >> (d - 1 - i)) & 1 == 1;
        if oscillating && upper == 1 {
            sign = -sign;
        }
    }
    let scale: T = sqrt2_pow((n as usize * d) as i64);
    Ok(if sign > 0 { scale } else { -scale })
}

/// Faber–Schauder function `f_{-1}(x) = x` or the tent `f_{n,k} = ∫_0^x h_{n,k}`.
pub fn faber_eval_1d<T: Scalar>(idx: &HaarIndex, x: T) -> Result<T> {
    if idx.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: idx.dim(),
        });
    }
    check_point(&[x])?;
    let cube = match idx {
        HaarIndex::Exceptional { .. } => return Ok(x),
        HaarIndex::Regular { cube, .. } => cube,
    };
    let n = cube.gen();
    let h: T = cube.side();
    let left = T::lit(cube.pos()[0] as f64) * h;
    let right = left + h;
    let mid = left + h * T::lit(0.5);
    if x <= left || x >= right {
        return Ok(T::zero());
    }
    let slope: T = sqrt2_pow(n as i64);
    Ok(if x <= mid {
        slope * (x - left)
    } else {
        slope * (right - x)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(gen: u32, pos: &[u64], bits: &[u8]) -> HaarIndex {
        HaarIndex::regular(
            CubeIndex::new(gen, pos.to_vec()).unwrap(),
            Pattern::from_bits(bits).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_mother_wavelet() {
        let h = reg(0, &[0], &[1]);
        assert_eq!(haar_eval(&h, &[0.25]).unwrap(), 1.0);
        assert_eq!(haar_eval(&h, &[0.75]).unwrap(), -1.0);
        // breakpoint belongs to the upper half; the right endpoint is included
        assert_eq!(haar_eval(&h, &[0.5]).unwrap(), -1.0);
        assert_eq!(haar_eval(&h, &[1.0]).unwrap(), -1.0);
    }

    #[test]
    fn diagonal_pattern_in_two_dimensions() {
        let h = reg(0, &[0, 0], &[1, 1]);
        assert_eq!(haar_eval(&h, &[0.25, 0.75]).unwrap(), -1.0);
        assert_eq!(haar_eval(&h, &[0.25, 0.25]).unwrap(), 1.0);
        assert_eq!(haar_eval(&h, &[0.75, 0.75]).unwrap(), 1.0);
    }

    #[test]
    fn scaled_generation_one() {
        let h = reg(1, &[0], &[1]);
        let v = haar_eval(&h, &[0.1]).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        // scale formula 2^{1/2} h_{0,0}(2x)
        let h0 = reg(0, &[0], &[1]);
        let direct = 2f64.sqrt() * haar_eval(&h0, &[0.2]).unwrap();
        assert_eq!(v, direct);
    }

    #[test]
    fn zero_outside_support() {
        let h = reg(2, &[1, 2], &[0, 1]);
        assert_eq!(haar_eval(&h, &[0.9, 0.9]).unwrap(), 0.0);
        assert_eq!(haar_eval(&h, &[0.1, 0.6]).unwrap(), 0.0);
    }

    #[test]
    fn exceptional_and_errors() {
        let e = HaarIndex::Exceptional { dim: 2 };
        assert_eq!(haar_eval(&e, &[0.3, 0.9]).unwrap(), 1.0);
        assert!(matches!(
            haar_eval(&e, &[0.3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(haar_eval(&e, &[0.3, 1.5]).is_err());
        assert!(Pattern::from_bits(&[0, 0]).is_err());
        assert!(Pattern::new(2, 4).is_err());
    }

    #[test]
    fn faber_tents() {
        let ex = HaarIndex::Exceptional { dim: 1 };
        assert_eq!(faber_eval_1d(&ex, 1.0).unwrap(), 1.0);
        let t = reg(0, &[0], &[1]);
        assert_eq!(faber_eval_1d(&t, 0.5).unwrap(), 0.5);
        let t3 = reg(3, &[5], &[1]);
        assert_eq!(faber_eval_1d(&t3, 5.0 / 8.0).unwrap(), 0.0);
        let peak = faber_eval_1d(&t3, 5.5 / 8.0).unwrap();
        assert!((peak - 2f64.powf(-1.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn tent_is_cumulative_haar() {
        // midpoint-rule cumulative sum of h_{n,k} reproduces the tent on the grid
        let m = 1usize << 10;
        for (n, k) in [(0u32, 0u64), (2, 1), (3, 6)] {
            let h = reg(n, &[k], &[1]);
            let mut acc = 0.0;
            for j in 0..m {
                let x = (j as f64 + 0.5) / m as f64;
                acc += haar_eval(&h, &[x]).unwrap() / m as f64;
                let t = faber_eval_1d(&h, (j + 1) as f64 / m as f64).unwrap();
                assert!((acc - t).abs() < 1e-12);
            }
        }
    }
}
