use rayon::prelude::*;

use super::cube::lin;
use super::field::VertexField;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rectangular increment `Δ_f(Π [lo_i, hi_i])` between two vertex-grid
/// indices: the alternating corner sum, where a corner taking the lower
/// coordinate on an axis contributes a factor `-1`.
pub fn rect_increment<T: Scalar>(f: &VertexField<T>, lo: &[usize], hi: &[usize]) -> Result<T> {
    let d = f.dim();
    for p in [lo, hi] {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    let m = f.points_per_axis();
    if lo.iter().chain(hi).any(|&v| v >= m) || lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Err(Error::OffGrid(
            lo.iter().chain(hi).map(|&v| v as f64).collect(),
        ));
    }
    let mut acc = T::zero();
    let mut corner = vec![0usize; d];
    for c in 0..1usize << d {
        let mut negative = false;
        for i in 0..d {
            if (c >> (d - 1 - i)) & 1 == 1 {
                corner[i] = hi[i];
            } else {
                corner[i] = lo[i];
                negative = !negative;
            }
        }
        let v = f.values()[f.flat_index(&corner)];
        if negative {
            acc -= v;
        } else {
            acc += v;
        }
    }
    Ok(acc)
}

/// [`rect_increment`] with real corner coordinates, which must lie on the grid.
pub fn rect_increment_at<T: Scalar>(f: &VertexField<T>, lo: &[T], hi: &[T]) -> Result<T> {
    let lo = f.grid_index_of(lo)?;
    let hi = f.grid_index_of(hi)?;
    rect_increment(f, &lo, &hi)
}

/// Increment over the generation-`gen` cube with row-major index `k`.
#[inline]
pub(crate) fn cube_increment<T: Scalar>(f: &VertexField<T>, gen: u32, k: usize, scratch: &mut [usize]) -> T {
    let d = f.dim();
    let (pos, off) = scratch.split_at_mut(d);
    lin::coords(k, gen, d, pos);
    let mut acc = T::zero();
    for c in 0..1usize << d {
        let mut ones = 0;
        for (i, o) in off.iter_mut().enumerate() {
            *o = (c >> (d - 1 - i)) & 1;
            ones += *o;
        }
        let v = f.at_cube_corner(gen, pos, off);
        if (d - ones) % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc
}

/// Increments of every generation-`gen` cube, row-major.
pub fn cube_increments<T: Scalar>(f: &VertexField<T>, gen: u32) -> Result<Vec<T>> {
    if gen > f.resolution() {
        return Err(Error::DepthExceedsResolution {
            depth: gen,
            resolution: f.resolution(),
        });
    }
    let d = f.dim();
    let count = 1usize << (gen as usize * d);
    Ok((0..count)
        .into_par_iter()
        .map_init(
            || vec![0usize; 2 * d],
            |scratch, k| cube_increment(f, gen, k, scratch),
        )
        .collect())
}

/// Sum of `|Δ_f(K)|` over the generation-`gen` dyadic cubes.
///
/// This is the Vitali variation restricted to one dyadic partition; it is
/// nondecreasing in `gen` and bounds the full variation from below.
pub fn vitali_variation_dyadic<T: Scalar>(f: &VertexField<T>, gen: u32) -> Result<T> {
    let incs = cube_increments(f, gen)?;
    Ok(incs.into_iter().map(|v| v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(res: u32, f: impl Fn(f64, f64) -> f64) -> VertexField<f64> {
        VertexField::from_fn(2, res, |x| f(x[0], x[1])).unwrap()
    }

    #[test]
    fn product_function_increment() {
        let f = field(3, |x, y| x * y);
        assert_eq!(rect_increment(&f, &[0, 0], &[8, 8]).unwrap(), 1.0);
    }

    #[test]
    fn single_variable_cancels() {
        let f = field(3, |x, _| x);
        assert_eq!(rect_increment(&f, &[1, 2], &[7, 5]).unwrap(), 0.0);
        let g = field(3, |_, y| y * y);
        assert_eq!(rect_increment(&g, &[0, 0], &[3, 8]).unwrap(), 0.0);
    }

    #[test]
    fn squared_product_on_half_rectangle() {
        let f = field(4, |x, y| x * x * y * y);
        let v = rect_increment_at(&f, &[0.0, 0.0], &[0.5, 1.0]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn off_grid_and_order_errors() {
        let f = field(2, |x, y| x + y);
        assert!(rect_increment_at(&f, &[0.1, 0.0], &[0.5, 1.0]).is_err());
        assert!(rect_increment(&f, &[3, 0], &[1, 4]).is_err());
        assert!(rect_increment(&f, &[0, 0], &[5, 4]).is_err());
    }

    #[test]
    fn one_dimensional_increment_is_difference() {
        let f = VertexField::<f64>::from_fn(1, 3, |x| x[0] * x[0]).unwrap();
        assert_eq!(rect_increment(&f, &[2], &[6]).unwrap(), 0.75 * 0.75 - 0.25 * 0.25);
    }

    #[test]
    fn cube_increments_match_rect() {
        let f = field(4, |x, y| (3.0 * x).sin() * (2.0 * y + x).cos());
        for gen in 0..=4 {
            let incs = cube_increments(&f, gen).unwrap();
            let s = 1usize << (4 - gen);
            for (k, v) in incs.iter().enumerate() {
                let c = super::super::cube::CubeIndex::from_linear(2, gen, k);
                let lo: Vec<usize> = c.pos().iter().map(|&p| p as usize * s).collect();
                let hi: Vec<usize> = lo.iter().map(|&p| p + s).collect();
                assert!((v - rect_increment(&f, &lo, &hi).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_has_no_variation() {
        let f = field(4, |_, _| 3.5);
        for n in 0..=4 {
            assert_eq!(vitali_variation_dyadic(&f, n).unwrap(), 0.0);
        }
    }
}
