use crate::error::{Error, Result};
use crate::scalar::{pow2, Scalar};

/// Samples `f(j 2^-N)` on the vertex grid `j ∈ {0, …, 2^N}^d`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexField<T> {
    dim: usize,
    resolution: u32,
    values: Vec<T>,
}

/// Cell averages on the `2^{Nd}` generation-`N` cells, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField<T> {
    dim: usize,
    resolution: u32,
    values: Vec<T>,
}

fn check_values<T: Scalar>(values: &[T], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::MalformedField(format!(
            "expected {expected} values, got {}",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::MalformedField(format!("non-finite value at {i}")));
    }
    Ok(())
}

fn check_shape(dim: usize, resolution: u32, points_per_axis: usize) -> Result<usize> {
    if dim == 0 {
        return Err(Error::MalformedField("dimension must be at least 1".into()));
    }
    if resolution > 30 {
        return Err(Error::MalformedField(format!(
            "resolution {resolution} too large"
        )));
    }
    (points_per_axis as u128)
        .checked_pow(dim as u32)
        .filter(|&n| n <= (1u128 << 34))
        .map(|n| n as usize)
        .ok_or_else(|| Error::MalformedField("grid too large".into()))
}

/// Visits every multi-index of `{0, …, m-1}^d` in row-major order.
pub(crate) fn for_each_index(dim: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; dim];
    let total = m.pow(dim as u32);
    for _ in 0..total {
        f(&idx);
        for i in (0..dim).rev() {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
        }
    }
}

impl<T: Scalar> VertexField<T> {
    pub fn new(dim: usize, resolution: u32, values: Vec<T>) -> Result<Self> {
        let n = check_shape(dim, resolution, (1usize << resolution) + 1)?;
        check_values(&values, n)?;
        Ok(Self {
            dim,
            resolution,
            values,
        })
    }

    /// Samples `f` at every grid vertex.
    pub fn from_fn(dim: usize, resolution: u32, mut f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let m = (1usize << resolution) + 1;
        check_shape(dim, resolution, m)?;
        let h: T = pow2(-(resolution as i32));
        let mut values = Vec::with_capacity(m.pow(dim as u32));
        let mut x = vec![T::zero(); dim];
        for_each_index(dim, m, |j| {
            for (xi, &ji) in x.iter_mut().zip(j) {
                *xi = T::lit(ji as f64) * h;
            }
            values.push(f(&x));
        });
        Self::new(dim, resolution, values)
    }

    pub fn constant(dim: usize, resolution: u32, c: T) -> Result<Self> {
        Self::from_fn(dim, resolution, |_| c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Number of grid points per axis, `2^N + 1`.
    pub fn points_per_axis(&self) -> usize {
        (1usize << self.resolution) + 1
    }

    #[inline]
    pub(crate) fn flat_index(&self, j: &[usize]) -> usize {
        let m = self.points_per_axis();
        j.iter().fold(0usize, |acc, &ji| acc * m + ji)
    }

    /// Value at grid index `j`.
    pub fn get(&self, j: &[usize]) -> Result<T> {
        if j.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: j.len(),
            });
        }
        let m = self.points_per_axis();
        if j.iter().any(|&ji| ji >= m) {
            return Err(Error::OffGrid(j.iter().map(|&v| v as f64).collect()));
        }
        Ok(self.values[self.flat_index(j)])
    }

    /// Grid index of a point, which must be an exact multiple of `2^-N`.
    pub fn grid_index_of(&self, x: &[T]) -> Result<Vec<usize>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let scale = T::lit((1u64 << self.resolution) as f64);
        let off = || Error::OffGrid(x.iter().map(|v| v.as_f64()).collect());
        x.iter()
            .map(|&xi| {
                let s = xi * scale;
                if s.fract() != T::zero() || s < T::zero() || s > scale {
                    Err(off())
                } else {
                    s.to_usize().ok_or_else(off)
                }
            })
            .collect()
    }

    /// Value at the lower corner `k 2^-n` of a generation-`gen` cube.
    #[inline]
    pub(crate) fn at_cube_corner(&self, gen: u32, k: &[usize], offset: &[usize]) -> T {
        let shift = self.resolution - gen;
        let m = self.points_per_axis();
        let flat = k
            .iter()
            .zip(offset)
            .fold(0usize, |acc, (&ki, &oi)| acc * m + ((ki + oi) << shift));
        self.values[flat]
    }

    /// Restriction to a coarser vertex grid.
    pub fn coarsen(&self, resolution: u32) -> Result<Self> {
        if resolution > self.resolution {
            return Err(Error::DepthExceedsResolution {
                depth: resolution,
                resolution: self.resolution,
            });
        }
        let shift = self.resolution - resolution;
        let m = (1usize << resolution) + 1;
        let mut values = Vec::with_capacity(m.pow(self.dim as u32));
        for_each_index(self.dim, m, |j| {
            let fine: Vec<usize> = j.iter().map(|&v| v << shift).collect();
            values.push(self.values[self.flat_index(&fine)]);
        });
        Self::new(self.dim, resolution, values)
    }

    /// Pointwise linear combination `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: T, other: &VertexField<T>, b: T) -> Result<Self> {
        if self.dim != other.dim || self.resolution != other.resolution {
            return Err(Error::MalformedField("grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.dim, self.resolution, values)
    }
}

impl<T: Scalar> CellField<T> {
    pub fn new(dim: usize, resolution: u32, values: Vec<T>) -> Result<Self> {
        let n = check_shape(dim, resolution, 1usize << resolution)?;
        check_values(&values, n)?;
        Ok(Self {
            dim,
            resolution,
            values,
        })
    }

    /// Cell averages approximated by the value at each cell centre.
    pub fn from_fn_midpoint(
        dim: usize,
        resolution: u32,
        mut f: impl FnMut(&[T]) -> T,
    ) -> Result<Self> {
        let m = 1usize << resolution;
        check_shape(dim, resolution, m)?;
        let h: T = pow2(-(resolution as i32));
        let half = T::lit(0.5);
        let mut values = Vec::with_capacity(m.pow(dim as u32));
        let mut x = vec![T::zero(); dim];
        for_each_index(dim, m, |j| {
            for (xi, &ji) in x.iter_mut().zip(j) {
                *xi = (T::lit(ji as f64) + half) * h;
            }
            values.push(f(&x));
        });
        Self::new(dim, resolution, values)
    }

    /// Tensor trapezoid averages: the mean of the `2^d` corner samples of each cell.
    pub fn from_vertex_trapezoid(f: &VertexField<T>) -> Result<Self> {
        let dim = f.dim();
        let res = f.resolution();
        let m = 1usize << res;
        let corners = 1usize << dim;
        let w = T::one() / T::lit(corners as f64);
        let mut values = Vec::with_capacity(m.pow(dim as u32));
        let mut off = vec![0usize; dim];
        for_each_index(dim, m, |j| {
            let mut acc = T::zero();
            for c in 0..corners {
                for (i, o) in off.iter_mut().enumerate() {
                    *o = (c >> (dim - 1 - i)) & 1;
                }
                acc += f.at_cube_corner(res, j, &off);
            }
            values.push(acc * w);
        });
        Self::new(dim, res, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_grid_shape() {
        let f = VertexField::<f64>::from_fn(2, 2, |x| x[0] + 10.0 * x[1]).unwrap();
        assert_eq!(f.values().len(), 25);
        assert_eq!(f.get(&[4, 0]).unwrap(), 1.0);
        assert_eq!(f.get(&[0, 4]).unwrap(), 10.0);
        assert!(f.get(&[5, 0]).is_err());
        assert_eq!(f.grid_index_of(&[0.25, 0.5]).unwrap(), vec![1, 2]);
        assert!(matches!(
            f.grid_index_of(&[0.3, 0.5]),
            Err(Error::OffGrid(_))
        ));
    }

    #[test]
    fn malformed_rejected() {
        assert!(VertexField::<f64>::new(1, 2, vec![0.0; 4]).is_err());
        assert!(VertexField::<f64>::new(1, 1, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(CellField::<f64>::new(2, 1, vec![0.0; 4]).is_ok());
        assert!(CellField::<f64>::new(2, 1, vec![0.0; 5]).is_err());
    }

    #[test]
    fn coarsen_keeps_shared_vertices() {
        let f = VertexField::<f64>::from_fn(2, 3, |x| x[0] * x[1]).unwrap();
        let c = f.coarsen(1).unwrap();
        assert_eq!(c.get(&[1, 2]).unwrap(), 0.5);
    }

    #[test]
    fn trapezoid_exact_for_bilinear() {
        let f = VertexField::<f64>::from_fn(2, 3, |x| 1.0 + x[0] * x[1]).unwrap();
        let c = CellField::from_vertex_trapezoid(&f).unwrap();
        let m = CellField::<f64>::from_fn_midpoint(2, 3, |x| 1.0 + x[0] * x[1]).unwrap();
        for (a, b) in c.values().iter().zip(m.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
