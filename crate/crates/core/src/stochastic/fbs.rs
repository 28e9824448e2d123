use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::NormalStream;
use crate::charge::FaberCoeffs;
use crate::dyadic::VertexField;
use crate::error::{check_unit_exponent, Error, Result};
use crate::holder::synthesize_1d;

/// Largest resolution accepted by [`levy_ciesielski`].
pub const MAX_BM_DEPTH: u32 = 20;
/// Largest number of grid vertices in one sampled sheet.
pub const MAX_SHEET_POINTS: usize = 1 << 22;
/// Ridge added to a covariance matrix whose factorisation fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Hurst exponents `(H_1, …, H_d)`, each in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HurstVector(Vec<f64>);

impl HurstVector {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidParameter("empty Hurst vector".into()));
        }
        for &x in &h {
            check_unit_exponent("H", x)?;
        }
        Ok(Self(h))
    }

    /// `H_i = h` for every axis.
    pub fn uniform(dim: usize, h: f64) -> Result<Self> {
        Self::new(vec![h; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    /// `H̄ = (H_1 + … + H_d)/d`
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl TryFrom<Vec<f64>> for HurstVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HurstVector> for Vec<f64> {
    fn from(h: HurstVector) -> Self {
        h.0
    }
}

/// Covariance of fractional Brownian motion, `(s^{2H} + t^{2H} − |t − s|^{2H})/2`.
pub fn fbm_cov_1d(h: f64, s: f64, t: f64) -> f64 {
    let p = 2.0 * h;
    0.5 * (s.powf(p) + t.powf(p) - (t - s).abs().powf(p))
}

/// Brownian path on the resolution-`depth` grid from the Lévy–Ciesielski
/// series `X_{-1} x + Σ_{n<depth} Σ_k X_{n,k} f_{n,k}(x)`.
///
/// `X_{-1}` is normal number `0` and `X_{n,k}` normal number `2^n + k` of
/// stream `stream`.
pub fn levy_ciesielski_stream(depth: u32, seed: u64, stream: u64) -> Result<VertexField<f64>> {
    if depth > MAX_BM_DEPTH {
        return Err(Error::InvalidDepth(depth));
    }
    let mut rng = NormalStream::new(seed, stream);
    let ex = rng.next_normal();
    let levels = (0..depth)
        .map(|n| {
            let mut v = vec![0.0; 1usize << n];
            rng.fill(&mut v);
            v
        })
        .collect();
    let coeffs = FaberCoeffs::new(1, ex, levels)?;
    synthesize_1d(&coeffs, depth)
}

/// [`levy_ciesielski_stream`] on stream `0`.
pub fn levy_ciesielski(depth: u32, seed: u64) -> Result<VertexField<f64>> {
    levy_ciesielski_stream(depth, seed, 0)
}

/// Exact sampler of the fractional Brownian sheet on a dyadic vertex grid.
///
/// The covariance `Π_i R_{H_i}(s_i, t_i)` is a Kronecker product, so a sample
/// is `(L_1 ⊗ … ⊗ L_d) Z` with `L_i` the Cholesky factor of the 1D fBm
/// covariance on `{2^-N, …, 1}` and `Z` i.i.d. normal. Vertices with some
/// coordinate `0` are exactly zero.
#[derive(Clone, Debug)]
pub struct FbsSampler {
    hurst: HurstVector,
    resolution: u32,
    factors: Vec<DMatrix<f64>>,
}

fn fbm_factor(h: f64, m: usize) -> Result<DMatrix<f64>> {
    let cov = DMatrix::from_fn(m, m, |a, b| {
        fbm_cov_1d(h, (a + 1) as f64 / m as f64, (b + 1) as f64 / m as f64)
    });
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Ok(c.l());
    }
    let ridged = cov + DMatrix::identity(m, m) * CHOLESKY_JITTER;
    Cholesky::new(ridged)
        .map(|c| c.l())
        .ok_or(Error::FactorizationFailure { hurst: h })
}

impl FbsSampler {
    pub fn new(hurst: HurstVector, resolution: u32) -> Result<Self> {
        let d = hurst.dim();
        let p = (1usize << resolution.min(30)) + 1;
        if resolution > 30
            || (p as u128).pow(d as u32) > MAX_SHEET_POINTS as u128
        {
            return Err(Error::InvalidParameter(format!(
                "grid (2^{resolution}+1)^{d} exceeds {MAX_SHEET_POINTS} points"
            )));
        }
        let m = 1usize << resolution;
        let mut factors: Vec<DMatrix<f64>> = Vec::with_capacity(d);
        for (i, &h) in hurst.components().iter().enumerate() {
            let reuse = hurst.components()[..i].iter().position(|&g| g == h);
            factors.push(match reuse {
                Some(j) => factors[j].clone(),
                None => fbm_factor(h, m)?,
            });
        }
        Ok(Self {
            hurst,
            resolution,
            factors,
        })
    }

    pub fn hurst(&self) -> &HurstVector {
        &self.hurst
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Ensemble member `member`, drawn from stream `member` of `seed`.
    pub fn sample(&self, seed: u64, member: u64) -> VertexField<f64> {
        let d = self.hurst.dim();
        let m = 1usize << self.resolution;
        let total = m.pow(d as u32);
        let mut z = vec![0.0; total];
        NormalStream::new(seed, member).fill(&mut z);
        let mut tmp = vec![0.0; m];
        // mode-i product: every fibre along axis i is multiplied by L_i
        for (axis, l) in self.factors.iter().enumerate() {
            let stride = m.pow((d - 1 - axis) as u32);
            let outer = total / (stride * m);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * stride * m + s;
                    for (a, t) in tmp.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for b in 0..=a {
                            acc += l[(a, b)] * z[base + b * stride];
                        }
                        *t = acc;
                    }
                    for (a, &t) in tmp.iter().enumerate() {
                        z[base + a * stride] = t;
                    }
                }
            }
        }
        let p = m + 1;
        let mut values = vec![0.0; p.pow(d as u32)];
        let mut idx = vec![0usize; d];
        for (flat, &v) in z.iter().enumerate() {
            let mut r = flat;
            for i in (0..d).rev() {
                idx[i] = r % m + 1;
                r /= m;
            }
            let target = idx.iter().fold(0usize, |acc, &j| acc * p + j);
            values[target] = v;
        }
        VertexField::new(d, self.resolution, values).expect("sheet grid shape")
    }
}

/// `ensemble` independent sheets, member `j` drawn from stream `j`.
///
/// Members are computed in parallel; each depends only on `(seed, j)`.
pub fn sample_fbs(
    hurst: &HurstVector,
    resolution: u32,
    seed: u64,
    ensemble: usize,
) -> Result<Vec<VertexField<f64>>> {
    let sampler = FbsSampler::new(hurst.clone(), resolution)?;
    Ok((0..ensemble as u64)
        .into_par_iter()
        .map(|j| sampler.sample(seed, j))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_closed_form() {
        assert_eq!(fbm_cov_1d(0.5, 0.25, 0.75), 0.25);
        assert_eq!(fbm_cov_1d(0.3, 0.0, 0.6), 0.0);
        assert_eq!(fbm_cov_1d(0.8, 1.0, 1.0), 1.0);
    }

    #[test]
    fn brownian_path_starts_at_zero() {
        for seed in 0..5 {
            let b = levy_ciesielski(8, seed).unwrap();
            assert_eq!(b.values()[0], 0.0);
            let x = super::super::rng::counter_normal(seed, 0, 0);
            assert!((b.values()[256] - x).abs() < 1e-15);
        }
        assert!(levy_ciesielski(21, 0).is_err());
    }

    #[test]
    fn sheet_vanishes_on_axes() {
        let h = HurstVector::new(vec![0.7, 0.4]).unwrap();
        let s = FbsSampler::new(h, 3).unwrap().sample(11, 2);
        for j in 0..9 {
            assert_eq!(s.get(&[0, j]).unwrap(), 0.0);
            assert_eq!(s.get(&[j, 0]).unwrap(), 0.0);
        }
        assert!(s.get(&[8, 8]).unwrap() != 0.0);
    }

    #[test]
    fn one_dimensional_sheet_matches_factor() {
        let h = HurstVector::uniform(1, 0.5).unwrap();
        let s = FbsSampler::new(h, 2).unwrap().sample(5, 0);
        let mut z = [0.0; 4];
        NormalStream::new(5, 0).fill(&mut z);
        // Brownian covariance min(s,t): the Cholesky factor has entries 1/2
        let cum: Vec<f64> = z.iter().scan(0.0, |a, &x| {
            *a += 0.5 * x;
            Some(*a)
        }).collect();
        for (j, c) in cum.iter().enumerate() {
            assert!((s.values()[j + 1] - c).abs() < 1e-14);
        }
    }

    #[test]
    fn validation() {
        assert!(HurstVector::new(vec![0.5, 1.0]).is_err());
        assert!(HurstVector::new(vec![]).is_err());
        assert_eq!(HurstVector::new(vec![0.8, 0.6]).unwrap().mean(), 0.7);
        assert!(FbsSampler::new(HurstVector::uniform(3, 0.5).unwrap(), 8).is_err());
    }

    #[test]
    fn near_one_hurst_factorizes() {
        let s = FbsSampler::new(HurstVector::uniform(1, 0.99).unwrap(), 6);
        assert!(s.is_ok());
    }
}
