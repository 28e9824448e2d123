use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use super::{check_table_shape, level_len, CubeCharge};
use crate::error::{Error, Result};
use crate::scalar::{pow2, Scalar};

/// Gauss–Legendre points per face axis used when no order is given.
pub const DEFAULT_FLUX_ORDER: usize = 4;

/// Outward flux of a vector field through the boundary of every dyadic cube.
///
/// The flux through each generation-`depth` face is integrated once by a
/// tensor Gauss–Legendre rule of `order` points per face axis; a cube's value
/// is the signed sum over its `2d` faces. Coarser cubes sum their children,
/// so shared interior faces cancel exactly.
///
/// `v(x, out)` writes the `d` components of the field at `x` into `out`.
pub fn flux_charge<T, F>(dim: usize, depth: u32, order: usize, v: F) -> Result<CubeCharge<T>>
where
    T: Scalar,
    F: Fn(&[T], &mut [T]) + Sync,
{
    check_table_shape(dim, depth)?;
    let rule = GaussLegendre::new(order.max(1))
        .map_err(|e| Error::InvalidParameter(format!("quadrature order {order}: {e}")))?;
    let rule: Vec<(T, T)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (T::lit(x), T::lit(w)))
        .collect();

    let n = depth as usize;
    let m = 1usize << n;
    let h: T = pow2(-(depth as i32));
    let half_h = h * T::lit(0.5);
    let faces_per_plane = level_len(dim - 1, depth);
    let nodes_per_face = rule.len().pow(dim as u32 - 1);

    // fluxes[a][j * faces_per_plane + r]: flux along +e_a through the face
    // x_a = j h, with the other coordinates given by row-major index r.
    let fluxes: Vec<Vec<T>> = (0..dim)
        .map(|a| {
            (0..(m + 1) * faces_per_plane)
                .into_par_iter()
                .map_init(
                    || (vec![T::zero(); dim], vec![T::zero(); dim]),
                    |(x, out), idx| {
                        let j = idx / faces_per_plane;
                        let r = idx % faces_per_plane;
                        let mut acc = T::zero();
                        for q in 0..nodes_per_face {
                            let mut w = T::one();
                            let mut qq = q;
                            let mut rr = r;
                            for i in (0..dim).rev() {
                                if i == a {
                                    x[i] = T::lit(j as f64) * h;
                                    continue;
                                }
                                let (node, weight) = rule[qq % rule.len()];
                                qq /= rule.len();
                                let cell = rr % m;
                                rr /= m;
                                x[i] = T::lit(cell as f64) * h + half_h * (node + T::one());
                                w *= weight * half_h;
                            }
                            v(x, out);
                            if !out[a].is_finite() {
                                return Err(Error::NonFiniteSample(
                                    x.iter().map(|c| c.as_f64()).collect(),
                                ));
                            }
                            acc += w * out[a];
                        }
                        Ok(acc)
                    },
                )
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;

    let leaves: Vec<T> = (0..level_len(dim, depth))
        .into_par_iter()
        .map(|k| {
            let mut acc = T::zero();
            for (a, fa) in fluxes.iter().enumerate() {
                let mut r = 0usize;
                let mut ka = 0usize;
                for i in 0..dim {
                    let ki = (k >> (n * (dim - 1 - i))) & (m - 1);
                    if i == a {
                        ka = ki;
                    } else {
                        r = r * m + ki;
                    }
                }
                acc += fa[(ka + 1) * faces_per_plane + r] - fa[ka * faces_per_plane + r];
            }
            acc
        })
        .collect();
    CubeCharge::from_leaves(dim, depth, leaves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{CubeIndex, DyadicFigure};

    #[test]
    fn constant_field_has_no_flux() {
        let c = flux_charge::<f64, _>(2, 4, 4, |_, o| {
            o[0] = 1.5;
            o[1] = -0.25;
        })
        .unwrap();
        assert!(c.max_abs() < 1e-15);
    }

    #[test]
    fn radial_field_on_unit_square() {
        let c = flux_charge::<f64, _>(2, 5, 4, |x, o| o.copy_from_slice(x)).unwrap();
        assert!((c.total() - 2.0).abs() < 1e-13);
        // every cube: div v · |K|
        for n in 0..=5 {
            let vol = 4f64.powi(-(n as i32));
            assert!(c.level(n).iter().all(|&w| (w - 2.0 * vol).abs() < 1e-13));
        }
    }

    #[test]
    fn quadratic_field_and_l_shape() {
        let c = flux_charge::<f64, _>(2, 6, 4, |x, o| {
            o[0] = x[0] * x[0] / 2.0;
            o[1] = 0.0;
        })
        .unwrap();
        assert!((c.total() - 0.5).abs() < 1e-14);

        let r = flux_charge::<f64, _>(2, 3, 4, |x, o| o.copy_from_slice(x)).unwrap();
        let l = DyadicFigure::new(
            2,
            [[0, 0], [1, 0], [0, 1]].map(|p| CubeIndex::new(1, p.to_vec()).unwrap()),
        )
        .unwrap();
        assert!((r.eval_figure(&l).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn one_and_three_dimensions() {
        let c = flux_charge::<f64, _>(1, 6, 2, |x, o| o[0] = x[0].powi(3)).unwrap();
        assert!((c.total() - 1.0).abs() < 1e-15);
        let k = CubeIndex::new(2, vec![1]).unwrap();
        assert!((c.get(&k).unwrap() - (0.5f64.powi(3) - 0.25f64.powi(3))).abs() < 1e-15);

        let c3 = flux_charge::<f64, _>(3, 3, 3, |x, o| {
            o[0] = x[1] * x[2];
            o[1] = x[0] * x[1];
            o[2] = x[2] * x[2];
        })
        .unwrap();
        // ∫ (x + 2z) over the unit cube
        assert!((c3.total() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn non_finite_field_rejected() {
        let r = flux_charge::<f64, _>(2, 2, 2, |x, o| {
            o[0] = 1.0 / x[0];
            o[1] = 0.0;
        });
        assert!(matches!(r, Err(Error::NonFiniteSample(_))));
    }
}
