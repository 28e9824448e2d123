use std::collections::HashSet;

use serde::Serialize;

use super::figure::DyadicFigure;
use crate::error::{Error, Result};
use crate::scalar::{pow2, Scalar};

/// Volume, perimeter and shape coefficients of a dyadic figure.
///
/// Volume and perimeter are exact: they are integer counts of cells and
/// faces at generation `grid_gen`, scaled by `2^{-grid_gen·d}` and
/// `2^{-grid_gen·(d-1)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureGeometry<T> {
    pub grid_gen: u32,
    pub cell_count: u64,
    pub face_count: u64,
    pub volume: T,
    pub perimeter: T,
    pub diameter: T,
    /// `|B| / (‖B‖ diam B)`
    pub reg: T,
    /// `|B|^{(d-1)/d} / ‖B‖`
    pub isop: T,
}

pub fn figure_geometry<T: Scalar>(fig: &DyadicFigure) -> Result<FigureGeometry<T>> {
    if fig.is_empty() {
        return Err(Error::EmptyFigure);
    }
    let d = fig.dim();
    let g = fig.max_gen();
    let cells = fig.cells_at(g);
    let set: HashSet<usize> = cells.iter().copied().collect();
    let n = g as usize;
    let side = 1usize << n;
    let mut faces = 0u64;
    for &c in &cells {
        for i in 0..d {
            let shift = n * (d - 1 - i);
            let k = (c >> shift) & (side - 1);
            // below
            if k == 0 || !set.contains(&(c - (1 << shift))) {
                faces += 1;
            }
            // above
            if k + 1 == side || !set.contains(&(c + (1 << shift))) {
                faces += 1;
            }
        }
    }

    let volume = T::lit(cells.len() as f64) * pow2::<T>(-((n * d) as i32));
    let perimeter = T::lit(faces as f64) * pow2::<T>(-((n * (d - 1)) as i32));

    let boxes: Vec<(Vec<T>, Vec<T>)> = fig
        .cubes()
        .iter()
        .map(|c| {
            let lo = c.lower_corner::<T>();
            let h: T = c.side();
            let hi = lo.iter().map(|&v| v + h).collect();
            (lo, hi)
        })
        .collect();
    let mut diam2 = T::zero();
    for (i, (alo, ahi)) in boxes.iter().enumerate() {
        for (blo, bhi) in &boxes[i..] {
            let mut s = T::zero();
            for a in 0..d {
                let e = (ahi[a] - blo[a]).abs().max((bhi[a] - alo[a]).abs());
                s += e * e;
            }
            diam2 = diam2.max(s);
        }
    }
    let diameter = diam2.sqrt();
    let reg = volume / (perimeter * diameter);
    let isop = volume.powf(T::lit((d as f64 - 1.0) / d as f64)) / perimeter;
    Ok(FigureGeometry {
        grid_gen: g,
        cell_count: cells.len() as u64,
        face_count: faces,
        volume,
        perimeter,
        diameter,
        reg,
        isop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::cube::CubeIndex;

    fn cube(gen: u32, pos: &[u64]) -> CubeIndex {
        CubeIndex::new(gen, pos.to_vec()).unwrap()
    }

    #[test]
    fn unit_square() {
        let g = figure_geometry::<f64>(&DyadicFigure::unit(2)).unwrap();
        assert_eq!(g.volume, 1.0);
        assert_eq!(g.perimeter, 4.0);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.reg - 1.0 / (4.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((g.reg - 0.17678).abs() < 1e-5);
        assert_eq!(g.isop, 0.25);
    }

    #[test]
    fn shared_face_excluded() {
        let f = DyadicFigure::new(2, vec![cube(1, &[0, 0]), cube(1, &[1, 0])]).unwrap();
        let g = figure_geometry::<f64>(&f).unwrap();
        assert_eq!(g.perimeter, 3.0 * 2.0 * 0.5);
        assert_eq!(g.face_count, 6);
        assert_eq!(g.volume, 0.5);
    }

    #[test]
    fn single_cube_isoperimetric_coefficient() {
        for d in 1..=3usize {
            for n in 0..=3u32 {
                let c = CubeIndex::new(n, vec![0; d]).unwrap();
                let f = DyadicFigure::new(d, vec![c]).unwrap();
                let g = figure_geometry::<f64>(&f).unwrap();
                assert!((g.isop - 1.0 / (2.0 * d as f64)).abs() < 1e-14, "d={d} n={n}");
            }
        }
    }

    #[test]
    fn empty_figure_rejected() {
        let f = DyadicFigure::new(2, Vec::<CubeIndex>::new()).unwrap();
        assert!(matches!(figure_geometry::<f64>(&f), Err(Error::EmptyFigure)));
    }

    #[test]
    fn diameter_of_distant_pair() {
        let f = DyadicFigure::new(2, vec![cube(2, &[0, 0]), cube(2, &[3, 3])]).unwrap();
        let g = figure_geometry::<f64>(&f).unwrap();
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.perimeter, 2.0);
    }

    #[test]
    fn f32_geometry() {
        let g = figure_geometry::<f32>(&DyadicFigure::unit(3)).unwrap();
        assert_eq!(g.perimeter, 6.0);
        assert!((g.isop - 1.0 / 6.0).abs() < 1e-6);
    }
}
