use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::cube::CubeIndex;
use crate::error::{Error, Result};

/// Finite union of interior-disjoint dyadic cubes.
///
/// Stored in normal form: every complete set of `2^d` siblings is merged into
/// its parent, repeatedly, and the remaining cubes are sorted by lower corner.
/// Two figures covering the same point set therefore compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FigureRepr", into = "FigureRepr")]
pub struct DyadicFigure {
    dim: usize,
    cubes: Vec<CubeIndex>,
}

#[derive(Serialize, Deserialize)]
struct FigureRepr {
    dim: usize,
    cubes: Vec<CubeIndex>,
}

impl TryFrom<FigureRepr> for DyadicFigure {
    type Error = Error;
    fn try_from(r: FigureRepr) -> Result<Self> {
        DyadicFigure::new(r.dim, r.cubes)
    }
}

impl From<DyadicFigure> for FigureRepr {
    fn from(f: DyadicFigure) -> Self {
        FigureRepr {
            dim: f.dim,
            cubes: f.cubes,
        }
    }
}

impl DyadicFigure {
    pub fn new(dim: usize, cubes: impl IntoIterator<Item = CubeIndex>) -> Result<Self> {
        let mut cubes: Vec<CubeIndex> = cubes.into_iter().collect();
        if let Some(c) = cubes.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        cubes.sort_by_key(|c| c.gen());
        let mut seen: HashSet<CubeIndex> = HashSet::with_capacity(cubes.len());
        for c in &cubes {
            let mut anc = Some(c.clone());
            while let Some(a) = anc {
                if seen.contains(&a) {
                    return Err(Error::OverlappingFigure(format!(
                        "{:?} overlaps {:?}",
                        c.pos(),
                        a.pos()
                    )));
                }
                anc = a.parent();
            }
            seen.insert(c.clone());
        }
        Ok(Self {
            dim,
            cubes: normalize(dim, cubes),
        })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            dim,
            cubes: vec![CubeIndex::root(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Member cubes in normal form, sorted by lower corner.
    pub fn cubes(&self) -> &[CubeIndex] {
        &self.cubes
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn max_gen(&self) -> u32 {
        self.cubes.iter().map(CubeIndex::gen).max().unwrap_or(0)
    }

    /// Sorted linear indices of all generation-`gen` cells covered by the figure.
    pub fn cells_at(&self, gen: u32) -> Vec<usize> {
        assert!(gen >= self.max_gen());
        let mut cells: Vec<usize> = self
            .cubes
            .iter()
            .flat_map(|c| c.descendants_linear(gen))
            .collect();
        cells.sort_unstable();
        cells
    }

    /// Union of two interior-disjoint figures.
    pub fn union(&self, other: &DyadicFigure) -> Result<DyadicFigure> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        DyadicFigure::new(
            self.dim,
            self.cubes.iter().chain(other.cubes.iter()).cloned(),
        )
    }
}

fn normalize(dim: usize, cubes: Vec<CubeIndex>) -> Vec<CubeIndex> {
    let top = cubes.iter().map(CubeIndex::gen).max().unwrap_or(0);
    let mut by_gen: Vec<BTreeSet<Vec<u64>>> = vec![BTreeSet::new(); top as usize + 1];
    for c in cubes {
        by_gen[c.gen() as usize].insert(c.pos().to_vec());
    }
    let fanout = 1usize << dim;
    for g in (1..=top as usize).rev() {
        let mut parents: BTreeSet<Vec<u64>> = BTreeSet::new();
        for p in &by_gen[g] {
            parents.insert(p.iter().map(|k| k >> 1).collect());
        }
        for parent in parents {
            let kids: Vec<Vec<u64>> = (0..fanout)
                .map(|c| {
                    parent
                        .iter()
                        .enumerate()
                        .map(|(i, &k)| 2 * k + ((c >> (dim - 1 - i)) & 1) as u64)
                        .collect()
                })
                .collect();
            if kids.iter().all(|k| by_gen[g].contains(k)) {
                for k in &kids {
                    by_gen[g].remove(k);
                }
                by_gen[g - 1].insert(parent);
            }
        }
    }
    let mut out: Vec<CubeIndex> = by_gen
        .into_iter()
        .enumerate()
        .flat_map(|(g, set)| {
            set.into_iter()
                .map(move |pos| CubeIndex::new(g as u32, pos).expect("normalised cube is valid"))
        })
        .collect();
    out.sort_by(|a, b| a.corner_cmp(b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(gen: u32, pos: &[u64]) -> CubeIndex {
        CubeIndex::new(gen, pos.to_vec()).unwrap()
    }

    #[test]
    fn same_point_set_compares_equal() {
        let whole = DyadicFigure::unit(2);
        let quarters =
            DyadicFigure::new(2, (0..4).map(|l| CubeIndex::from_linear(2, 1, l))).unwrap();
        assert_eq!(whole, quarters);

        let a = DyadicFigure::new(2, vec![cube(1, &[0, 0])]).unwrap();
        let b = DyadicFigure::new(2, [[0, 0], [0, 1], [1, 0], [1, 1]].map(|p| cube(2, &p))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_rejected() {
        let r = DyadicFigure::new(2, vec![cube(1, &[0, 0]), cube(2, &[1, 1])]);
        assert!(matches!(r, Err(Error::OverlappingFigure(_))));
        let r = DyadicFigure::new(1, vec![cube(1, &[1]), cube(1, &[1])]);
        assert!(r.is_err());
    }

    #[test]
    fn dimension_checked() {
        let r = DyadicFigure::new(2, vec![cube(1, &[0])]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sorted_by_corner() {
        let f = DyadicFigure::new(2, vec![cube(1, &[1, 1]), cube(2, &[0, 3]), cube(1, &[1, 0])])
            .unwrap();
        let order: Vec<(u32, Vec<u64>)> =
            f.cubes().iter().map(|c| (c.gen(), c.pos().to_vec())).collect();
        assert_eq!(
            order,
            vec![(2, vec![0, 3]), (1, vec![1, 0]), (1, vec![1, 1])]
        );
        assert_eq!(f.cells_at(2).len(), 9);
    }

    #[test]
    fn json_roundtrip_validates() {
        let f = DyadicFigure::new(2, vec![cube(1, &[0, 0]), cube(1, &[1, 0])]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: DyadicFigure = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
        let bad = r#"{"dim":1,"cubes":[{"gen":1,"pos":[0]},{"gen":0,"pos":[0]}]}"#;
        assert!(serde_json::from_str::<DyadicFigure>(bad).is_err());
    }
}
