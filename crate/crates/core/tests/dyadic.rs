use std::collections::HashSet;

use charges_core::dyadic::{
    figure_geometry, haar_eval, rect_increment, vitali_variation_dyadic, CubeIndex, DyadicFigure,
    HaarIndex, VertexField,
};
use proptest::prelude::*;

/// Values of `h` at the centres of the generation-`level` cells, row-major.
fn haar_samples(idx: &HaarIndex, dim: usize, level: u32) -> Vec<f64> {
    let m = 1usize << level;
    let h = 1.0 / m as f64;
    (0..m.pow(dim as u32))
        .map(|lin| {
            let mut x = vec![0.0; dim];
            let mut rest = lin;
            for xi in x.iter_mut().rev() {
                *xi = ((rest % m) as f64 + 0.5) * h;
                rest /= m;
            }
            haar_eval(idx, &x).unwrap()
        })
        .collect()
}

#[test]
fn haar_system_is_orthonormal() {
    for dim in 1..=2 {
        let max_gen = 3;
        let level = max_gen + 1;
        let vol = (-(level as f64) * dim as f64).exp2();
        let idx = HaarIndex::enumerate(dim, max_gen);
        let samples: Vec<Vec<f64>> = idx.iter().map(|i| haar_samples(i, dim, level)).collect();
        for (i, a) in samples.iter().enumerate() {
            for (j, b) in samples.iter().enumerate().skip(i) {
                let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * vol;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "d={dim} {:?} {:?}: {ip}", idx[i], idx[j]);
            }
        }
    }
}

fn field_2d(res: u32) -> impl Strategy<Value = VertexField<f64>> {
    let n = ((1usize << res) + 1).pow(2);
    prop::collection::vec(-10.0..10.0f64, n)
        .prop_map(move |v| VertexField::new(2, res, v).unwrap())
}

proptest! {
    #[test]
    fn increment_splits_additively(
        f in field_2d(4),
        lo in prop::array::uniform2(0usize..8),
        ext in prop::array::uniform2(2usize..9),
        axis in 0usize..2,
        cut in 1usize..8,
    ) {
        let hi = [(lo[0] + ext[0]).min(16), (lo[1] + ext[1]).min(16)];
        let c = lo[axis] + cut % (hi[axis] - lo[axis]).max(1);
        prop_assume!(c > lo[axis] && c < hi[axis]);
        let whole = rect_increment(&f, &lo, &hi).unwrap();
        let mut mid_hi = hi;
        mid_hi[axis] = c;
        let mut mid_lo = lo;
        mid_lo[axis] = c;
        let parts = rect_increment(&f, &lo, &mid_hi).unwrap() + rect_increment(&f, &mid_lo, &hi).unwrap();
        let scale: f64 = f.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!((whole - parts).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn dyadic_vitali_is_nondecreasing(f in field_2d(5)) {
        let mut prev = 0.0;
        for n in 0..=5 {
            let v = vitali_variation_dyadic(&f, n).unwrap();
            prop_assert!(v >= prev * (1.0 - 1e-14), "gen {}: {} < {}", n, v, prev);
            prev = v;
        }
    }

    #[test]
    fn perimeter_of_union(
        a in prop::collection::hash_set(0usize..16, 1..8),
        b in prop::collection::hash_set(0usize..16, 1..8),
    ) {
        let b: HashSet<usize> = b.difference(&a).copied().collect();
        prop_assume!(!b.is_empty());
        let fig = |s: &HashSet<usize>| {
            DyadicFigure::new(2, s.iter().map(|&k| CubeIndex::from_linear(2, 2, k))).unwrap()
        };
        let (fa, fb) = (fig(&a), fig(&b));
        let shared = a
            .iter()
            .flat_map(|&k| b.iter().map(move |&j| (k, j)))
            .filter(|&(k, j)| {
                let (r1, c1, r2, c2) = (k / 4, k % 4, j / 4, j % 4);
                r1.abs_diff(r2) + c1.abs_diff(c2) == 1
            })
            .count() as f64
            * 0.25;
        let p = |f: &DyadicFigure| figure_geometry::<f64>(f).unwrap().perimeter;
        let union = p(&fa.union(&fb).unwrap());
        prop_assert!((union - (p(&fa) + p(&fb) - 2.0 * shared)).abs() < 1e-12);
    }
}
