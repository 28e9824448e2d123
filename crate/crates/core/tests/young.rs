use charges_core::charge::{flux_charge, CubeCharge};
use charges_core::dyadic::VertexField;
use charges_core::young::{sew, young_integral, RawGerm, TagRule};
use proptest::prelude::*;

const DEPTH: u32 = 5;

fn levels(dim: usize, depth: u32) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (0..=depth)
        .map(|n| prop::collection::vec(-1.0..1.0f64, 1usize << (dim as u32 * n)))
        .collect::<Vec<_>>()
}

fn charge(dim: usize) -> impl Strategy<Value = CubeCharge<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1usize << (dim as u32 * DEPTH))
        .prop_map(move |l| CubeCharge::from_leaves(dim, DEPTH, l).unwrap())
}

fn field(dim: usize) -> impl Strategy<Value = VertexField<f64>> {
    prop::collection::vec(-1.0..1.0f64, ((1usize << DEPTH) + 1).pow(dim as u32))
        .prop_map(move |v| VertexField::new(dim, DEPTH, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sewn_charge_is_additive(l in levels(2, 4)) {
        let g = RawGerm::new(2, l).unwrap();
        let r = sew(&g, 1e6, 1.0).unwrap();
        let (_, _, res) = r.result.table().worst_additivity_residual().unwrap();
        prop_assert!(res <= 1e-13);
    }

    #[test]
    fn sew_is_linear(a in levels(1, 6), b in levels(1, 6), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let combo: Vec<Vec<f64>> = a.iter().zip(&b)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| s * u + t * v).collect())
            .collect();
        let sew_of = |l: Vec<Vec<f64>>| sew(&RawGerm::new(1, l).unwrap(), 1e6, 1.0).unwrap().result;
        let lhs = sew_of(combo);
        let rhs = sew_of(a).combine(s, &sew_of(b), t).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn young_integral_is_bilinear(
        (f, g, w, v) in (1usize..=2).prop_flat_map(|d| (field(d), field(d), charge(d), charge(d))),
        s in -2.0..2.0f64,
        t in -2.0..2.0f64,
    ) {
        let y = |f: &VertexField<f64>, w: &CubeCharge<f64>| {
            young_integral(f, w, 0.6, 0.6, TagRule::LowerCorner).unwrap().sew.result
        };
        let in_f = y(&f.combine(s, &g, t).unwrap(), &w);
        let want = y(&f, &w).combine(s, &y(&g, &w), t).unwrap();
        prop_assert!(in_f.max_abs_diff(&want).unwrap() <= 1e-9);
        let in_w = y(&f, &w.combine(s, &v, t).unwrap());
        let want = y(&f, &w).combine(s, &y(&f, &v), t).unwrap();
        prop_assert!(in_w.max_abs_diff(&want).unwrap() <= 1e-9);
    }

    #[test]
    fn constant_one_is_identity(w in charge(2)) {
        let one = VertexField::constant(2, DEPTH, 1.0).unwrap();
        let r = young_integral(&one, &w, 0.5, 0.7, TagRule::LowerCorner).unwrap();
        prop_assert_eq!(r.result(), &w);
    }
}

/// Moving averages of `|x − 1/3|^{0.6}(1 + y)` over windows `2^{-j}` converge
/// uniformly with bounded Hölder seminorm; the integrals should follow.
#[test]
fn mollified_integrands_converge() {
    let depth = 7;
    let p = 0.6;
    let g = |x: f64| (x - 1.0 / 3.0).abs().powf(p);
    // antiderivative of g
    let big_g = |x: f64| {
        let u = x - 1.0 / 3.0;
        u.signum() * u.abs().powf(p + 1.0) / (p + 1.0)
    };
    let w = flux_charge::<f64, _>(2, depth, 4, |x, o| {
        o[0] = (x[0] * x[1]).sqrt();
        o[1] = (5.0 * x[0]).sin();
    })
    .unwrap();
    let integral = |f: &dyn Fn(f64) -> f64| {
        let fv = VertexField::from_fn(2, depth, |x| f(x[0]) * (1.0 + x[1])).unwrap();
        young_integral(&fv, &w, 0.6, 0.5, TagRule::LowerCorner).unwrap().sew.result
    };
    let target = integral(&g);
    let mut gaps = Vec::new();
    // windows narrower than the grid step only see sampling noise at the cusp
    for j in 1..depth {
        let h = (-(j as f64)).exp2();
        let gj = move |x: f64| (big_g(x + h) - big_g(x - h)) / (2.0 * h);
        gaps.push(integral(&gj).max_abs_diff(&target).unwrap());
    }
    for pair in gaps.windows(2) {
        assert!(pair[1] <= pair[0] * 1.05, "{gaps:?}");
    }
    assert!(gaps[gaps.len() - 1] < gaps[0] / 10.0, "{gaps:?}");
}
