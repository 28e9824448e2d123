use charges_core::charge::flux_charge;
use charges_core::dyadic::{CubeIndex, DyadicFigure};
use charges_core::gauge::{
    cousin_partition_1d, dyadic_henstock_on, hk_integrate_1d, uniform_riemann_sum,
    DEFAULT_CUBE_BUDGET, DEFAULT_INTERVAL_BUDGET, DEFAULT_MAX_BISECTIONS,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cousin_partitions_are_fine(c in 0.01..0.5f64, p in 0.0..1.0f64, s in 0.0..1.0f64) {
        let gauge = move |x: f64| c * (x - s).abs().max(1e-6) + 1e-4 * (1.0 + p);
        let part = cousin_partition_1d(gauge, DEFAULT_MAX_BISECTIONS).unwrap();
        prop_assert!(part.is_fine(gauge));
        let b = part.breakpoints();
        prop_assert_eq!(b[0], 0.0);
        prop_assert_eq!(*b.last().unwrap(), 1.0);
        for (w, t) in b.windows(2).zip(part.tags()) {
            prop_assert!(w[0] <= *t && *t <= w[1] && w[1] - w[0] < gauge(*t));
        }
    }

    #[test]
    fn hk_matches_closed_form(
        terms in prop::collection::vec((-2.0..2.0f64, 1.0..20.0f64, 0.0..6.3f64), 1..5),
        tol in prop::sample::select(vec![1e-4, 1e-6, 1e-8]),
    ) {
        let f = |x: f64| terms.iter().map(|&(a, k, p)| a * (k * x + p).cos()).sum::<f64>();
        let exact: f64 = terms.iter().map(|&(a, k, p)| a * ((k + p).sin() - p.sin()) / k).sum();
        let r = hk_integrate_1d(f, tol, DEFAULT_INTERVAL_BUDGET).unwrap();
        prop_assert!((r.value - exact).abs() <= 10.0 * tol, "{} vs {}", r.value, exact);
    }

    #[test]
    fn henstock_is_additive_over_cubes(cells in prop::collection::hash_set(0usize..16, 1..10)) {
        let f = |x: &[f64]| (2.0 * x[0] - x[1]).exp() + x[0] * x[1];
        let tol = 1e-6;
        let cubes: Vec<CubeIndex> = cells.iter().map(|&k| CubeIndex::from_linear(2, 2, k)).collect();
        let fig = DyadicFigure::new(2, cubes.clone()).unwrap();
        let whole = dyadic_henstock_on(f, &fig, tol, DEFAULT_CUBE_BUDGET).unwrap().value;
        let parts: f64 = cubes
            .iter()
            .map(|c| {
                let one = DyadicFigure::new(2, [c.clone()]).unwrap();
                dyadic_henstock_on(f, &one, tol, DEFAULT_CUBE_BUDGET).unwrap().value
            })
            .sum();
        prop_assert!((whole - parts).abs() <= 2.0 * tol * cubes.len() as f64);
    }
}

#[test]
fn henstock_handles_lebesgue_integrands() {
    let cases: [(fn(f64) -> f64, f64); 3] = [
        (|x| x.powi(5), 1.0 / 6.0),
        (|x| (-x).exp(), 1.0 - (-1f64).exp()),
        (|x| if x > 0.0 { x.ln() } else { 0.0 }, -1.0),
    ];
    for (f, exact) in cases {
        let r = hk_integrate_1d(f, 1e-6, DEFAULT_INTERVAL_BUDGET).unwrap();
        assert!((r.value - exact).abs() <= 1e-5, "{} vs {exact}", r.value);
    }
}

/// Centre sums of the divergence at level `n` approach the exact boundary
/// flux at second order.
#[test]
fn divergence_gap_decays_at_second_order() {
    let v = |x: &[f64], o: &mut [f64]| {
        o[0] = x[0] * x[0] * x[1] + x[0].powi(3);
        o[1] = x[1].powi(3) - x[0] * x[1];
    };
    let div = |x: &[f64]| 2.0 * x[0] * x[1] + 3.0 * x[0] * x[0] + 3.0 * x[1] * x[1] - x[0];
    let l = DyadicFigure::new(
        2,
        [[0, 0], [1, 0], [0, 1]].map(|p| CubeIndex::new(1, p.to_vec()).unwrap()),
    )
    .unwrap();
    for fig in [DyadicFigure::unit(2), l] {
        let flux = flux_charge::<f64, _>(2, fig.max_gen(), 4, v).unwrap().eval_figure(&fig).unwrap();
        let gaps: Vec<f64> = (2..=8)
            .map(|n| (uniform_riemann_sum(div, &fig, n).unwrap() - flux).abs())
            .collect();
        let n = gaps.len() as f64;
        let xs: Vec<f64> = (0..gaps.len()).map(|i| i as f64).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g.log2()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope <= -1.9, "slope {slope}, gaps {gaps:?}");
    }
}
