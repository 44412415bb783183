use std::sync::Arc;

use blowup_core::analysis::fit_rate;
use blowup_core::mesh::{Exterior, Grid, GridFunction, DEFAULT_DELTA};
use blowup_core::operator::{Extension, OperatorMatrix};
use blowup_core::profiles::{build_v_tau, combine, sample_profile};
use blowup_core::quad::{integrate_range, integrate_tail, FnIntegrand, QuadOptions};
use blowup_core::specfun::{classify_with, CriticalExponents};
use blowup_core::{Alpha, Orders, RegimeKind, Tau};
use proptest::prelude::*;

fn small_grid(n: usize, g: f64) -> Arc<Grid> {
    Arc::new(Grid::build_graded(n, g, DEFAULT_DELTA).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn monomials_integrate_exactly(k in -0.9f64..3.0, b in 0.1f64..4.0) {
        let f = FnIntegrand::new(Orders::new(k, 0.0, k), move |t: f64| t.powf(k));
        let r = integrate_range(&f, 0.0, b, &QuadOptions::new(1e-11)).unwrap();
        let exact = b.powf(k + 1.0) / (k + 1.0);
        prop_assert!((r.value - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{} vs {}", r.value, exact);
    }

    #[test]
    fn ranges_are_additive(a in 0.0f64..1.0, w1 in 0.1f64..2.0, w2 in 0.1f64..2.0) {
        let f = FnIntegrand::new(Orders::new(0.0, 0.0, -2.0), |t: f64| 1.0 / (1.0 + t * t));
        let o = QuadOptions::new(1e-12);
        let (b, c) = (a + w1, a + w1 + w2);
        let whole = integrate_range(&f, a, c, &o).unwrap().value;
        let parts = integrate_range(&f, a, b, &o).unwrap().value + integrate_range(&f, b, c, &o).unwrap().value;
        prop_assert!((whole - parts).abs() < 1e-11);
        prop_assert!((whole - (c.atan() - a.atan())).abs() < 1e-11);
    }

    #[test]
    fn tail_formula(power in -4.0f64..-1.05, cut in 0.5f64..50.0) {
        let v = integrate_tail(power, cut).unwrap();
        prop_assert_eq!(v, cut.powf(power + 1.0) / (-power - 1.0));
    }

    #[test]
    fn grids_are_symmetric_and_sorted(n in 16usize..200, g in 1.0f64..6.0) {
        let grid = Grid::build_graded(n, g, DEFAULT_DELTA).unwrap();
        prop_assert_eq!(grid.len(), 2 * n);
        prop_assert!(grid.nodes().windows(2).all(|w| w[0] < w[1]));
        for i in 0..grid.len() {
            prop_assert_eq!(grid.x(i), -grid.x(grid.mirror(i)));
            prop_assert!(grid.x(i).abs() > 0.0 && grid.x(i).abs() < 1.0);
            prop_assert!(grid.local_spacing(i) > 0.0);
        }
        prop_assert!(grid.well_resolved(20.0).all(|i| grid.dist_c(i) >= 20.0 * grid.local_spacing(i)));
    }

    #[test]
    fn power_samples_fit_exactly(e in -0.95f64..0.0, c in 0.01f64..100.0, g in 1.0f64..4.0) {
        let grid = small_grid(400, g);
        let u = GridFunction::from_fn(grid, Exterior::Zero, |x| c * x.abs().powf(e)).unwrap();
        let fits = fit_rate(&u, (1e-2, 0.2)).unwrap();
        for f in [fits.left, fits.right, fits.pooled] {
            prop_assert!((f.exponent - e).abs() < 1e-10);
            prop_assert!((f.amplitude - c).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn profiles_are_positive_inside(tau in -0.99f64..0.0, x in -0.999f64..0.999) {
        let spec = build_v_tau(Tau::new(tau).unwrap(), DEFAULT_DELTA).unwrap();
        prop_assert!(x == 0.0 || spec.eval(x) > 0.0);
        prop_assert_eq!(spec.eval(x), spec.eval(-x));
    }

    #[test]
    fn classification_is_total(alpha in 0.05f64..0.95, p in 1.01f64..6.0) {
        let crit = CriticalExponents::compute(Alpha::new(alpha).unwrap(), 1e-9).unwrap();
        let r = classify_with(&crit, p, None).unwrap();
        match r.kind {
            RegimeKind::UniqueExistence => prop_assert_eq!(r.predicted_rate, Some(-2.0 * alpha / (p - 1.0))),
            RegimeKind::SpecialExistence => prop_assert_eq!(r.predicted_rate, crit.tau1),
            _ => prop_assert!(r.predicted_rate.is_none()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn operator_is_linear_and_annihilates_constants(
        alpha in 0.1f64..0.9,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        k in 0.1f64..5.0,
    ) {
        let grid = small_grid(24, 2.0);
        let al = Alpha::new(alpha).unwrap();
        let zero = OperatorMatrix::assemble(al, grid.clone(), Extension::natural(Exterior::Zero)).unwrap();
        let u = GridFunction::from_fn(grid.clone(), Exterior::Zero, |x| (1.0 - x * x) * (1.0 + x)).unwrap();
        let v = GridFunction::from_fn(grid.clone(), Exterior::Zero, |x| (3.0 * x).cos() * (1.0 - x * x)).unwrap();
        let w = combine(a, &u, b, &v).unwrap();
        let (lu, lv, lw) = (zero.apply(&u).unwrap(), zero.apply(&v).unwrap(), zero.apply(&w).unwrap());
        for ((x, y), z) in lu.iter().zip(&lv).zip(&lw) {
            let expect = a * x + b * y;
            prop_assert!((z - expect).abs() <= 1e-10 * (a.abs() * x.abs() + b.abs() * y.abs()).max(1.0));
        }
        let constant = OperatorMatrix::assemble(al, grid.clone(), Extension::natural(Exterior::Constant(k))).unwrap();
        let flat = GridFunction::from_fn(grid.clone(), Exterior::Constant(k), |_| k).unwrap();
        let out = constant.apply(&flat).unwrap();
        prop_assert!(out.iter().all(|v| v.abs() <= 1e-9 * k));
    }

    #[test]
    fn operator_commutes_with_reflection(alpha in 0.1f64..0.9, tau in -0.9f64..-0.05, s in -2.0f64..2.0) {
        let grid = small_grid(20, 3.0);
        let op = OperatorMatrix::assemble(Alpha::new(alpha).unwrap(), grid.clone(), Extension::blowup(tau)).unwrap();
        let u = GridFunction::from_fn(grid.clone(), Exterior::Zero, |x| (1.0 - x.abs()) * x.abs().powf(tau) * (1.0 + s * x)).unwrap();
        let mirrored = GridFunction::from_fn(grid.clone(), Exterior::Zero, |x| (1.0 - x.abs()) * x.abs().powf(tau) * (1.0 - s * x)).unwrap();
        let (lu, lm) = (op.apply(&u).unwrap(), op.apply(&mirrored).unwrap());
        for (i, v) in lu.iter().enumerate() {
            prop_assert!((v - lm[grid.mirror(i)]).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn profile_sampling_scales(tau in -0.9f64..0.0, scale in 0.0f64..10.0) {
        let grid = small_grid(16, 2.0);
        let spec = build_v_tau(Tau::new(tau).unwrap(), DEFAULT_DELTA).unwrap();
        let one = sample_profile(&spec, &grid, 1.0).unwrap();
        let many = sample_profile(&spec, &grid, scale).unwrap();
        for (a, b) in one.values().iter().zip(many.values()) {
            prop_assert_eq!(scale * a, *b);
        }
    }
}
