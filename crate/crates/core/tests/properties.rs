mod common;

use locmet::connection::{
    compatibility_residual_max, curvature, gauge_transform, interpolate, ConnectionMatrix,
    FrameChange,
};
use locmet::expr::{parse, Expr, Var};
use locmet::forms::{d0, d1, wedge11, Chart, OneForm, ScalarField};
use locmet::gallery::{levi_civita, semi_symmetric, torsion, RiemannianMetric2D};
use locmet::mat::Mat2;
use locmet::metrizability::{check_metrizability, Verdict};
use locmet::volume_euler::{euler_form, orthonormal_frame};
use locmet::Tolerances;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small() -> Chart {
    Chart::new((-1.5, 1.5), (-1.5, 1.5), (false, false), (12, 12)).unwrap()
}

fn max_diff(chart: &Chart, a: &Expr, b: &Expr) -> f64 {
    let d = a.clone() - b.clone();
    chart.sample([&d]).unwrap().max_abs()
}

fn conj(b: &Mat2<Expr>, m: &Mat2<Expr>) -> Mat2<Expr> {
    &(&b.inverse() * m) * b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symbolic_derivative_matches_finite_differences(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let f = common::random_expr(&mut rng(seed), 4);
        for (axis, v) in [(0, Var::X), (1, Var::Y)] {
            let sym = f.diff(v).eval(x, y).unwrap();
            let fd = common::central_diff(&f, axis, x, y, 1e-3);
            prop_assert!((sym - fd).abs() <= 1e-6 * (1.0 + sym.abs()), "{f}: {sym} vs {fd}");
        }
    }

    #[test]
    fn mixed_partials_commute(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let f = common::random_expr(&mut rng(seed), 4);
        let a = f.diff(Var::X).diff(Var::Y).eval(x, y).unwrap();
        let b = f.diff(Var::Y).diff(Var::X).eval(x, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn derivative_is_linear(seed in any::<u64>(), c in -3.0..3.0f64, x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let mut r = rng(seed);
        let (f, g) = (common::random_expr(&mut r, 3), common::random_expr(&mut r, 3));
        let lhs = (f.clone() * c + g.clone()).diff(Var::X).eval(x, y).unwrap();
        let rhs = c * f.diff(Var::X).eval(x, y).unwrap() + g.diff(Var::X).eval(x, y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let f = common::random_expr(&mut rng(seed), 5);
        let back = parse(&f.to_string()).unwrap();
        let (a, b) = (f.eval(x, y).unwrap(), back.eval(x, y).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{f}");
        prop_assert_eq!(back.to_string(), f.to_string());
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = small();
        let f = common::random_expr(&mut r, 3);
        let a = common::random_oneform(&mut r, 0.3);
        let lhs = d1(&a.scale(&f));
        let rhs = &wedge11(&d0(&ScalarField::new(f.clone())), &a) + &d1(&a).scale(&f);
        prop_assert!(max_diff(&chart, &lhs.coeff, &rhs.coeff) <= 1e-12);
        let dd = d1(&d0(&ScalarField::new(f)));
        prop_assert!(chart.sample([&dd.coeff]).unwrap().max_abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn curvature_is_gauge_covariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = small();
        let theta = common::random_connection(&mut r, chart);
        let b = common::random_gauge(&mut r);
        let moved = gauge_transform(&theta, &FrameChange::new(b.clone(), chart)).unwrap();
        let want = conj(&b, &curvature(&theta).entries().map(|w| w.coeff.clone()));
        let got = curvature(&moved);
        for (g, w) in got.entries().iter().zip(want.iter()) {
            prop_assert!(max_diff(&chart, &g.coeff, w) <= 1e-11);
        }
    }

    #[test]
    fn gauge_changes_compose(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = small();
        let theta = common::random_connection(&mut r, chart);
        let (b, c) = (common::random_gauge(&mut r), common::random_gauge(&mut r));
        let two = gauge_transform(
            &gauge_transform(&theta, &FrameChange::new(b.clone(), chart)).unwrap(),
            &FrameChange::new(c.clone(), chart),
        )
        .unwrap();
        let one = gauge_transform(&theta, &FrameChange::new(&b * &c, chart)).unwrap();
        for (p, q) in two.entries().iter().zip(one.entries().iter()) {
            prop_assert!(max_diff(&chart, &p.dx, &q.dx) <= 1e-11);
            prop_assert!(max_diff(&chart, &p.dy, &q.dy) <= 1e-11);
        }
    }

    #[test]
    fn trace_of_curvature_is_exact(seed in any::<u64>()) {
        let chart = small();
        let theta = common::random_connection(&mut rng(seed), chart);
        let diff = &curvature(&theta).trace() - &d1(&theta.trace());
        prop_assert!(chart.sample([&diff.coeff]).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn verdict_is_frame_independent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = Chart::new((0.0, 3.0), (0.0, 3.0), (false, false), (16, 16)).unwrap();
        let (theta, _) = common::scrambled(&mut r, chart);
        let c = common::random_gauge(&mut r);
        let again = gauge_transform(&theta, &FrameChange::new(c, chart)).unwrap();
        for th in [&theta, &again] {
            let rep = check_metrizability(th).unwrap();
            prop_assert_eq!(rep.verdict, Verdict::Metric);
            let g = rep.metric.unwrap();
            prop_assert!(compatibility_residual_max(th, g.symbolic().unwrap()).unwrap().value <= 1e-8);
        }
    }

    #[test]
    fn conformally_rescaled_frames_stay_metric(seed in any::<u64>()) {
        // Scaling a frame by e^h multiplies the parallel metric by e^{2h},
        // so its determinant is no longer constant.
        let mut r = rng(seed);
        let chart = Chart::new((0.0, 3.0), (0.0, 3.0), (false, false), (16, 16)).unwrap();
        let (theta, _) = common::scrambled(&mut r, chart);
        let h = common::trig_poly(&mut r, 2, 0.1).expr.exp();
        let scale = Mat2::diag(h.clone(), h);
        let moved = gauge_transform(&theta, &FrameChange::new(scale, chart)).unwrap();
        let rep = check_metrizability(&moved).unwrap();
        prop_assert_eq!(rep.verdict, Verdict::Metric, "{:?}", rep.note);
        prop_assert!(rep.diagnostics.compat_residual.unwrap() <= 1e-8);
    }

    #[test]
    fn euler_form_ignores_rotation_gauge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = Chart::torus().with_grid(16, 16).unwrap();
        let g = RiemannianMetric2D::new(common::random_metric(&mut r, chart)).unwrap();
        let theta = semi_symmetric(&g, &common::random_oneform(&mut r, 0.05));
        let frame = orthonormal_frame(g.metric());
        let phi = common::trig_poly(&mut r, 2, 0.3).expr;
        let rot = Mat2::new(phi.clone().cos(), -phi.clone().sin(), phi.clone().sin(), phi.cos());
        let a = gauge_transform(&theta, &FrameChange::new(frame.clone(), chart)).unwrap();
        let b = gauge_transform(&theta, &FrameChange::new(&frame * &rot, chart)).unwrap();
        let (oa, ob) = (curvature(&a), curvature(&b));
        prop_assert!(max_diff(&chart, &oa.entry(0, 1).coeff, &ob.entry(0, 1).coeff) <= 1e-9);
        let rep = euler_form(&theta, g.metric(), &Tolerances::default()).unwrap();
        prop_assert!(rep.skew_residual <= 1e-10);
    }

    #[test]
    fn torsion_is_affine_along_interpolation(seed in any::<u64>(), t in 0.0..1.0f64) {
        let mut r = rng(seed);
        let chart = small();
        let g = RiemannianMetric2D::new(common::random_metric(&mut r, chart)).unwrap();
        let u = common::random_oneform(&mut r, 0.2);
        let (lc, semi) = (levi_civita(&g), semi_symmetric(&g, &u));
        let mid = torsion(&interpolate(&lc, &semi, t).unwrap());
        let end = torsion(&semi);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = end.component(k, i, j).clone() * t;
                    prop_assert!(max_diff(&chart, mid.component(k, i, j), &want) <= 1e-10);
                }
            }
        }
        prop_assert!(compatibility_residual_max(&interpolate(&lc, &semi, t).unwrap(), g.metric()).unwrap().value <= 1e-10);
    }
}

#[test]
fn skew_connections_have_traceless_orthonormal_form() {
    let chart = small();
    let mut r = rng(11);
    let (theta, _) = common::scrambled(&mut r, chart);
    let rep = check_metrizability(&theta).unwrap();
    assert_eq!(rep.verdict, Verdict::Metric);
    let sampled = rep.transformed.unwrap().sample().unwrap();
    assert!(sampled.trace_max() <= 1e-10);
    let zero = ConnectionMatrix::zero(chart);
    assert_eq!(zero.max_abs().unwrap(), 0.0);
    assert!(OneForm::zero().is_zero());
}
