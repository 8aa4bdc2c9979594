use std::f64::consts::TAU;

use locmet::connection::{compatibility_residual_max, ConnectionMatrix, MetricField};
use locmet::expr::{parse, Expr};
use locmet::forms::{Chart, OneForm};
use locmet::gallery::{
    hyperbolic_band, levi_civita, semi_symmetric, torsion, torus_example, RiemannianMetric2D,
};
use locmet::metrizability::{check_metrizability, Verdict};
use locmet::volume_euler::{compare_euler, euler_form, volume_criterion};
use locmet::Tolerances;

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn conn(c: [[(&str, &str); 2]; 2], chart: Chart) -> ConnectionMatrix {
    ConnectionMatrix::from_coefficients(c.map(|row| row.map(|(p, q)| (e(p), e(q)))), chart)
}

fn sup(chart: &Chart, a: &Expr, b: &str) -> f64 {
    let d = a.clone() - e(b);
    chart.sample([&d]).unwrap().max_abs()
}

#[test]
fn levi_civita_of_band() {
    let g = hyperbolic_band();
    let theta = levi_civita(&g);
    let want = [[("0", "0"), ("0", "-exp(2*x)")], [("0", "1"), ("1", "0")]];
    for (i, row) in want.iter().enumerate() {
        for (j, &(wx, wy)) in row.iter().enumerate() {
            let f = theta.entry(i, j);
            assert!(sup(g.chart(), &f.dx, wx) <= 1e-12);
            assert!(sup(g.chart(), &f.dy, wy) <= 1e-12);
        }
    }
    assert!(
        compatibility_residual_max(&theta, g.metric())
            .unwrap()
            .value
            <= 1e-12
    );
    assert_eq!(torsion(&theta).max_abs().unwrap(), 0.0);
}

#[test]
fn semi_symmetric_with_identity_metric() {
    let chart = Chart::new((-1.0, 1.0), (-1.0, 1.0), (false, false), (16, 16)).unwrap();
    let g = RiemannianMetric2D::new(MetricField::identity(chart)).unwrap();
    let theta = semi_symmetric(&g, &OneForm::dy());
    let want = [[("0", "0"), ("1", "0")], [("-1", "0"), ("0", "0")]];
    for (i, row) in want.iter().enumerate() {
        for (j, &(wx, wy)) in row.iter().enumerate() {
            let f = theta.entry(i, j);
            assert!(sup(&chart, &f.dx, wx) <= 1e-15);
            assert!(sup(&chart, &f.dy, wy) <= 1e-15);
        }
    }
    let t = torsion(&theta);
    assert!(sup(&chart, t.component(0, 0, 1), "1") <= 1e-15);
    assert!(sup(&chart, t.component(1, 0, 1), "0") <= 1e-15);
}

#[test]
fn conformal_metric_is_torsion_free() {
    let chart = Chart::new((-1.0, 1.0), (-1.0, 1.0), (false, false), (16, 16)).unwrap();
    let c = e("exp(2*0.1*x)");
    let g = RiemannianMetric2D::new(MetricField::new(c.clone(), Expr::zero(), c, chart)).unwrap();
    let theta = levi_civita(&g);
    assert!(torsion(&theta).max_abs().unwrap() <= 1e-10);
    assert!(
        compatibility_residual_max(&theta, g.metric())
            .unwrap()
            .value
            <= 1e-10
    );
    // The Levi-Civita connection of a non-flat conformal metric has a
    // parallel metric of non-constant determinant.
    let band = RiemannianMetric2D::new(MetricField::new(
        e("exp(x*x + y*y)"),
        Expr::zero(),
        e("exp(x*x + y*y)"),
        chart,
    ))
    .unwrap();
    let r = check_metrizability(&levi_civita(&band)).unwrap();
    assert_eq!(r.verdict, Verdict::Metric, "{:?}", r.note);
}

#[test]
fn euler_numbers_on_the_square() {
    let torus = Chart::torus();
    let g = MetricField::identity(torus);
    let tol = Tolerances::default();
    let periodic = conn(
        [
            [("0", "0"), ("0", "sin(x)")],
            [("0", "-sin(x)"), ("0", "0")],
        ],
        torus,
    );
    let r = euler_form(&periodic, &g, &tol).unwrap();
    assert!(r.euler_number.abs() <= 1e-9);
    // Ω₁₂ = cos(x) dx∧dy, so the form is cos(x)/2π.
    let p = torus.node(5, 9);
    let want = p.x.cos() / TAU;
    assert!((r.euler_form.coeff.eval(p.x, p.y).unwrap() - want).abs() <= 1e-12);

    let square = Chart::new((0.0, TAU), (0.0, TAU), (false, false), (64, 64)).unwrap();
    let linear = conn(
        [[("0", "0"), ("0", "x")], [("0", "-x"), ("0", "0")]],
        square,
    );
    let r = euler_form(&linear, &MetricField::identity(square), &tol).unwrap();
    assert!((r.euler_number - TAU).abs() <= 1e-6);

    let perturbed = conn(
        [
            [("0", "0"), ("cos(y)", "sin(x)")],
            [("-cos(y)", "-sin(x)"), ("0", "0")],
        ],
        torus,
    );
    assert!(
        compare_euler(&periodic, &perturbed, &g, &tol)
            .unwrap()
            .difference
            <= 1e-9
    );
    assert_eq!(
        compare_euler(&periodic, &periodic, &g, &tol)
            .unwrap()
            .difference,
        0.0
    );
}

#[test]
fn euler_rejects_incompatible_connection() {
    let chart = Chart::torus().with_grid(16, 16).unwrap();
    let theta = conn([[("1", "0"), ("0", "0")], [("0", "0"), ("0", "0")]], chart);
    let err = euler_form(
        &theta,
        &MetricField::identity(chart),
        &Tolerances::default(),
    );
    assert!(matches!(err, Err(locmet::Error::NotCompatible { .. })));
}

#[test]
fn volume_examples() {
    let tol = Tolerances::default();
    let r = volume_criterion(&torus_example(), None, &tol).unwrap();
    assert!(r.closed);
    let log_f = r.log_f.unwrap();
    // ln f = x − x₀ along the basepoint row.
    for ix in 0..8 {
        let want = log_f.chart.node(ix, 0).x;
        assert!((log_f.at(ix, 3) - want).abs() <= 1e-10);
    }
    assert!((r.period_defects.0.unwrap() - TAU).abs() <= 1e-9);
    assert_eq!(r.period_defects.1, Some(0.0));

    let chart = Chart::new((-1.0, 1.0), (-1.0, 1.0), (false, false), (16, 16)).unwrap();
    let open = conn([[("0", "x"), ("0", "0")], [("0", "0"), ("0", "0")]], chart);
    let r = volume_criterion(&open, None, &tol).unwrap();
    assert!(!r.closed);
    assert!((r.trace_curvature_max - 1.0).abs() <= 1e-15);
    assert!(r.log_f.is_none());
}

#[test]
fn torus_flat_metric_matches_exponential() {
    let r = check_metrizability(&torus_example()).unwrap();
    assert_eq!(r.verdict, Verdict::Flat);
    assert!(r.has_flat_defect());
    let m = r.metric.unwrap();
    let chart = *m.chart();
    let g0 = m.at(0, 0).unwrap();
    for ix in [0, 7, 31, 63] {
        let p = chart.node(ix, 11);
        let g = m.at(ix, 11).unwrap();
        assert!((g.0[0][0] / g0.0[0][0] - (2.0 * p.x).exp()).abs() <= 1e-6 * (2.0 * p.x).exp());
        assert!((g.0[1][1] - g0.0[1][1]).abs() <= 1e-9);
        assert!(g.0[0][1].abs() <= 1e-9);
    }
}
