//! Random instance generators shared by the integration suites.
#![allow(dead_code)]

use locmet::connection::{gauge_transform, ConnectionMatrix, FrameChange, MetricField};
use locmet::expr::Expr;
use locmet::forms::{Chart, OneForm};
use locmet::mat::Mat2;
use rand::Rng;

/// `Σ a cos(kx + ly) + b sin(kx + ly)` over `0 ≤ k, |l| ≤ deg`, plus the
/// sum of `|a|+|b|` weighted by `k` and by `|l|` (bounds on `|∂x|`, `|∂y|`).
pub struct TrigPoly {
    pub expr: Expr,
    pub dx_bound: f64,
    pub dy_bound: f64,
}

pub fn trig_poly(rng: &mut impl Rng, deg: i32, amp: f64) -> TrigPoly {
    let x = Expr::x();
    let y = Expr::y();
    let mut expr = Expr::constant(rng.gen_range(-amp..amp));
    let (mut dx_bound, mut dy_bound) = (0.0, 0.0);
    for k in 0..=deg {
        for l in -deg..=deg {
            if k == 0 && l <= 0 {
                continue;
            }
            let (a, b) = (rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            let phase = &x * k as f64 + &y * l as f64;
            expr = expr + a * phase.clone().cos() + b * phase.sin();
            dx_bound += (a.abs() + b.abs()) * k as f64;
            dy_bound += (a.abs() + b.abs()) * l.abs() as f64;
        }
    }
    TrigPoly {
        expr,
        dx_bound,
        dy_bound,
    }
}

/// Skew connection whose curvature `(κ + ∂x p − ∂y q) dx∧dy` never
/// vanishes: `θ₁₂ = q dx + (κx + p) dy`.
pub fn random_skew(rng: &mut impl Rng, chart: Chart) -> ConnectionMatrix {
    let p = trig_poly(rng, 2, 0.1);
    let q = trig_poly(rng, 2, 0.1);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let kappa = sign * (p.dx_bound + q.dy_bound + rng.gen_range(0.5..1.5));
    let dy = Expr::x() * kappa + p.expr;
    let z = Expr::zero();
    ConnectionMatrix::from_coefficients(
        [
            [(z.clone(), z.clone()), (q.expr.clone(), dy.clone())],
            [(-q.expr, -dy), (z.clone(), z)],
        ],
        chart,
    )
}

/// `[[1, 0], [β, 1]]·[[e^α, γ], [0, e^{−α}]]`, unit determinant.
pub fn random_gauge(rng: &mut impl Rng) -> Mat2<Expr> {
    let a = trig_poly(rng, 2, 0.08).expr;
    let b = trig_poly(rng, 2, 0.15).expr;
    let g = trig_poly(rng, 2, 0.15).expr;
    let lower = Mat2::new(Expr::one(), Expr::zero(), b, Expr::one());
    let upper = Mat2::new(a.clone().exp(), g, Expr::zero(), (-a).exp());
    &lower * &upper
}

pub fn scrambled(rng: &mut impl Rng, chart: Chart) -> (ConnectionMatrix, Mat2<Expr>) {
    let th0 = random_skew(rng, chart);
    let b = random_gauge(rng);
    let th = gauge_transform(&th0, &FrameChange::new(b.clone(), chart)).unwrap();
    (th, b)
}

/// Periodic skew connection `θ₁₂ = q dx + p dy` (flat-free not guaranteed).
pub fn periodic_skew(rng: &mut impl Rng, chart: Chart, amp: f64) -> ConnectionMatrix {
    let p = trig_poly(rng, 2, amp).expr;
    let q = trig_poly(rng, 2, amp).expr;
    let z = Expr::zero();
    ConnectionMatrix::from_coefficients(
        [
            [(z.clone(), z.clone()), (q.clone(), p.clone())],
            [(-q, -p), (z.clone(), z)],
        ],
        chart,
    )
}

/// Periodic SPD metric with entries near `diag(1.5, 1.5)`.
pub fn random_metric(rng: &mut impl Rng, chart: Chart) -> MetricField {
    let g11 = Expr::constant(1.5) + trig_poly(rng, 2, 0.02).expr;
    let g22 = Expr::constant(1.5) + trig_poly(rng, 2, 0.02).expr;
    let g12 = trig_poly(rng, 2, 0.02).expr;
    MetricField::new(g11, g12, g22, chart)
}

pub fn random_oneform(rng: &mut impl Rng, amp: f64) -> OneForm {
    OneForm::new(trig_poly(rng, 2, amp).expr, trig_poly(rng, 2, amp).expr)
}

/// Connection with eight independent trig-polynomial coefficients.
pub fn random_connection(rng: &mut impl Rng, chart: Chart) -> ConnectionMatrix {
    let mut f = || (trig_poly(rng, 2, 0.2).expr, trig_poly(rng, 2, 0.2).expr);
    ConnectionMatrix::from_coefficients([[f(), f()], [f(), f()]], chart)
}

/// Random smooth expression in `x, y` that stays bounded on `[-4, 4]²`
/// and never leaves the domain of its functions.
pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..3) {
            0 => Expr::x(),
            1 => Expr::y(),
            _ => Expr::constant((rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0),
        };
    }
    let op = rng.gen_range(0..9);
    let mut sub = || random_expr(rng, depth - 1);
    match op {
        0 => sub() + sub(),
        1 => sub() - sub(),
        2 => sub() * sub(),
        3 => sub().sin(),
        4 => sub().cos(),
        5 => sub().sin().exp(),
        6 => sub() / (Expr::constant(2.0) + sub().sin()),
        7 => (Expr::one() + sub().powf(2.0)).sqrt(),
        _ => (Expr::constant(2.0) + sub().cos()).ln(),
    }
}

/// Fourth-order central difference of `f` along `axis` (0 = x) at `(x, y)`.
pub fn central_diff(f: &Expr, axis: usize, x: f64, y: f64, h: f64) -> f64 {
    let at = |s: f64| {
        let (px, py) = if axis == 0 { (x + s, y) } else { (x, y + s) };
        f.eval(px, py).unwrap()
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}
