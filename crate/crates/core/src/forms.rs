//! Exterior calculus on a two-dimensional chart.
//!
//! A 1-form is `p dx + q dy`, a 2-form is `r dx∧dy`; all coefficients are
//! symbolic, so `d` is exact and `d∘d = 0` holds to rounding.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::expr::{Expr, Tape, Var};
pub use crate::grid::Chart;
use crate::grid::{pairwise_sum, Axis};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(pub Expr);

/// `p dx + q dy`; `p` is stored in the `dx` field and `q` in `dy`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OneForm {
    pub dx: Expr,
    pub dy: Expr,
}

/// `coeff · dx∧dy`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoForm {
    pub coeff: Expr,
}

impl ScalarField {
    pub fn new(e: Expr) -> Self {
        ScalarField(e)
    }
}

impl OneForm {
    pub fn new(dx: Expr, dy: Expr) -> Self {
        OneForm { dx, dy }
    }

    pub fn zero() -> Self {
        OneForm::default()
    }

    /// The coordinate form `dx`.
    pub fn dx() -> Self {
        OneForm::new(Expr::one(), Expr::zero())
    }

    /// The coordinate form `dy`.
    pub fn dy() -> Self {
        OneForm::new(Expr::zero(), Expr::one())
    }

    pub fn is_zero(&self) -> bool {
        self.dx.is_zero() && self.dy.is_zero()
    }

    pub fn coeff(&self, axis: Axis) -> &Expr {
        match axis {
            Axis::X => &self.dx,
            Axis::Y => &self.dy,
        }
    }

    pub fn scale(&self, f: &Expr) -> OneForm {
        OneForm::new(f * &self.dx, f * &self.dy)
    }
}

impl TwoForm {
    pub fn new(coeff: Expr) -> Self {
        TwoForm { coeff }
    }

    /// The area form `dx∧dy`.
    pub fn area() -> Self {
        TwoForm::new(Expr::one())
    }

    pub fn scale(&self, f: &Expr) -> TwoForm {
        TwoForm::new(f * &self.coeff)
    }
}

impl Add for &OneForm {
    type Output = OneForm;
    fn add(self, rhs: &OneForm) -> OneForm {
        OneForm::new(&self.dx + &rhs.dx, &self.dy + &rhs.dy)
    }
}

impl Sub for &OneForm {
    type Output = OneForm;
    fn sub(self, rhs: &OneForm) -> OneForm {
        OneForm::new(&self.dx - &rhs.dx, &self.dy - &rhs.dy)
    }
}

impl Neg for &OneForm {
    type Output = OneForm;
    fn neg(self) -> OneForm {
        OneForm::new(-&self.dx, -&self.dy)
    }
}

impl Mul<&OneForm> for &Expr {
    type Output = OneForm;
    fn mul(self, rhs: &OneForm) -> OneForm {
        rhs.scale(self)
    }
}

impl Add for &TwoForm {
    type Output = TwoForm;
    fn add(self, rhs: &TwoForm) -> TwoForm {
        TwoForm::new(&self.coeff + &rhs.coeff)
    }
}

impl Sub for &TwoForm {
    type Output = TwoForm;
    fn sub(self, rhs: &TwoForm) -> TwoForm {
        TwoForm::new(&self.coeff - &rhs.coeff)
    }
}

impl Neg for &TwoForm {
    type Output = TwoForm;
    fn neg(self) -> TwoForm {
        TwoForm::new(-&self.coeff)
    }
}

/// Exterior derivative of a function: `∂f/∂x dx + ∂f/∂y dy`.
pub fn d0(f: &ScalarField) -> OneForm {
    OneForm::new(f.0.diff(Var::X), f.0.diff(Var::Y))
}

/// Exterior derivative of a 1-form: `(∂q/∂x − ∂p/∂y) dx∧dy`.
pub fn d1(a: &OneForm) -> TwoForm {
    TwoForm::new(a.dy.diff(Var::X) - a.dx.diff(Var::Y))
}

pub fn wedge11(a: &OneForm, b: &OneForm) -> TwoForm {
    TwoForm::new(&a.dx * &b.dy - &a.dy * &b.dx)
}

const GAUSS2: f64 = 0.288_675_134_594_812_9; // 1/(2√3)

/// Quadrature nodes and weights along one axis. Periodic axes use the
/// composite midpoint rule on the half-open period; other axes use two-point
/// Gauss–Legendre in each cell.
fn axis_rule(chart: &Chart, axis: Axis) -> Vec<(f64, f64)> {
    let (a, b) = chart.range(axis);
    let n = chart.count(axis);
    let h = (b - a) / n as f64;
    if chart.is_periodic(axis) {
        (0..n).map(|i| (a + (i as f64 + 0.5) * h, h)).collect()
    } else {
        (0..n)
            .flat_map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                [(mid - GAUSS2 * h, 0.5 * h), (mid + GAUSS2 * h, 0.5 * h)]
            })
            .collect()
    }
}

/// Integral of a 2-form over the chart (oriented by `dx∧dy`).
pub fn integrate2(w: &TwoForm, chart: &Chart) -> Result<f64> {
    let tape = Tape::new([&w.coeff]);
    let xs = axis_rule(chart, Axis::X);
    let ys = axis_rule(chart, Axis::Y);
    let mut terms = Vec::with_capacity(xs.len() * ys.len());
    let mut scratch = Vec::new();
    let mut out = [0.0];
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            tape.eval_into(x, y, &mut scratch, &mut out)?;
            terms.push(out[0] * wx * wy);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Line integral of `a` along an axis-aligned polyline, composite Simpson on
/// each segment (exact for cubic coefficients).
pub fn line_integral(a: &OneForm, path: &[(f64, f64)], chart: &Chart) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::InvalidPath(
            "a path needs at least two vertices".into(),
        ));
    }
    if let Some(&(x, y)) = path.iter().find(|&&(x, y)| !chart.contains(x, y)) {
        return Err(Error::InvalidPath(format!(
            "vertex ({x}, {y}) lies outside the chart"
        )));
    }
    let tapes = [Tape::new([&a.dx]), Tape::new([&a.dy])];
    let mut total = Vec::with_capacity(path.len() - 1);
    for seg in path.windows(2) {
        let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
        let (axis, from, to) = if y0 == y1 {
            (Axis::X, x0, x1)
        } else if x0 == x1 {
            (Axis::Y, y0, y1)
        } else {
            return Err(Error::InvalidPath(format!(
                "segment ({x0}, {y0}) -> ({x1}, {y1}) is not axis-aligned"
            )));
        };
        if from == to {
            continue;
        }
        let tape = &tapes[axis as usize];
        let at = |s: f64| match axis {
            Axis::X => (s, y0),
            Axis::Y => (x0, s),
        };
        total.push(simpson(tape, from, to, chart.spacing(axis), at)?);
    }
    Ok(pairwise_sum(&total))
}

/// Composite Simpson from `from` to `to` with sub-steps at most half a grid
/// spacing.
pub(crate) fn simpson(
    tape: &Tape,
    from: f64,
    to: f64,
    spacing: f64,
    at: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    let cells = ((to - from).abs() / spacing).ceil().max(1.0) as usize;
    let n = 2 * cells;
    let h = (to - from) / n as f64;
    let mut scratch = Vec::new();
    let mut out = [0.0];
    let mut terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (x, y) = at(from + k as f64 * h);
        tape.eval_into(x, y, &mut scratch, &mut out)?;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(w * out[0]);
    }
    Ok(pairwise_sum(&terms) * h / 3.0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    use super::*;
    use crate::expr::parse;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn form(p: &str, q: &str) -> OneForm {
        OneForm::new(e(p), e(q))
    }

    #[test]
    fn d0_examples() {
        let d = d0(&ScalarField(e("x*y")));
        assert_eq!(
            (d.dx.to_string(), d.dy.to_string()),
            ("y".into(), "x".into())
        );
        assert!(d0(&ScalarField(e("3.5"))).is_zero());
        let d = d0(&ScalarField(e("sin(x)")));
        assert_eq!(d.dx.to_string(), "cos(x)");
        assert!(d.dy.is_zero());
    }

    #[test]
    fn d1_examples() {
        assert_eq!(d1(&form("0", "x")).coeff.as_const(), Some(1.0));
        assert_eq!(d1(&form("y", "0")).coeff.as_const(), Some(-1.0));
        let f = ScalarField(e("exp(sin(x)*y/7) + sin(x)*cos(y)^2"));
        let dd = d1(&d0(&f));
        let s = Chart::torus().sample([&dd.coeff]).unwrap();
        assert!(s.max_abs() <= 1e-12);
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(
            wedge11(&OneForm::dx(), &OneForm::dy()).coeff.as_const(),
            Some(1.0)
        );
        let a = form("x", "sin(y)");
        let aa = wedge11(&a, &a);
        assert!(Chart::torus().sample([&aa.coeff]).unwrap().max_abs() == 0.0);
        let w = wedge11(&form("1", "1"), &form("1", "-1"));
        assert_eq!(w.coeff.as_const(), Some(-2.0));
    }

    #[test]
    fn integrate2_examples() {
        let torus = Chart::torus();
        let area = integrate2(&TwoForm::area(), &torus).unwrap();
        assert!((area - 4.0 * PI * PI).abs() < 1e-9);
        let zero = integrate2(&TwoForm::new(e("sin(x)")), &torus).unwrap();
        assert!(zero.abs() < 1e-9);
        // antiderivative sin(x)·sin(y) over [0, π/2]² gives exactly 1
        let quarter = Chart::new(
            (0.0, FRAC_PI_2),
            (0.0, FRAC_PI_2),
            (false, false),
            (128, 128),
        )
        .unwrap();
        let v = integrate2(&TwoForm::new(e("cos(x)*cos(y)")), &quarter).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn line_integral_examples() {
        let torus = Chart::torus();
        let v = line_integral(&OneForm::dx(), &[(0.0, 1.0), (TAU, 1.0)], &torus).unwrap();
        assert!((v - TAU).abs() < 1e-9);
        let c = Chart::new((0.0, 4.0), (0.0, 1.0), (false, false), (16, 16)).unwrap();
        let v = line_integral(&form("0", "x"), &[(3.0, 0.0), (3.0, 1.0)], &c).unwrap();
        assert!((v - 3.0).abs() < 1e-9);
    }

    #[test]
    fn line_integral_of_exact_form() {
        let f = ScalarField(e("sin(x)*exp(y/3) + x*y"));
        let c = Chart::new((-1.0, 2.0), (0.0, 3.0), (false, false), (16, 16)).unwrap();
        let path = [(-0.5, 0.2), (1.7, 0.2), (1.7, 2.9), (0.1, 2.9)];
        let got = line_integral(&d0(&f), &path, &c).unwrap();
        let want = f.0.eval(0.1, 2.9).unwrap() - f.0.eval(-0.5, 0.2).unwrap();
        assert!((got - want).abs() < 1e-6);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let c = Chart::new((0.0, 1.0), (0.0, 1.0), (false, false), (8, 8)).unwrap();
        let a = form("x^3 - 2*x + 1", "0");
        let got = line_integral(&a, &[(0.0, 0.5), (1.0, 0.5)], &c).unwrap();
        assert!((got - (0.25 - 1.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn path_errors() {
        let c = Chart::torus();
        assert!(matches!(
            line_integral(&OneForm::dx(), &[(0.0, 0.0), (1.0, 1.0)], &c),
            Err(Error::InvalidPath(_))
        ));
        assert!(line_integral(&OneForm::dx(), &[(0.0, 0.0), (10.0, 0.0)], &c).is_err());
        assert!(line_integral(&OneForm::dx(), &[(0.0, 0.0)], &c).is_err());
    }
}
