//! Connection matrices on a chart and the operations built on them:
//! curvature, gauge transformation, metric compatibility, interpolation, and
//! parallel frames for flat connections.
//!
//! Conventions: for a frame `e = (e₁, e₂)` the connection matrix satisfies
//! `D eⱼ = Σᵢ θᵢⱼ eᵢ`. A frame change `f = eB` acts as
//! `θ ↦ B⁻¹dB + B⁻¹θB`, and a metric with Gram matrix `G` in the frame `e`
//! is parallel iff `dG − θᵀG − Gθ = 0`.

mod flat;

pub use flat::{
    gauge_transform_sampled, parallel_frame_flat, transport_metric, SampledFrame, SampledMetric,
    FLAT_REFINE,
};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::forms::{d1, wedge11, Chart, OneForm, TwoForm};
use crate::grid::{first_failing, GridMax, GridPoint};
use crate::mat::Mat2;

/// 2×2 matrix of 1-forms relative to a local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    entries: Mat2<OneForm>,
    chart: Chart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMatrix {
    entries: Mat2<TwoForm>,
    chart: Chart,
}

/// Pointwise matrix `B` of a frame change `f = eB`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameChange {
    entries: Mat2<Expr>,
    chart: Chart,
}

/// Symmetric Gram matrix `Gᵢⱼ = g(eᵢ, eⱼ)` of a bundle metric in the frame `e`.
/// The off-diagonal entries share one expression.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    entries: Mat2<Expr>,
    chart: Chart,
}

/// A connection matrix evaluated on the grid: the `dx` and `dy` coefficient
/// matrices at each node.
#[derive(Debug, Clone)]
pub struct SampledConnection {
    pub chart: Chart,
    pub dx: Vec<Mat2<f64>>,
    pub dy: Vec<Mat2<f64>>,
}

fn mat_exprs<T>(m: &Mat2<T>, f: impl Fn(&T) -> [&Expr; 2]) -> Vec<&Expr> {
    m.iter().flat_map(f).collect()
}

impl ConnectionMatrix {
    pub fn new(entries: Mat2<OneForm>, chart: Chart) -> Self {
        ConnectionMatrix { entries, chart }
    }

    pub fn zero(chart: Chart) -> Self {
        ConnectionMatrix::new(Mat2::from_fn(|_, _| OneForm::zero()), chart)
    }

    /// Entries given as `[[(p₁₁, q₁₁), (p₁₂, q₁₂)], [(p₂₁, q₂₁), (p₂₂, q₂₂)]]`.
    pub fn from_coefficients(c: [[(Expr, Expr); 2]; 2], chart: Chart) -> Self {
        let [[a, b], [cc, d]] = c;
        let f = |(p, q): (Expr, Expr)| OneForm::new(p, q);
        ConnectionMatrix::new(Mat2::new(f(a), f(b), f(cc), f(d)), chart)
    }

    pub fn entries(&self) -> &Mat2<OneForm> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &OneForm {
        self.entries.get(i, j)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Same entries on a different chart (e.g. a refined grid).
    pub fn on_chart(&self, chart: Chart) -> Self {
        ConnectionMatrix::new(self.entries.clone(), chart)
    }

    pub fn trace(&self) -> OneForm {
        self.entry(0, 0) + self.entry(1, 1)
    }

    pub fn transpose(&self) -> Self {
        ConnectionMatrix::new(self.entries.transpose(), self.chart)
    }

    /// Eight coefficient expressions, ordered `(i, j, dx|dy)`.
    pub fn coefficients(&self) -> Vec<&Expr> {
        mat_exprs(&self.entries, |a| [&a.dx, &a.dy])
    }

    pub fn sample(&self) -> Result<SampledConnection> {
        let s = self.chart.sample(self.coefficients())?;
        let pick =
            |row: &[f64], off: usize| Mat2::new(row[off], row[2 + off], row[4 + off], row[6 + off]);
        Ok(SampledConnection {
            chart: self.chart,
            dx: s.rows().map(|r| pick(r, 0)).collect(),
            dy: s.rows().map(|r| pick(r, 1)).collect(),
        })
    }

    /// Largest coefficient magnitude on the grid.
    pub fn max_abs(&self) -> Result<f64> {
        Ok(self.chart.sample(self.coefficients())?.max_abs())
    }
}

impl SampledConnection {
    pub fn max_abs(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .fold(0.0, |m, a| m.max(a.max_abs()))
    }

    /// Largest `|θᵢⱼ + θⱼᵢ|` over entries, coefficients and nodes.
    pub fn skew_residual(&self) -> GridMax {
        let sym = |a: &Mat2<f64>| (a + &a.transpose()).max_abs();
        GridMax::over(&self.chart, |i| sym(&self.dx[i]).max(sym(&self.dy[i])))
    }

    pub fn trace_max(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .fold(0.0, |m, a| m.max(a.trace().abs()))
    }
}

impl CurvatureMatrix {
    pub fn entries(&self) -> &Mat2<TwoForm> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &TwoForm {
        self.entries.get(i, j)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn trace(&self) -> TwoForm {
        self.entry(0, 0) + self.entry(1, 1)
    }

    /// `dx∧dy` coefficients at every node.
    pub fn sample(&self) -> Result<Vec<Mat2<f64>>> {
        let s = self.chart.sample(self.entries.iter().map(|w| &w.coeff))?;
        Ok(s.rows()
            .map(|r| Mat2::new(r[0], r[1], r[2], r[3]))
            .collect())
    }
}

impl FrameChange {
    pub fn new(entries: Mat2<Expr>, chart: Chart) -> Self {
        FrameChange { entries, chart }
    }

    pub fn identity(chart: Chart) -> Self {
        FrameChange::new(Mat2::identity(), chart)
    }

    pub fn entries(&self) -> &Mat2<Expr> {
        &self.entries
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// First node where `|det B|` is negligible against `|B|²`.
    pub fn singular_point(&self) -> Result<Option<GridPoint>> {
        let det = self.entries.det();
        let mut exprs = vec![&det];
        exprs.extend(self.entries.iter());
        let s = self.chart.sample(exprs)?;
        Ok(first_failing(&self.chart, |i| {
            let r = s.at(i);
            let scale = r[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            !(r[0].abs() > 1e-12 * scale * scale) || !r[0].is_finite()
        }))
    }
}

impl MetricField {
    /// Builds `[[g11, g12], [g12, g22]]`.
    pub fn new(g11: Expr, g12: Expr, g22: Expr, chart: Chart) -> Self {
        MetricField {
            entries: Mat2::symmetric(g11, g12, g22),
            chart,
        }
    }

    pub fn identity(chart: Chart) -> Self {
        MetricField::new(Expr::one(), Expr::zero(), Expr::one(), chart)
    }

    pub fn entries(&self) -> &Mat2<Expr> {
        &self.entries
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn on_chart(&self, chart: Chart) -> Self {
        MetricField {
            entries: self.entries.clone(),
            chart,
        }
    }

    /// First node where a leading minor is not positive.
    pub fn non_spd_point(&self) -> Result<Option<GridPoint>> {
        let det = self.entries.det();
        let s = self.chart.sample([self.entries.get(0, 0), &det])?;
        Ok(first_failing(&self.chart, |i| {
            let r = s.at(i);
            !(r[0] > 0.0 && r[1] > 0.0)
        }))
    }

    pub fn sample(&self) -> Result<Vec<Mat2<f64>>> {
        let s = self.chart.sample(self.entries.iter())?;
        Ok(s.rows()
            .map(|r| Mat2::new(r[0], r[1], r[2], r[3]))
            .collect())
    }
}

/// `Σₖ aᵢₖ bₖⱼ` with function entries on the left.
pub fn expr_times_forms(a: &Mat2<Expr>, b: &Mat2<OneForm>) -> Mat2<OneForm> {
    Mat2::from_fn(|i, j| &b.get(0, j).scale(a.get(i, 0)) + &b.get(1, j).scale(a.get(i, 1)))
}

/// `Σₖ aᵢₖ bₖⱼ` with function entries on the right.
pub fn forms_times_expr(a: &Mat2<OneForm>, b: &Mat2<Expr>) -> Mat2<OneForm> {
    Mat2::from_fn(|i, j| &a.get(i, 0).scale(b.get(0, j)) + &a.get(i, 1).scale(b.get(1, j)))
}

/// Entrywise exterior derivative of a matrix of functions.
pub fn d_matrix(m: &Mat2<Expr>) -> Mat2<OneForm> {
    m.map(|e| OneForm::new(e.diff(Var::X), e.diff(Var::Y)))
}

fn add_forms(a: &Mat2<OneForm>, b: &Mat2<OneForm>) -> Mat2<OneForm> {
    Mat2::from_fn(|i, j| a.get(i, j) + b.get(i, j))
}

/// Cartan structure equation `Ω = dθ + θ∧θ`.
pub fn curvature(theta: &ConnectionMatrix) -> CurvatureMatrix {
    let t = &theta.entries;
    let entries = Mat2::from_fn(|i, j| {
        let quad = &wedge11(t.get(i, 0), t.get(0, j)) + &wedge11(t.get(i, 1), t.get(1, j));
        &d1(t.get(i, j)) + &quad
    });
    CurvatureMatrix {
        entries,
        chart: theta.chart,
    }
}

/// `θ' = B⁻¹dB + B⁻¹θB`, the connection matrix in the frame `f = eB`.
pub fn gauge_transform(theta: &ConnectionMatrix, frame: &FrameChange) -> Result<ConnectionMatrix> {
    if !theta.chart.same_domain(&frame.chart) {
        return Err(Error::ChartMismatch);
    }
    if let Some(p) = frame.singular_point()? {
        return Err(Error::SingularFrame(p));
    }
    Ok(gauge_transform_unchecked(theta, &frame.entries))
}

pub(crate) fn gauge_transform_unchecked(
    theta: &ConnectionMatrix,
    b: &Mat2<Expr>,
) -> ConnectionMatrix {
    let inv = b.inverse();
    let maurer_cartan = expr_times_forms(&inv, &d_matrix(b));
    let conjugated = expr_times_forms(&inv, &forms_times_expr(&theta.entries, b));
    ConnectionMatrix::new(add_forms(&maurer_cartan, &conjugated), theta.chart)
}

/// `dG − θᵀG − Gθ`; vanishes exactly when `G` is parallel.
pub fn compatibility_residual(theta: &ConnectionMatrix, metric: &MetricField) -> Mat2<OneForm> {
    let g = &metric.entries;
    let dg = d_matrix(g);
    let left = forms_times_expr(&theta.entries.transpose(), g);
    let right = expr_times_forms(g, &theta.entries);
    Mat2::from_fn(|i, j| &(dg.get(i, j) - left.get(i, j)) - right.get(i, j))
}

/// Largest residual coefficient on the grid.
pub fn compatibility_residual_max(
    theta: &ConnectionMatrix,
    metric: &MetricField,
) -> Result<GridMax> {
    let r = compatibility_residual(theta, metric);
    let s = theta.chart.sample(mat_exprs(&r, |a| [&a.dx, &a.dy]))?;
    Ok(GridMax::over(&theta.chart, |i| {
        s.at(i).iter().fold(0.0, |m, v| m.max(v.abs()))
    }))
}

/// `(1 − t)θ + tψ`.
pub fn interpolate(
    theta: &ConnectionMatrix,
    psi: &ConnectionMatrix,
    t: f64,
) -> Result<ConnectionMatrix> {
    if !theta.chart.same_domain(&psi.chart) {
        return Err(Error::ChartMismatch);
    }
    let (s, t) = (Expr::constant(1.0 - t), Expr::constant(t));
    let entries = Mat2::from_fn(|i, j| &theta.entry(i, j).scale(&s) + &psi.entry(i, j).scale(&t));
    Ok(ConnectionMatrix::new(entries, theta.chart))
}

/// Largest pointwise curvature magnitude and the per-node magnitudes.
pub(crate) fn curvature_magnitudes(omega: &CurvatureMatrix) -> Result<Vec<f64>> {
    Ok(omega.sample()?.iter().map(Mat2::max_abs).collect())
}
