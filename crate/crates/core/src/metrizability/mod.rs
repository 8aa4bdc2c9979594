//! Local metrizability of rank-2 connections over a surface chart.
//!
//! Away from the zero set of the curvature `Ω = ω·U`, a connection is
//! locally metric iff `U` has purely imaginary nonzero eigenvalues and the
//! trace-free part of the connection matrix becomes skew in the frame `e·A`,
//! where `A` is the SPD square root of the unit-determinant skew-symmetrizer
//! `S` of `U`. The trace part only rescales the metric: the parallel metric
//! is `e^φ·adj S` with `dφ = Tr θ`. Flat connections are handled through a
//! parallel frame.

pub mod kernels;

pub use kernels::{
    imaginary_eigentest, lemma_identity_residual, metric_from_symmetrizer, skew_symmetrizer,
    solve_skew_symmetrizer_at, sqrt_spd, sqrt_spd_at, traceless, transition_orthogonality,
    EigenTest,
};

use std::fmt;

use crate::connection::{
    compatibility_residual, compatibility_residual_max, curvature, gauge_transform_unchecked,
    parallel_frame_flat, ConnectionMatrix, CurvatureMatrix, MetricField, SampledMetric,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{Chart, OneForm, TwoForm};
use crate::grid::{first_failing, GridMax, GridPoint};
use crate::mat::Mat2;
use crate::tolerance::Tolerances;
use crate::volume_euler::{integrate_log_f, SampledScalar};

/// Normalization fixing the scale of the skew-symmetrizer.
pub const NORMALIZATION: &str = "det S = 1";
/// How verdicts are certified.
pub const CERTIFICATION: &str = "grid-sampled";

/// `Ω = volume · U` entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureCoefficient {
    pub u: Mat2<Expr>,
    pub volume: TwoForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Metric,
    Flat,
    NotMetricEigen,
    NotMetricSkew,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Metric => "Metric",
            Verdict::Flat => "Flat",
            Verdict::NotMetricEigen => "NotMetricEigen",
            Verdict::NotMetricSkew => "NotMetricSkew",
            Verdict::Inconclusive => "Inconclusive",
        }
    }

    pub fn from_name(s: &str) -> Option<Verdict> {
        [
            Verdict::Metric,
            Verdict::Flat,
            Verdict::NotMetricEigen,
            Verdict::NotMetricSkew,
            Verdict::Inconclusive,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }

    pub fn is_not_metric(self) -> bool {
        matches!(self, Verdict::NotMetricEigen | Verdict::NotMetricSkew)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A metric parallel for the tested connection, in the original frame.
#[derive(Debug, Clone)]
pub enum RecoveredMetric {
    /// Closed form `G = adj S`.
    Symbolic(MetricField),
    /// `G = e^φ·base` with `dφ = Tr θ` and `φ = 0` at the basepoint.
    Conformal {
        base: MetricField,
        log_factor: SampledScalar,
    },
    /// Integrated from a parallel frame (flat case).
    Sampled(SampledMetric),
}

impl RecoveredMetric {
    pub fn chart(&self) -> &Chart {
        match self {
            RecoveredMetric::Symbolic(g) => g.chart(),
            RecoveredMetric::Conformal { base, .. } => base.chart(),
            RecoveredMetric::Sampled(g) => &g.chart,
        }
    }

    pub fn at(&self, ix: usize, iy: usize) -> Result<Mat2<f64>> {
        match self {
            RecoveredMetric::Symbolic(g) => {
                let p = g.chart().node(ix, iy);
                Ok(g.entries().eval(p.x, p.y)?)
            }
            RecoveredMetric::Conformal { base, log_factor } => {
                let p = base.chart().node(ix, iy);
                let g = base.entries().eval(p.x, p.y)?;
                Ok(g.map(|v| v * log_factor.at(ix, iy).exp()))
            }
            RecoveredMetric::Sampled(g) => Ok(*g.at(ix, iy)),
        }
    }

    /// Values at every node, in flat-index order.
    pub fn sample(&self) -> Result<Vec<Mat2<f64>>> {
        match self {
            RecoveredMetric::Symbolic(g) => g.sample(),
            RecoveredMetric::Conformal { base, log_factor } => {
                let mut v = base.sample()?;
                for (g, phi) in v.iter_mut().zip(&log_factor.values) {
                    *g = g.map(|x| x * phi.exp());
                }
                Ok(v)
            }
            RecoveredMetric::Sampled(g) => Ok(g.values.clone()),
        }
    }

    pub fn symbolic(&self) -> Option<&MetricField> {
        match self {
            RecoveredMetric::Symbolic(g) => Some(g),
            _ => None,
        }
    }
}

/// Diagnostics of the flat branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatDiagnostics {
    /// `max |dB + θB|` of the parallel frame.
    pub frame_residual: f64,
    pub sweep_discrepancy: f64,
    pub x_loop_defect: Option<f64>,
    pub y_loop_defect: Option<f64>,
}

impl FlatDiagnostics {
    /// Largest loop defect, if any axis is periodic.
    pub fn max_defect(&self) -> Option<f64> {
        match (self.x_loop_defect, self.y_loop_defect) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub max_curvature: f64,
    /// Curvature counts as zero at or below this value.
    pub flat_threshold: f64,
    pub curvature_zero_fraction: f64,
    pub max_abs_trace_u: Option<f64>,
    /// `max |Tr θ|`; above `flat_threshold` the metric carries a conformal factor.
    pub max_abs_trace_theta: Option<f64>,
    pub min_det_u: Option<f64>,
    pub symmetrizer_residual: Option<f64>,
    pub sqrt_residual: Option<f64>,
    pub max_skew_residual: Option<f64>,
    pub skew_threshold: Option<f64>,
    pub compat_residual: Option<f64>,
    pub compat_threshold: Option<f64>,
    pub flat: Option<FlatDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct MetrizabilityReport {
    pub verdict: Verdict,
    pub witness: Option<GridPoint>,
    pub metric: Option<RecoveredMetric>,
    /// Trace-free part of the connection in the frame `e·A` (curved case
    /// only). This is the connection in the frame `e·A·e^(-φ/2)`.
    pub transformed: Option<ConnectionMatrix>,
    pub symmetrizer: Option<Mat2<Expr>>,
    pub diagnostics: Diagnostics,
    pub chart: Chart,
    pub basepoint: GridPoint,
    pub tolerances: Tolerances,
    /// Why the verdict is Inconclusive, if it is.
    pub note: Option<String>,
}

impl MetrizabilityReport {
    /// Flat verdict whose parallel frame fails to close around a period.
    pub fn has_flat_defect(&self) -> bool {
        self.verdict == Verdict::Flat
            && self
                .diagnostics
                .flat
                .and_then(|f| f.max_defect())
                .is_some_and(|d| !(d <= self.tolerances.defect))
    }
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub tolerances: Tolerances,
    /// Snapped to the nearest node; the lower-left node when `None`.
    pub basepoint: Option<(f64, f64)>,
    /// 2-form used to factor the curvature.
    pub volume: TwoForm,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tolerances: Tolerances::default(),
            basepoint: None,
            volume: TwoForm::area(),
        }
    }
}

fn max_entry(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Factors `Ω = ω·U`.
pub fn extract_u(omega: &CurvatureMatrix, volume: &TwoForm) -> Result<CurvatureCoefficient> {
    let chart = omega.chart();
    let w = &volume.coeff;
    let ws = chart.sample([w])?;
    if let Some(p) = first_failing(chart, |i| !(ws.at(i)[0] != 0.0 && ws.at(i)[0].is_finite())) {
        return Err(Error::DegenerateVolume(p));
    }
    let u = omega.entries().map(|o| &o.coeff / w);
    let mut exprs = vec![w];
    exprs.extend(omega.entries().iter().map(|o| &o.coeff));
    exprs.extend(u.iter());
    let s = chart.sample(exprs)?;
    if let Some(p) = first_failing(chart, |i| {
        let r = s.at(i);
        let scale = max_entry(&r[1..5]);
        let err = (0..4).fold(0.0f64, |m, k| m.max((r[0] * r[5 + k] - r[1 + k]).abs()));
        !(err <= 1e-12 * (1.0 + scale))
    }) {
        return Err(Error::Precondition(format!(
            "Ω = ω·U fails to reconstruct at {p}"
        )));
    }
    Ok(CurvatureCoefficient {
        u,
        volume: volume.clone(),
    })
}

/// Closed-form residuals of a symmetrizer solution on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrizer {
    pub s: Mat2<Expr>,
    /// `max |U₀S + SU₀ᵀ| / (1 + |U₀||S|)` with `U₀` the traceless part.
    pub residual: f64,
    pub det_defect: f64,
}

/// Symbolic SPD solution of `US + SUᵀ = 0` (traceless part), `det S = 1`.
///
/// The sign of `U₁₂` is read at `basepoint`. Fails with
/// [`Error::EigenPreconditionFailed`] where the eigenvalue condition fails,
/// and with [`Error::NotSpd`] where the sign of `U₁₂` flips.
pub fn solve_skew_symmetrizer(
    u: &Mat2<Expr>,
    chart: &Chart,
    basepoint: GridPoint,
    tol: &Tolerances,
) -> Result<Symmetrizer> {
    let us = chart.sample(u.iter())?;
    let at = |i: usize| {
        let r = us.at(i);
        Mat2::new(r[0], r[1], r[2], r[3])
    };
    if let Some(p) = first_failing(chart, |i| {
        !imaginary_eigentest(&at(i), tol.trace, tol.det).passes
    }) {
        return Err(Error::EigenPreconditionFailed(p));
    }
    let sign = at(chart.index(basepoint.ix, basepoint.iy)).0[0][1].signum();
    let s = skew_symmetrizer(u, sign);
    let ss = chart.sample(s.iter())?;
    let mut residual = 0.0f64;
    let mut det_defect = 0.0f64;
    for i in 0..chart.len() {
        let r = ss.at(i);
        let sm = Mat2::new(r[0], r[1], r[2], r[3]);
        if !sm.is_positive_definite() || !sm.is_finite() {
            return Err(Error::NotSpd(chart.point(i)));
        }
        let u0 = traceless(&at(i));
        let res = (&(&u0 * &sm) + &(&sm * &u0.transpose())).max_abs();
        residual = residual.max(res / (1.0 + u0.max_abs() * sm.max_abs()));
        det_defect = det_defect.max((sm.det() - 1.0).abs());
    }
    Ok(Symmetrizer {
        s,
        residual,
        det_defect,
    })
}

/// Symbolic square root of an SPD, unit-determinant field; returns `A` and
/// the grid maximum of `|A·A − S| / (1 + |S|)`.
pub fn sqrt_spd_field(s: &Mat2<Expr>, chart: &Chart) -> Result<(Mat2<Expr>, f64)> {
    let a = sqrt_spd(s);
    let mut exprs: Vec<&Expr> = s.iter().collect();
    exprs.extend(a.iter());
    let v = chart.sample(exprs)?;
    let mut residual = 0.0f64;
    for i in 0..chart.len() {
        let r = v.at(i);
        let sm = Mat2::new(r[0], r[1], r[2], r[3]);
        if !sm.is_positive_definite() {
            return Err(Error::NotSpd(chart.point(i)));
        }
        let am = Mat2::new(r[4], r[5], r[6], r[7]);
        residual = residual.max((&(&am * &am) - &sm).max_abs() / (1.0 + sm.max_abs()));
    }
    Ok((a, residual))
}

/// The Gram matrix `G = S⁻¹ = adj S` in the original frame.
pub fn recover_metric(s: &Mat2<Expr>, chart: Chart) -> MetricField {
    let [[g11, g12], [_, g22]] = metric_from_symmetrizer(s).0;
    MetricField::new(g11, g12, g22, chart)
}

/// Runs the full decision pipeline with default options.
pub fn check_metrizability(theta: &ConnectionMatrix) -> Result<MetrizabilityReport> {
    check_metrizability_with(theta, &CheckOptions::default())
}

pub fn check_metrizability_with(
    theta: &ConnectionMatrix,
    opts: &CheckOptions,
) -> Result<MetrizabilityReport> {
    let chart = *theta.chart();
    let tol = opts.tolerances;
    let basepoint = match opts.basepoint {
        Some((x, y)) if !chart.contains(x, y) => {
            return Err(Error::Precondition(format!(
                "basepoint ({x}, {y}) lies outside the chart"
            )))
        }
        Some((x, y)) => chart.nearest_node(x, y),
        None => chart.node(0, 0),
    };
    let mut report = MetrizabilityReport {
        verdict: Verdict::Inconclusive,
        witness: None,
        metric: None,
        transformed: None,
        symmetrizer: None,
        diagnostics: Diagnostics::default(),
        chart,
        basepoint,
        tolerances: tol,
        note: None,
    };

    let omega = curvature(theta);
    let theta_max = theta.max_abs()?;
    let mags: Vec<f64> = omega.sample()?.iter().map(Mat2::max_abs).collect();
    let flat_threshold = tol.flat * (1.0 + theta_max);
    let zero = |i: usize| mags[i] <= flat_threshold;
    let zeros = (0..chart.len()).filter(|&i| zero(i)).count();
    let d = &mut report.diagnostics;
    d.max_curvature = mags.iter().fold(0.0, |m, v| m.max(*v));
    d.flat_threshold = flat_threshold;
    d.curvature_zero_fraction = zeros as f64 / chart.len() as f64;

    if zeros == chart.len() {
        let frame = parallel_frame_flat(theta, (basepoint.x, basepoint.y), &tol)?;
        let metric = frame.metric();
        let compat = metric.compatibility_residual(theta)?;
        d.compat_residual = Some(compat.value);
        d.flat = Some(FlatDiagnostics {
            frame_residual: frame.residual,
            sweep_discrepancy: frame.sweep_discrepancy,
            x_loop_defect: frame.x_loop_defect(),
            y_loop_defect: frame.y_loop_defect(),
        });
        report.verdict = Verdict::Flat;
        report.metric = Some(RecoveredMetric::Sampled(metric));
        return Ok(report);
    }
    if zeros > 0 {
        report.witness = first_failing(&chart, zero);
        report.note = Some("curvature vanishes on part of the grid".into());
        return Ok(report);
    }

    let coeff = extract_u(&omega, &opts.volume)?;
    let us = chart.sample(coeff.u.iter())?;
    let u_at = |i: usize| {
        let r = us.at(i);
        Mat2::new(r[0], r[1], r[2], r[3])
    };
    let tests: Vec<EigenTest> = (0..chart.len())
        .map(|i| imaginary_eigentest(&u_at(i), tol.trace, tol.det))
        .collect();
    d.max_abs_trace_u = Some(tests.iter().fold(0.0, |m, t| m.max(t.trace.abs())));
    d.min_det_u = Some(tests.iter().fold(f64::INFINITY, |m, t| m.min(t.det)));
    if let Some(p) = first_failing(&chart, |i| !tests[i].passes) {
        report.verdict = Verdict::NotMetricEigen;
        report.witness = Some(p);
        return Ok(report);
    }

    let sym = match solve_skew_symmetrizer(&coeff.u, &chart, basepoint, &tol) {
        Ok(s) => s,
        Err(Error::NotSpd(p)) | Err(Error::EigenPreconditionFailed(p)) => {
            report.witness = Some(p);
            report.note = Some("sign of U₁₂ is not constant on the chart".into());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    d.symmetrizer_residual = Some(sym.residual.max(sym.det_defect));
    let (a, sqrt_residual) = sqrt_spd_field(&sym.s, &chart)?;
    d.sqrt_residual = Some(sqrt_residual);
    report.symmetrizer = Some(sym.s.clone());
    if !(sym.residual <= tol.kernel && sym.det_defect <= tol.kernel && sqrt_residual <= tol.kernel)
    {
        report.note = Some("symmetrizer residuals exceed the kernel tolerance".into());
        return Ok(report);
    }

    let trace = theta.trace();
    let transformed = trace_free(&gauge_transform_unchecked(theta, &a), &trace);
    let sampled = transformed.sample()?;
    let skew_threshold = tol.skew * (1.0 + sampled.max_abs());
    let skew = sampled.skew_residual();
    d.max_skew_residual = Some(skew.value);
    d.skew_threshold = Some(skew_threshold);
    report.transformed = Some(transformed);
    if !(skew.value <= skew_threshold) {
        let sym_at = |m: &Mat2<f64>| (m + &m.transpose()).max_abs();
        report.verdict = Verdict::NotMetricSkew;
        report.witness = first_failing(&chart, |i| {
            !(sym_at(&sampled.dx[i]).max(sym_at(&sampled.dy[i])) <= skew_threshold)
        });
        return Ok(report);
    }

    let g = recover_metric(&sym.s, chart);
    let trace_max = theta.sample()?.trace_max();
    d.max_abs_trace_theta = Some(trace_max);
    let (compat, metric) = if trace_max <= flat_threshold {
        (
            compatibility_residual_max(theta, &g)?,
            RecoveredMetric::Symbolic(g),
        )
    } else {
        // The residual of e^φ·G₀ is e^φ·(dG₀ + Tr θ·G₀ − θᵀG₀ − G₀θ).
        let (phi, _) = integrate_log_f(&trace, &chart, basepoint)?;
        let r = compatibility_residual(theta, &g);
        let r = Mat2::from_fn(|i, j| r.get(i, j) + &trace.scale(g.entries().get(i, j)));
        let s = chart.sample(r.iter().flat_map(|f| [&f.dx, &f.dy]))?;
        let compat = GridMax::over(&chart, |i| phi[i].exp() * max_entry(s.at(i)));
        let log_factor = SampledScalar { chart, values: phi };
        (
            compat,
            RecoveredMetric::Conformal {
                base: g,
                log_factor,
            },
        )
    };
    let compat_threshold = tol.compat * (1.0 + theta_max);
    d.compat_residual = Some(compat.value);
    d.compat_threshold = Some(compat_threshold);
    if !(compat.value <= compat_threshold) {
        report.witness = compat.at;
        report.note = Some("recovered metric fails the compatibility check".into());
        return Ok(report);
    }
    report.verdict = Verdict::Metric;
    report.metric = Some(metric);
    Ok(report)
}

/// `θ − ½ Tr θ·I` given `Tr θ` of the original connection.
fn trace_free(theta: &ConnectionMatrix, trace: &OneForm) -> ConnectionMatrix {
    let half = trace.scale(&Expr::constant(0.5));
    let entries = Mat2::from_fn(|i, j| {
        let e = theta.entry(i, j);
        if i == j {
            e - &half
        } else {
            e.clone()
        }
    });
    ConnectionMatrix::new(entries, *theta.chart())
}
