//! Parallel volume forms and Euler forms of rank-2 connections.
//!
//! A connection preserves a local volume form `f e¹∧e²` iff `Tr Ω = 0`; then
//! `d(ln f) = Tr θ`. For a connection compatible with a metric `G`, the Euler
//! form is `Ω'₁₂ / 2π` in any orthonormal frame.

use std::f64::consts::TAU;

use crate::connection::{
    compatibility_residual_max, curvature, gauge_transform_unchecked, ConnectionMatrix,
    FrameChange, MetricField, FLAT_REFINE,
};
use crate::error::{Error, Result};
use crate::expr::{Expr, Tape};
use crate::forms::{integrate2, line_integral, simpson, Chart, OneForm, TwoForm};
use crate::grid::{fd_derivative, Axis, GridPoint};
use crate::mat::Mat2;
use crate::tolerance::Tolerances;

/// A scalar field known only at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledScalar {
    pub chart: Chart,
    pub values: Vec<f64>,
}

impl SampledScalar {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.chart.index(ix, iy)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    /// `max |Tr Ω|` on the grid.
    pub trace_curvature_max: f64,
    /// `Tr Ω` counts as zero at or below this value.
    pub threshold: f64,
    pub closed: bool,
    pub basepoint: GridPoint,
    /// `ln f` with `f(basepoint) = 1`, when closed.
    pub log_f: Option<SampledScalar>,
    /// `max |d(ln f) − Tr θ|` at grid nodes, by finite differences.
    pub reconstruction_residual: Option<f64>,
    /// `∮ Tr θ` around the x- and y-generators through the basepoint, on
    /// periodic axes.
    pub period_defects: (Option<f64>, Option<f64>),
}

/// Cumulative integral of a line's coefficient over a fine lattice.
fn cumulative(
    tape: &Tape,
    start: f64,
    step: f64,
    len: usize,
    origin: usize,
    init: f64,
    point: impl Fn(f64) -> (f64, f64) + Copy,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; len];
    out[origin] = init;
    for k in origin + 1..len {
        let a = start + (k - 1) as f64 * step;
        out[k] = out[k - 1] + simpson(tape, a, a + step, step, point)?;
    }
    for k in (0..origin).rev() {
        let a = start + (k + 1) as f64 * step;
        out[k] = out[k + 1] + simpson(tape, a, a - step, step, point)?;
    }
    Ok(out)
}

/// Tests `Tr Ω = 0` and, when it holds, integrates `d(ln f) = Tr θ` from
/// `basepoint` (snapped to a node; lower-left when `None`).
pub fn volume_criterion(
    theta: &ConnectionMatrix,
    basepoint: Option<(f64, f64)>,
    tol: &Tolerances,
) -> Result<VolumeReport> {
    let chart = *theta.chart();
    let bp = match basepoint {
        Some((x, y)) if !chart.contains(x, y) => {
            return Err(Error::Precondition(format!(
                "basepoint ({x}, {y}) lies outside the chart"
            )))
        }
        Some((x, y)) => chart.nearest_node(x, y),
        None => chart.node(0, 0),
    };
    let tr = theta.trace();
    let tr_omega = curvature(theta).trace();
    let trace_curvature_max = chart.sample([&tr_omega.coeff])?.max_abs();
    let threshold = tol.flat * (1.0 + theta.max_abs()?);
    let closed = trace_curvature_max <= threshold;

    let loop_integral = |axis: Axis| -> Result<Option<f64>> {
        if !chart.is_periodic(axis) {
            return Ok(None);
        }
        let (a, b) = chart.range(axis);
        let path = match axis {
            Axis::X => [(a, bp.y), (b, bp.y)],
            Axis::Y => [(bp.x, a), (bp.x, b)],
        };
        line_integral(&tr, &path, &chart).map(Some)
    };
    let period_defects = (loop_integral(Axis::X)?, loop_integral(Axis::Y)?);

    let mut report = VolumeReport {
        trace_curvature_max,
        threshold,
        closed,
        basepoint: bp,
        log_f: None,
        reconstruction_residual: None,
        period_defects,
    };
    if closed {
        let (values, residual) = integrate_log_f(&tr, &chart, bp)?;
        report.log_f = Some(SampledScalar { chart, values });
        report.reconstruction_residual = Some(residual);
    }
    Ok(report)
}

pub(crate) fn integrate_log_f(
    tr: &OneForm,
    chart: &Chart,
    bp: GridPoint,
) -> Result<(Vec<f64>, f64)> {
    let lattice = |axis: Axis| {
        let n = chart.count(axis);
        let cells = if chart.is_periodic(axis) { n } else { n - 1 };
        (
            chart.range(axis).0,
            chart.spacing(axis) / FLAT_REFINE as f64,
            cells * FLAT_REFINE + 1,
        )
    };
    let (x0, hx, nx) = lattice(Axis::X);
    let (y0, hy, ny) = lattice(Axis::Y);
    let tx = Tape::new([&tr.dx]);
    let ty = Tape::new([&tr.dy]);
    let base = (bp.ix * FLAT_REFINE, bp.iy * FLAT_REFINE);

    let row = cumulative(&tx, x0, hx, nx, base.0, 0.0, |s| (s, bp.y))?;
    let mut field = vec![0.0; nx * ny];
    for (kx, &start) in row.iter().enumerate() {
        let x = x0 + kx as f64 * hx;
        let col = cumulative(&ty, y0, hy, ny, base.1, start, move |s| (x, s))?;
        field[kx * ny..(kx + 1) * ny].copy_from_slice(&col);
    }

    let (cx, cy) = chart.grid();
    let mut values = vec![0.0; chart.len()];
    let mut residual = 0.0f64;
    let mut scratch = Vec::new();
    let mut out = [0.0];
    let mut coeff = |tape: &Tape, x: f64, y: f64| -> Result<f64> {
        tape.eval_into(x, y, &mut scratch, &mut out)?;
        Ok(out[0])
    };
    for iy in 0..cy {
        let ky = iy * FLAT_REFINE;
        let line: Vec<f64> = (0..nx).map(|kx| field[kx * ny + ky]).collect();
        let d = fd_derivative(&line, hx, false);
        for ix in 0..cx {
            let p = chart.node(ix, iy);
            residual = residual.max((d[ix * FLAT_REFINE] - coeff(&tx, p.x, p.y)?).abs());
        }
    }
    for ix in 0..cx {
        let kx = ix * FLAT_REFINE;
        let line = &field[kx * ny..(kx + 1) * ny];
        let d = fd_derivative(line, hy, false);
        for iy in 0..cy {
            let p = chart.node(ix, iy);
            values[chart.index(ix, iy)] = line[iy * FLAT_REFINE];
            residual = residual.max((d[iy * FLAT_REFINE] - coeff(&ty, p.x, p.y)?).abs());
        }
    }
    Ok((values, residual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerReport {
    /// `Ω'₁₂ / 2π` in the orthonormal frame.
    pub euler_form: TwoForm,
    /// Integral of the Euler form over the chart.
    pub euler_number: f64,
    /// `L⁻ᵀ` with `G = LLᵀ`.
    pub frame_used: FrameChange,
    /// Largest `|θ'ᵢⱼ + θ'ⱼᵢ|` in the orthonormal frame.
    pub skew_residual: f64,
    pub compat_residual: f64,
}

/// `L⁻ᵀ` for the Cholesky factor `G = LLᵀ`, so that `FᵀGF = I`.
pub fn orthonormal_frame(g: &MetricField) -> Mat2<Expr> {
    let [[g11, g12], [_, g22]] = g.entries().0.clone();
    let l11 = g11.sqrt();
    let l21 = &g12 / &l11;
    let l22 = (g22 - &l21 * &l21).sqrt();
    let f12 = -(&l21 / &(&l11 * &l22));
    Mat2::new(Expr::one() / l11, f12, Expr::zero(), Expr::one() / l22)
}

fn euler_form_named(
    theta: &ConnectionMatrix,
    g: &MetricField,
    tol: &Tolerances,
    which: &str,
) -> Result<EulerReport> {
    let chart = *theta.chart();
    if !chart.same_domain(g.chart()) {
        return Err(Error::ChartMismatch);
    }
    if let Some(p) = g.non_spd_point()? {
        return Err(Error::NotSpd(p));
    }
    let compat = compatibility_residual_max(theta, g)?;
    let compat_threshold = tol.compat * (1.0 + theta.max_abs()?);
    if !(compat.value <= compat_threshold) {
        return Err(Error::NotCompatible {
            which: which.to_string(),
            residual: compat.value,
            witness: compat.at.unwrap_or(chart.node(0, 0)),
        });
    }
    let f = orthonormal_frame(g);
    let rotated = gauge_transform_unchecked(theta, &f);
    let sampled = rotated.sample()?;
    let skew = sampled.skew_residual();
    if !(skew.value <= tol.skew * (1.0 + sampled.max_abs())) {
        return Err(Error::NotCompatible {
            which: format!("{which} in the orthonormal frame"),
            residual: skew.value,
            witness: skew.at.unwrap_or(chart.node(0, 0)),
        });
    }
    let omega = curvature(&rotated);
    let euler_form = TwoForm::new(&omega.entry(0, 1).coeff / &Expr::constant(TAU));
    let euler_number = integrate2(&euler_form, &chart)?;
    Ok(EulerReport {
        euler_form,
        euler_number,
        frame_used: FrameChange::new(f, chart),
        skew_residual: skew.value,
        compat_residual: compat.value,
    })
}

/// Euler form and number of a connection compatible with `g`.
pub fn euler_form(
    theta: &ConnectionMatrix,
    g: &MetricField,
    tol: &Tolerances,
) -> Result<EulerReport> {
    euler_form_named(theta, g, tol, "connection")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerComparison {
    pub first: EulerReport,
    pub second: EulerReport,
    /// `|χ₁ − χ₂|`.
    pub difference: f64,
}

/// Compares the Euler numbers of two connections sharing the metric `g`.
pub fn compare_euler(
    first: &ConnectionMatrix,
    second: &ConnectionMatrix,
    g: &MetricField,
    tol: &Tolerances,
) -> Result<EulerComparison> {
    let a = euler_form_named(first, g, tol, "first connection")?;
    let b = euler_form_named(second, g, tol, "second connection")?;
    let difference = (a.euler_number - b.euler_number).abs();
    Ok(EulerComparison {
        first: a,
        second: b,
        difference,
    })
}
