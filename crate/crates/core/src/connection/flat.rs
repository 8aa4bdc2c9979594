//! Parallel frames of flat connections, integrated numerically on the grid.
//!
//! A parallel frame `f = eB` solves `dB = −θB`. It is integrated with RK4
//! along the x-gridline through the basepoint and then along every y-gridline
//! (the y-first order is run as a cross-check). Integration runs on a lattice
//! `FLAT_REFINE` times finer than the chart grid, and derivatives at chart
//! nodes come from fourth-order differences on that lattice.

use crate::error::{Error, Result};
use crate::expr::Tape;
use crate::grid::{fd_derivative, Axis, Chart, GridMax, GridPoint};
use crate::mat::Mat2;
use crate::tolerance::Tolerances;

use super::{curvature, curvature_magnitudes, ConnectionMatrix, SampledConnection};

/// Lattice refinement used for integration and differentiation.
pub const FLAT_REFINE: usize = 4;

/// Grid-sampled frame change with its first derivatives at every node.
#[derive(Debug, Clone)]
pub struct SampledFrame {
    chart: Chart,
    basepoint: GridPoint,
    values: Vec<Mat2<f64>>,
    d_dx: Vec<Mat2<f64>>,
    d_dy: Vec<Mat2<f64>>,
    /// `max |dB + θB|` over nodes, derivatives by finite differences.
    pub residual: f64,
    /// `max |B_xfirst − B_yfirst|` over nodes.
    pub sweep_discrepancy: f64,
    /// `B(x₁) B(x₀)⁻¹` along the basepoint row, on x-periodic charts.
    pub x_holonomy: Option<Mat2<f64>>,
    /// `B(y₁) B(y₀)⁻¹` along the basepoint column, on y-periodic charts.
    pub y_holonomy: Option<Mat2<f64>>,
}

/// Grid-sampled symmetric metric with first derivatives.
#[derive(Debug, Clone)]
pub struct SampledMetric {
    pub chart: Chart,
    pub values: Vec<Mat2<f64>>,
    pub d_dx: Vec<Mat2<f64>>,
    pub d_dy: Vec<Mat2<f64>>,
}

/// The fine lattice along one axis.
struct Lattice {
    start: f64,
    step: f64,
    len: usize,
}

impl Lattice {
    fn new(chart: &Chart, axis: Axis) -> Lattice {
        let n = chart.count(axis);
        let cells = if chart.is_periodic(axis) { n } else { n - 1 };
        Lattice {
            start: chart.range(axis).0,
            step: chart.spacing(axis) / FLAT_REFINE as f64,
            len: cells * FLAT_REFINE + 1,
        }
    }

    fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

fn coeffs(tape: &Tape, x: f64, y: f64, scratch: &mut Vec<f64>) -> Result<Mat2<f64>> {
    let mut out = [0.0; 4];
    tape.eval_into(x, y, scratch, &mut out)?;
    Ok(Mat2::new(out[0], out[1], out[2], out[3]))
}

fn axis_tape(theta: &ConnectionMatrix, axis: Axis) -> Tape {
    Tape::new(theta.entries().iter().map(|a| a.coeff(axis)))
}

/// One classical RK4 step of `Y' = F(s, Y)` with `F` linear in `Y`.
fn rk4_step(
    y: &Mat2<f64>,
    h: f64,
    m0: &Mat2<f64>,
    mh: &Mat2<f64>,
    m1: &Mat2<f64>,
    rhs: impl Fn(&Mat2<f64>, &Mat2<f64>) -> Mat2<f64>,
) -> Mat2<f64> {
    let k1 = rhs(m0, y);
    let k2 = rhs(mh, &(y + &k1.scale(&(0.5 * h))));
    let k3 = rhs(mh, &(y + &k2.scale(&(0.5 * h))));
    let k4 = rhs(m1, &(y + &k3.scale(&h)));
    let sum = &(&k1 + &k2.scale(&2.0)) + &(&k3.scale(&2.0) + &k4);
    y + &sum.scale(&(h / 6.0))
}

fn frame_rhs(m: &Mat2<f64>, b: &Mat2<f64>) -> Mat2<f64> {
    (m * b).scale(&-1.0)
}

/// Integrates `dB/ds = −M(s) B` over the lattice nodes `0..len`, starting
/// from `init` at node `origin`; `point(s)` maps a lattice parameter to chart
/// coordinates.
fn sweep(
    tape: &Tape,
    lattice: &Lattice,
    origin: usize,
    init: Mat2<f64>,
    point: impl Fn(f64) -> (f64, f64),
    scratch: &mut Vec<f64>,
) -> Result<Vec<Mat2<f64>>> {
    let mut out = vec![Mat2::zeros(); lattice.len];
    out[origin] = init;
    let mut eval = |s: f64| {
        let (x, y) = point(s);
        coeffs(tape, x, y, scratch)
    };
    for dir in [1isize, -1] {
        let mut k = origin as isize;
        loop {
            let next = k + dir;
            if next < 0 || next >= lattice.len as isize {
                break;
            }
            let s = lattice.at(k as usize);
            let h = dir as f64 * lattice.step;
            let (m0, mh, m1) = (eval(s)?, eval(s + 0.5 * h)?, eval(s + h)?);
            out[next as usize] = rk4_step(&out[k as usize], h, &m0, &mh, &m1, frame_rhs);
            k = next;
        }
    }
    Ok(out)
}

/// Full lattice field, `first` axis integrated along the basepoint line,
/// then the other axis from every node of that line. Indexed `kx * ny + ky`.
fn integrate_field(
    theta: &ConnectionMatrix,
    lx: &Lattice,
    ly: &Lattice,
    base: (usize, usize),
    x_first: bool,
) -> Result<Vec<Mat2<f64>>> {
    let tx = axis_tape(theta, Axis::X);
    let ty = axis_tape(theta, Axis::Y);
    let mut scratch = Vec::new();
    let mut field = vec![Mat2::zeros(); lx.len * ly.len];
    if x_first {
        let y0 = ly.at(base.1);
        let row = sweep(&tx, lx, base.0, Mat2::identity(), |s| (s, y0), &mut scratch)?;
        for (kx, start) in row.into_iter().enumerate() {
            let x = lx.at(kx);
            let col = sweep(&ty, ly, base.1, start, |s| (x, s), &mut scratch)?;
            field[kx * ly.len..(kx + 1) * ly.len].copy_from_slice(&col);
        }
    } else {
        let x0 = lx.at(base.0);
        let col = sweep(&ty, ly, base.1, Mat2::identity(), |s| (x0, s), &mut scratch)?;
        for (ky, start) in col.into_iter().enumerate() {
            let y = ly.at(ky);
            let row = sweep(&tx, lx, base.0, start, |s| (s, y), &mut scratch)?;
            for (kx, b) in row.into_iter().enumerate() {
                field[kx * ly.len + ky] = b;
            }
        }
    }
    Ok(field)
}

fn entrywise_fd(line: &[Mat2<f64>], h: f64) -> Vec<Mat2<f64>> {
    let parts: Vec<Vec<f64>> = (0..4)
        .map(|e| {
            let vals: Vec<f64> = line.iter().map(|m| m.0[e / 2][e % 2]).collect();
            fd_derivative(&vals, h, false)
        })
        .collect();
    (0..line.len())
        .map(|k| Mat2::new(parts[0][k], parts[1][k], parts[2][k], parts[3][k]))
        .collect()
}

/// Parallel frame of a flat connection with `B(basepoint) = I`.
///
/// The basepoint is snapped to the nearest grid node. Fails with
/// [`Error::NotFlat`] if the curvature exceeds `tol.flat · (1 + max|θ|)`.
pub fn parallel_frame_flat(
    theta: &ConnectionMatrix,
    basepoint: (f64, f64),
    tol: &Tolerances,
) -> Result<SampledFrame> {
    let chart = *theta.chart();
    let omega = curvature_magnitudes(&curvature(theta))?;
    let threshold = tol.flat * (1.0 + theta.max_abs()?);
    let max_curvature = omega.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(max_curvature <= threshold) {
        return Err(Error::NotFlat {
            max_curvature,
            threshold,
        });
    }

    let bp = chart.nearest_node(basepoint.0, basepoint.1);
    let (lx, ly) = (Lattice::new(&chart, Axis::X), Lattice::new(&chart, Axis::Y));
    let base = (bp.ix * FLAT_REFINE, bp.iy * FLAT_REFINE);
    let field = integrate_field(theta, &lx, &ly, base, true)?;
    let cross = integrate_field(theta, &lx, &ly, base, false)?;
    let fine = |kx: usize, ky: usize| kx * ly.len + ky;

    let (nx, ny) = chart.grid();
    let mut values = vec![Mat2::zeros(); chart.len()];
    let mut d_dx = values.clone();
    let mut d_dy = values.clone();
    let mut sweep_discrepancy = 0.0f64;
    for iy in 0..ny {
        let ky = iy * FLAT_REFINE;
        let row: Vec<Mat2<f64>> = (0..lx.len).map(|kx| field[fine(kx, ky)]).collect();
        let deriv = entrywise_fd(&row, lx.step);
        for ix in 0..nx {
            d_dx[chart.index(ix, iy)] = deriv[ix * FLAT_REFINE];
        }
    }
    for ix in 0..nx {
        let kx = ix * FLAT_REFINE;
        let col = &field[fine(kx, 0)..fine(kx, 0) + ly.len];
        let deriv = entrywise_fd(col, ly.step);
        for iy in 0..ny {
            let ky = iy * FLAT_REFINE;
            let i = chart.index(ix, iy);
            values[i] = field[fine(kx, ky)];
            d_dy[i] = deriv[ky];
            sweep_discrepancy =
                sweep_discrepancy.max((&values[i] - &cross[fine(kx, ky)]).max_abs());
        }
    }

    let holonomy = |end: Mat2<f64>, start: Mat2<f64>| &end * &start.inverse();
    let x_holonomy = chart
        .is_periodic(Axis::X)
        .then(|| holonomy(field[fine(lx.len - 1, base.1)], field[fine(0, base.1)]));
    let y_holonomy = chart
        .is_periodic(Axis::Y)
        .then(|| holonomy(field[fine(base.0, ly.len - 1)], field[fine(base.0, 0)]));

    let mut frame = SampledFrame {
        chart,
        basepoint: bp,
        values,
        d_dx,
        d_dy,
        residual: 0.0,
        sweep_discrepancy,
        x_holonomy,
        y_holonomy,
    };
    let sampled = theta.sample()?;
    frame.residual = (0..chart.len())
        .map(|i| {
            let b = &frame.values[i];
            let rx = &frame.d_dx[i] + &(&sampled.dx[i] * b);
            let ry = &frame.d_dy[i] + &(&sampled.dy[i] * b);
            rx.max_abs().max(ry.max_abs())
        })
        .fold(0.0, f64::max);
    Ok(frame)
}

impl SampledFrame {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn basepoint(&self) -> GridPoint {
        self.basepoint
    }

    pub fn at(&self, ix: usize, iy: usize) -> &Mat2<f64> {
        &self.values[self.chart.index(ix, iy)]
    }

    pub fn values(&self) -> &[Mat2<f64>] {
        &self.values
    }

    /// `(∂B/∂x, ∂B/∂y)` at a node.
    pub fn derivative(&self, ix: usize, iy: usize) -> (&Mat2<f64>, &Mat2<f64>) {
        let i = self.chart.index(ix, iy);
        (&self.d_dx[i], &self.d_dy[i])
    }

    fn defect(h: &Option<Mat2<f64>>) -> Option<f64> {
        h.as_ref().map(|h| (h - &Mat2::identity()).max_abs())
    }

    /// `max |H − I|` of the x-loop holonomy, on x-periodic charts.
    pub fn x_loop_defect(&self) -> Option<f64> {
        Self::defect(&self.x_holonomy)
    }

    pub fn y_loop_defect(&self) -> Option<f64> {
        Self::defect(&self.y_holonomy)
    }

    /// The metric making the parallel frame orthonormal: `G = B⁻ᵀB⁻¹`.
    pub fn metric(&self) -> SampledMetric {
        let n = self.values.len();
        let mut out = SampledMetric {
            chart: self.chart,
            values: Vec::with_capacity(n),
            d_dx: Vec::with_capacity(n),
            d_dy: Vec::with_capacity(n),
        };
        for i in 0..n {
            let c = self.values[i].inverse();
            let ct = c.transpose();
            out.values.push(&ct * &c);
            for (d, dst) in [
                (&self.d_dx[i], &mut out.d_dx),
                (&self.d_dy[i], &mut out.d_dy),
            ] {
                let dc = (&(&c * d) * &c).scale(&-1.0);
                dst.push(&(&dc.transpose() * &c) + &(&ct * &dc));
            }
        }
        out
    }
}

impl SampledMetric {
    /// Largest entry of `dG − θᵀG − Gθ` over nodes.
    pub fn compatibility_residual(&self, theta: &ConnectionMatrix) -> Result<GridMax> {
        if !theta.chart().same_domain(&self.chart) {
            return Err(Error::ChartMismatch);
        }
        let s = theta.sample()?;
        Ok(GridMax::over(&self.chart, |i| {
            let g = &self.values[i];
            let r =
                |d: &Mat2<f64>, t: &Mat2<f64>| (&(d - &(&t.transpose() * g)) - &(g * t)).max_abs();
            r(&self.d_dx[i], &s.dx[i]).max(r(&self.d_dy[i], &s.dy[i]))
        }))
    }

    pub fn at(&self, ix: usize, iy: usize) -> &Mat2<f64> {
        &self.values[self.chart.index(ix, iy)]
    }
}

/// `θ' = B⁻¹dB + B⁻¹θB` for a grid-sampled frame.
pub fn gauge_transform_sampled(
    theta: &ConnectionMatrix,
    frame: &SampledFrame,
) -> Result<SampledConnection> {
    if !theta.chart().same_domain(&frame.chart) {
        return Err(Error::ChartMismatch);
    }
    let s = theta.sample()?;
    let n = frame.values.len();
    let mut out = SampledConnection {
        chart: frame.chart,
        dx: Vec::with_capacity(n),
        dy: Vec::with_capacity(n),
    };
    for i in 0..n {
        let b = &frame.values[i];
        let inv = b.inverse();
        out.dx.push(&inv * &(&frame.d_dx[i] + &(&s.dx[i] * b)));
        out.dy.push(&inv * &(&frame.d_dy[i] + &(&s.dy[i] * b)));
    }
    Ok(out)
}

/// Transports a metric along a coordinate line: solves
/// `dG/ds = MᵀG + GM` with `M = θ(∂ₛ)` by RK4 in `steps` steps, starting
/// at `start` and moving `length` along `axis`.
pub fn transport_metric(
    theta: &ConnectionMatrix,
    g0: Mat2<f64>,
    start: (f64, f64),
    axis: Axis,
    length: f64,
    steps: usize,
) -> Result<Mat2<f64>> {
    if steps == 0 {
        return Err(Error::Precondition(
            "transport needs at least one step".into(),
        ));
    }
    let tape = axis_tape(theta, axis);
    let mut scratch = Vec::new();
    let point = |s: f64| match axis {
        Axis::X => (start.0 + s, start.1),
        Axis::Y => (start.0, start.1 + s),
    };
    let h = length / steps as f64;
    let mut g = g0;
    let rhs = |m: &Mat2<f64>, g: &Mat2<f64>| &(&m.transpose() * g) + &(g * m);
    for k in 0..steps {
        let s = k as f64 * h;
        let mut at = |s: f64| {
            let (x, y) = point(s);
            coeffs(&tape, x, y, &mut scratch)
        };
        let (m0, mh, m1) = (at(s)?, at(s + 0.5 * h)?, at(s + h)?);
        g = rk4_step(&g, h, &m0, &mh, &m1, rhs);
    }
    Ok(g)
}
