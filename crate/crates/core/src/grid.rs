//! Rectangular charts, their sampling grids, and grid-level numerics
//! (pairwise summation, finite-difference stencils).

use std::f64::consts::TAU;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{DomainError, Expr, Tape};

pub const DEFAULT_GRID: usize = 64;
pub const MIN_GRID: usize = 8;

/// Rectangular coordinate domain with a sampling grid.
///
/// Grid nodes along a periodic axis are `x0 + i·(x1-x0)/n` for `i < n`
/// (the seam `x1` is the same point as `x0`); along a non-periodic axis they
/// include both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    x_range: (f64, f64),
    y_range: (f64, f64),
    periodic: (bool, bool),
    grid: (usize, usize),
}

/// A grid node: its indices and coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}) [node {}, {}]",
            self.x, self.y, self.ix, self.iy
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Chart {
    pub fn new(
        x_range: (f64, f64),
        y_range: (f64, f64),
        periodic: (bool, bool),
        grid: (usize, usize),
    ) -> Result<Chart> {
        for (name, (a, b)) in [("x", x_range), ("y", y_range)] {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidChart(format!(
                    "{name} range [{a}, {b}] is empty"
                )));
            }
        }
        if grid.0 < MIN_GRID || grid.1 < MIN_GRID {
            return Err(Error::InvalidChart(format!(
                "grid {}x{} is below the minimum {MIN_GRID}x{MIN_GRID}",
                grid.0, grid.1
            )));
        }
        Ok(Chart {
            x_range,
            y_range,
            periodic,
            grid,
        })
    }

    /// The periodic chart `[0, 2π]²` at the default grid.
    pub fn torus() -> Chart {
        Chart {
            x_range: (0.0, TAU),
            y_range: (0.0, TAU),
            periodic: (true, true),
            grid: (DEFAULT_GRID, DEFAULT_GRID),
        }
    }

    pub fn with_grid(&self, nx: usize, ny: usize) -> Result<Chart> {
        Chart::new(self.x_range, self.y_range, self.periodic, (nx, ny))
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn periodic(&self) -> (bool, bool) {
        self.periodic
    }

    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn range(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => self.x_range,
            Axis::Y => self.y_range,
        }
    }

    pub fn is_periodic(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => self.periodic.0,
            Axis::Y => self.periodic.1,
        }
    }

    pub fn count(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.grid.0,
            Axis::Y => self.grid.1,
        }
    }

    /// Distance between adjacent grid nodes along `axis`.
    pub fn spacing(&self, axis: Axis) -> f64 {
        let (a, b) = self.range(axis);
        let n = self.count(axis);
        if self.is_periodic(axis) {
            (b - a) / n as f64
        } else {
            (b - a) / (n - 1) as f64
        }
    }

    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        self.range(axis).0 + i as f64 * self.spacing(axis)
    }

    pub fn len(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index; x-major so increasing index is lexicographic `(ix, iy)` order.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.grid.1 + iy
    }

    pub fn point(&self, index: usize) -> GridPoint {
        let (ix, iy) = (index / self.grid.1, index % self.grid.1);
        self.node(ix, iy)
    }

    pub fn node(&self, ix: usize, iy: usize) -> GridPoint {
        GridPoint {
            ix,
            iy,
            x: self.coord(Axis::X, ix),
            y: self.coord(Axis::Y, iy),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let slack = |(a, b): (f64, f64)| 1e-12 * (b - a).abs().max(a.abs()).max(b.abs());
        let within = |v: f64, r: (f64, f64)| v >= r.0 - slack(r) && v <= r.1 + slack(r);
        within(x, self.x_range) && within(y, self.y_range)
    }

    /// The grid node closest to `(x, y)`, clamped to the chart.
    pub fn nearest_node(&self, x: f64, y: f64) -> GridPoint {
        let snap = |axis: Axis, v: f64| {
            let (a, _) = self.range(axis);
            let i = ((v - a) / self.spacing(axis)).round();
            i.clamp(0.0, (self.count(axis) - 1) as f64) as usize
        };
        self.node(snap(Axis::X, x), snap(Axis::Y, y))
    }

    pub fn same_domain(&self, other: &Chart) -> bool {
        self == other
    }

    /// Evaluates `exprs` at every grid node.
    pub fn sample<'a>(
        &self,
        exprs: impl IntoIterator<Item = &'a Expr>,
    ) -> Result<Samples, DomainError> {
        let tape = Tape::new(exprs);
        self.sample_tape(&tape)
    }

    pub fn sample_tape(&self, tape: &Tape) -> Result<Samples, DomainError> {
        let width = tape.num_outputs();
        let mut data = vec![0.0; width * self.len()];
        let mut scratch = Vec::new();
        for p in self.points() {
            let at = self.index(p.ix, p.iy) * width;
            tape.eval_into(p.x, p.y, &mut scratch, &mut data[at..at + width])?;
        }
        Ok(Samples { width, data })
    }
}

/// Values of several expressions at every grid node, in flat-index order.
#[derive(Debug, Clone)]
pub struct Samples {
    width: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn at(&self, index: usize) -> &[f64] {
        &self.data[index * self.width..(index + 1) * self.width]
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width.max(1))
    }

    /// Largest absolute value over all nodes and columns.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Largest value of a per-node quantity and the first node attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub value: f64,
    pub at: Option<GridPoint>,
}

impl GridMax {
    pub fn over(chart: &Chart, mut f: impl FnMut(usize) -> f64) -> GridMax {
        let mut best = GridMax {
            value: 0.0,
            at: None,
        };
        for i in 0..chart.len() {
            let v = f(i);
            if best.at.is_none() || v > best.value || v.is_nan() && !best.value.is_nan() {
                best = GridMax {
                    value: v,
                    at: Some(chart.point(i)),
                };
            }
        }
        best
    }
}

/// First node (lexicographic in `(ix, iy)`) where `fails` holds.
pub fn first_failing(chart: &Chart, mut fails: impl FnMut(usize) -> bool) -> Option<GridPoint> {
    (0..chart.len()).find(|&i| fails(i)).map(|i| chart.point(i))
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
/// Interior nodes use the central stencil; with `wrap` the ends use it too,
/// otherwise one-sided stencils of the same order.
pub fn fd_derivative(values: &[f64], h: f64, wrap: bool) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "fourth-order stencils need at least five samples");
    let f = |i: isize| values[i.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| {
            let central = || (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * h);
            let last = n as isize - 1;
            if wrap || (2..=last - 2).contains(&i) {
                central()
            } else if i == 0 {
                (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h)
            } else if i == 1 {
                (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / (12.0 * h)
            } else if i == last {
                -(-25.0 * f(last) + 48.0 * f(last - 1) - 36.0 * f(last - 2) + 16.0 * f(last - 3)
                    - 3.0 * f(last - 4))
                    / (12.0 * h)
            } else {
                -(-3.0 * f(last) - 10.0 * f(last - 1) + 18.0 * f(last - 2) - 6.0 * f(last - 3)
                    + f(last - 4))
                    / (12.0 * h)
            }
        })
        .collect()
}
