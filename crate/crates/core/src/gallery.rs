//! Worked examples and tangent-bundle constructions on surface charts.
//!
//! Index convention: in the coordinate frame `(∂x, ∂y)` the connection
//! matrix is `θⁱⱼ = Γⁱₖⱼ dxᵏ`, i.e. `∇_{∂k} ∂j = Γⁱₖⱼ ∂i`, and torsion is
//! `Tᵏᵢⱼ = Γᵏᵢⱼ − Γᵏⱼᵢ`. Indices are zero-based (`0 = x`, `1 = y`).

use std::f64::consts::TAU;

use crate::connection::{transport_metric, ConnectionMatrix, MetricField};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::forms::{Chart, OneForm};
use crate::grid::Axis;
use crate::mat::Mat2;

/// Names accepted by [`by_name`].
pub const EXAMPLES: [&str; 3] = ["torus", "hyperbolic_band", "semi_symmetric"];

/// A Riemannian metric in the coordinate frame of its chart.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannianMetric2D {
    g: MetricField,
}

impl RiemannianMetric2D {
    pub fn new(g: MetricField) -> Result<Self> {
        if let Some(p) = g.non_spd_point()? {
            return Err(Error::NotSpd(p));
        }
        Ok(RiemannianMetric2D { g })
    }

    pub fn metric(&self) -> &MetricField {
        &self.g
    }

    pub fn chart(&self) -> &Chart {
        self.g.chart()
    }
}

/// `Γ[i][k][j] = Γⁱₖⱼ`.
pub type Christoffel = [[[Expr; 2]; 2]; 2];

/// Torsion components `t[k][i][j] = Tᵏᵢⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionField {
    pub t: [[[Expr; 2]; 2]; 2],
    pub chart: Chart,
}

impl TorsionField {
    pub fn component(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.t[k][i][j]
    }

    /// Components at every node, ordered `(k, i, j)`.
    pub fn sample(&self) -> Result<Vec<[f64; 8]>> {
        let s = self.chart.sample(self.t.iter().flatten().flatten())?;
        Ok(s.rows().map(|r| std::array::from_fn(|n| r[n])).collect())
    }

    /// `max |Tᵏᵢⱼ + Tᵏⱼᵢ|` on the grid.
    pub fn antisymmetry_defect(&self) -> Result<f64> {
        Ok(self
            .sample()?
            .iter()
            .flat_map(|r| (0..2).map(move |k| (r[4 * k + 1] + r[4 * k + 2]).abs()))
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> Result<f64> {
        Ok(self
            .chart
            .sample(self.t.iter().flatten().flatten())?
            .max_abs())
    }
}

fn var(k: usize) -> Var {
    if k == 0 {
        Var::X
    } else {
        Var::Y
    }
}

/// Christoffel symbols of the Levi-Civita connection,
/// `Γⁱₖⱼ = ½ gⁱˡ (∂ₖ gₗⱼ + ∂ⱼ gₗₖ − ∂ₗ gₖⱼ)`.
pub fn christoffel(g: &RiemannianMetric2D) -> Christoffel {
    let gm = g.g.entries();
    let inv = gm.inverse();
    let dg: [Mat2<Expr>; 2] = [0, 1].map(|k| gm.map(|e| e.diff(var(k))));
    let half = Expr::constant(0.5);
    std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            std::array::from_fn(|j| {
                let lowered = |l: usize| {
                    dg[k].get(l, j).clone() + dg[j].get(l, k).clone() - dg[l].get(k, j).clone()
                };
                &half * &(inv.get(i, 0).clone() * lowered(0) + inv.get(i, 1).clone() * lowered(1))
            })
        })
    })
}

/// Connection matrix `θⁱⱼ = Γⁱₖⱼ dxᵏ`.
pub fn connection_from_christoffel(gamma: &Christoffel, chart: Chart) -> ConnectionMatrix {
    ConnectionMatrix::new(
        Mat2::from_fn(|i, j| OneForm::new(gamma[i][0][j].clone(), gamma[i][1][j].clone())),
        chart,
    )
}

/// Reads `Γⁱₖⱼ` off a coordinate-frame connection matrix.
pub fn christoffel_of(theta: &ConnectionMatrix) -> Christoffel {
    std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            std::array::from_fn(|j| {
                theta
                    .entry(i, j)
                    .coeff(if k == 0 { Axis::X } else { Axis::Y })
                    .clone()
            })
        })
    })
}

pub fn levi_civita(g: &RiemannianMetric2D) -> ConnectionMatrix {
    connection_from_christoffel(&christoffel(g), *g.chart())
}

/// `∇̃_X Y = ∇_X Y + u(Y) X − g(X, Y) u♯`, i.e.
/// `Γ̃ⁱₖⱼ = Γⁱₖⱼ + uⱼ δⁱₖ − gₖⱼ (u♯)ⁱ`.
pub fn semi_symmetric(g: &RiemannianMetric2D, u: &OneForm) -> ConnectionMatrix {
    let gm = g.g.entries();
    let inv = gm.inverse();
    let uc = [u.dx.clone(), u.dy.clone()];
    let sharp: [Expr; 2] = std::array::from_fn(|i| {
        inv.get(i, 0).clone() * uc[0].clone() + inv.get(i, 1).clone() * uc[1].clone()
    });
    let lc = christoffel(g);
    let gamma: Christoffel = std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            std::array::from_fn(|j| {
                let mut v = lc[i][k][j].clone();
                if i == k {
                    v = v + uc[j].clone();
                }
                v - gm.get(k, j).clone() * sharp[i].clone()
            })
        })
    });
    connection_from_christoffel(&gamma, *g.chart())
}

/// Torsion of a coordinate-frame connection.
pub fn torsion(theta: &ConnectionMatrix) -> TorsionField {
    let gamma = christoffel_of(theta);
    TorsionField {
        t: std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| gamma[k][i][j].clone() - gamma[k][j][i].clone())
            })
        }),
        chart: *theta.chart(),
    }
}

/// `max |Tᵏᵢⱼ − (uⱼ δᵏᵢ − uᵢ δᵏⱼ)|` on the grid.
pub fn torsion_formula_residual(theta: &ConnectionMatrix, u: &OneForm) -> Result<f64> {
    let t = torsion(theta);
    let uc = [&u.dx, &u.dy];
    let mut diffs = Vec::with_capacity(8);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut d = t.t[k][i][j].clone();
                if k == i {
                    d = d - uc[j].clone();
                }
                if k == j {
                    d = d + uc[i].clone();
                }
                diffs.push(d);
            }
        }
    }
    Ok(theta.chart().sample(&diffs)?.max_abs())
}

/// `θ = [[dx, 0], [0, 0]]` on the torus `[0, 2π]²`: flat, symmetric, with
/// local parallel metrics `diag(c·e^{2x}, c')` but no global one.
pub fn torus_example() -> ConnectionMatrix {
    torus_example_on(Chart::torus())
}

pub fn torus_example_on(chart: Chart) -> ConnectionMatrix {
    ConnectionMatrix::new(
        Mat2::new(
            OneForm::dx(),
            OneForm::zero(),
            OneForm::zero(),
            OneForm::zero(),
        ),
        chart,
    )
}

/// `diag(1, e^{2x})` on `x ∈ [−1, 1]`, `y ∈ [0, 2π]` (periodic in y).
pub fn hyperbolic_band() -> RiemannianMetric2D {
    let chart = Chart::new(
        (-1.0, 1.0),
        (0.0, TAU),
        (false, true),
        (crate::grid::DEFAULT_GRID, crate::grid::DEFAULT_GRID),
    )
    .expect("valid chart");
    hyperbolic_band_on(chart)
}

pub fn hyperbolic_band_on(chart: Chart) -> RiemannianMetric2D {
    let g = MetricField::new(Expr::one(), Expr::zero(), (Expr::x() * 2.0).exp(), chart);
    RiemannianMetric2D::new(g).expect("diag(1, e^2x) is positive definite")
}

/// The one-form used with the hyperbolic band in the semi-symmetric example.
pub fn semi_symmetric_form() -> OneForm {
    OneForm::new(Expr::constant(0.3), Expr::zero())
}

/// Ratio `G₁₁(end) / G₁₁(start)` after transporting `G = I` along x over
/// the full x-range from `(x₀, y)`.
pub fn transport_growth(theta: &ConnectionMatrix, y: f64, steps: usize) -> Result<f64> {
    let chart = theta.chart();
    let (a, b) = chart.x_range();
    let g = transport_metric(theta, Mat2::identity(), (a, y), Axis::X, b - a, steps)?;
    Ok(g.0[0][0])
}

/// Named gallery entry.
#[derive(Debug, Clone)]
pub enum Example {
    Torus(ConnectionMatrix),
    HyperbolicBand(RiemannianMetric2D),
    SemiSymmetric(RiemannianMetric2D, OneForm),
}

pub fn by_name(name: &str) -> Option<Example> {
    match name.replace('-', "_").as_str() {
        "torus" => Some(Example::Torus(torus_example())),
        "hyperbolic_band" => Some(Example::HyperbolicBand(hyperbolic_band())),
        "semi_symmetric" => Some(Example::SemiSymmetric(
            hyperbolic_band(),
            semi_symmetric_form(),
        )),
        _ => None,
    }
}
