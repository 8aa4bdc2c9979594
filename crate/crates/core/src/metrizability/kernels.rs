//! Closed-form 2×2 kernels behind the metrizability test.
//!
//! Each formula is generic over [`Scalar`], so the same code produces
//! pointwise numbers and symbolic fields.

use crate::error::{Error, Result};
use crate::mat::{symplectic, Mat2, Scalar};

/// Outcome of the "purely imaginary, nonzero eigenvalues" test at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenTest {
    pub passes: bool,
    pub trace: f64,
    pub det: f64,
    /// `max |Uᵢⱼ|`, the scale the margins are measured against.
    pub scale: f64,
}

/// A real 2×2 matrix has purely imaginary nonzero eigenvalues iff
/// `tr U = 0` and `det U > 0`. Both are tested relative to `max |Uᵢⱼ|`.
pub fn imaginary_eigentest(u: &Mat2<f64>, trace_tol: f64, det_tol: f64) -> EigenTest {
    let scale = u.max_abs();
    let trace = u.trace();
    let det = u.det();
    let passes = scale > 0.0 && trace.abs() <= trace_tol * scale && det >= det_tol * scale * scale;
    EigenTest {
        passes,
        trace,
        det,
        scale,
    }
}

/// Splits `U` as `[[a, b], [c, −a]]` plus a multiple of the identity.
fn traceless_parts<T: Scalar>(u: &Mat2<T>) -> (T, T, T) {
    let [[u11, b], [c, u22]] = u.0.clone();
    ((u11 - u22) * T::from_f64(0.5), b, c)
}

/// The traceless part `U − (tr U / 2) I`.
pub fn traceless<T: Scalar>(u: &Mat2<T>) -> Mat2<T> {
    let (a, b, c) = traceless_parts(u);
    Mat2::new(a.clone(), b, c, -a)
}

/// Symmetric positive definite `S` with `US + SUᵀ = 0` and `det S = 1`.
///
/// With `U = [[a, b], [c, −a]]` and `r = sqrt(−(a² + bc))` the solution is
/// `S = (σ/r) [[b, −a], [−a, −c]]`, where `σ = ±1` must match the sign of
/// `b` for `S` to be positive definite.
pub fn skew_symmetrizer<T: Scalar>(u: &Mat2<T>, sign: f64) -> Mat2<T> {
    let (a, b, c) = traceless_parts(u);
    let r = (-(a.clone() * a.clone() + b.clone() * c.clone())).sqrt();
    let k = T::from_f64(sign) / r;
    Mat2::symmetric(k.clone() * b, -(k.clone() * a), -(k * c))
}

/// The symmetric positive definite square root of an SPD matrix with unit
/// determinant: `A = (S + I) / sqrt(tr S + 2)`.
pub fn sqrt_spd<T: Scalar>(s: &Mat2<T>) -> Mat2<T> {
    let norm = (s.trace() + T::from_f64(2.0)).sqrt();
    let shifted = s + &Mat2::identity();
    shifted.map(|v| v.clone() / norm.clone())
}

/// Gram matrix of the metric making `e·sqrt(S)` orthonormal: `S⁻¹`, which is
/// the adjugate when `det S = 1`.
pub fn metric_from_symmetrizer<T: Scalar>(s: &Mat2<T>) -> Mat2<T> {
    let [[a, b], [_, d]] = s.0.clone();
    Mat2::symmetric(d, -b, a)
}

/// Pointwise symmetrizer; the sign is taken from `U₁₂`.
pub fn solve_skew_symmetrizer_at(u: &Mat2<f64>, trace_tol: f64, det_tol: f64) -> Result<Mat2<f64>> {
    let t = imaginary_eigentest(u, trace_tol, det_tol);
    if !t.passes {
        return Err(Error::Precondition(format!(
            "U needs tr = 0 and det > 0 (tr {:e}, det {:e})",
            t.trace, t.det
        )));
    }
    Ok(skew_symmetrizer(u, u.0[0][1].signum()))
}

/// Pointwise square root; `S` must be SPD with `|det S − 1| ≤ det_tol`.
pub fn sqrt_spd_at(s: &Mat2<f64>, det_tol: f64) -> Result<Mat2<f64>> {
    if !(s.0[0][1] - s.0[1][0])
        .abs()
        .le(&(det_tol * (1.0 + s.max_abs())))
        || !s.is_positive_definite()
    {
        return Err(Error::Precondition(
            "S is not symmetric positive definite".into(),
        ));
    }
    if !((s.det() - 1.0).abs() <= det_tol) {
        return Err(Error::Precondition(format!("det S = {} is not 1", s.det())));
    }
    Ok(sqrt_spd(s))
}

/// `‖XJX⁻¹ − XXᵀJ‖∞` for `det X = 1`.
pub fn lemma_identity_residual(x: &Mat2<f64>) -> Result<f64> {
    if !((x.det() - 1.0).abs() <= 1e-12) {
        return Err(Error::Precondition(format!("det X = {} is not 1", x.det())));
    }
    let j = symplectic();
    let lhs = &(x * &j) * &x.inverse();
    let rhs = &(x * &x.transpose()) * &j;
    Ok((&lhs - &rhs).norm_inf())
}

fn skew_defect(m: &Mat2<f64>) -> f64 {
    (m + &m.transpose()).max_abs()
}

/// `‖(A⁻¹B)(A⁻¹B)ᵀ − I‖∞` for two unit-determinant matrices that both
/// conjugate `U` to a skew matrix; the transition `A⁻¹B` must be orthogonal.
pub fn transition_orthogonality(a: &Mat2<f64>, b: &Mat2<f64>, u: &Mat2<f64>) -> Result<f64> {
    for (name, m) in [("A", a), ("B", b)] {
        if !((m.det() - 1.0).abs() <= 1e-10) {
            return Err(Error::Precondition(format!(
                "det {name} = {} is not 1",
                m.det()
            )));
        }
        let conj = &(&m.inverse() * u) * m;
        if !(skew_defect(&conj) <= 1e-10 * (1.0 + conj.max_abs())) {
            return Err(Error::Precondition(format!(
                "{name}⁻¹UA is not skew (defect {:e})",
                skew_defect(&conj)
            )));
        }
    }
    let s = &a.inverse() * b;
    Ok((&(&s * &s.transpose()) - &Mat2::identity()).norm_inf())
}
