//! Fixed 2×2 matrices over numbers or symbolic expressions.
//!
//! Formulas written against [`Scalar`] run unchanged on `f64` (pointwise
//! numerics) and on [`Expr`] (closed-form symbolic fields).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::Expr;

pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Scalar for Expr {
    fn from_f64(v: f64) -> Self {
        Expr::constant(v)
    }

    fn sqrt(self) -> Self {
        Expr::sqrt(self)
    }
}

/// Row-major 2×2 matrix. Indices are zero-based.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Mat2([[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]])
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.0[i][j]
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat2<U> {
        Mat2::from_fn(|i, j| f(&self.0[i][j]))
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter().flatten()
    }
}

impl<T: Clone> Mat2<T> {
    pub fn transpose(&self) -> Self {
        Mat2::from_fn(|i, j| self.0[j][i].clone())
    }

    pub fn symmetric(diag0: T, off: T, diag1: T) -> Self {
        Mat2([[diag0, off.clone()], [off, diag1]])
    }
}

impl<T: Scalar> Mat2<T> {
    pub fn identity() -> Self {
        Mat2::from_fn(|i, j| T::from_f64(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn zeros() -> Self {
        Mat2::from_fn(|_, _| T::zero())
    }

    pub fn diag(a: T, b: T) -> Self {
        Mat2::new(a, T::zero(), T::zero(), b)
    }

    pub fn det(&self) -> T {
        let [[a, b], [c, d]] = self.0.clone();
        a * d - b * c
    }

    pub fn trace(&self) -> T {
        self.0[0][0].clone() + self.0[1][1].clone()
    }

    /// Adjugate; equals the inverse when `det = 1`.
    pub fn adjugate(&self) -> Self {
        let [[a, b], [c, d]] = self.0.clone();
        Mat2::new(d, -b, -c, a)
    }

    /// Inverse via the adjugate. The caller is responsible for `det ≠ 0`.
    pub fn inverse(&self) -> Self {
        let det = self.det();
        self.adjugate().map(|v| v.clone() / det.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Mat2::from_fn(|i, j| {
            self.0[i][0].clone() * rhs.0[0][j].clone() + self.0[i][1].clone() * rhs.0[1][j].clone()
        })
    }
}

impl<T: Scalar> Add for &Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, rhs: Self) -> Mat2<T> {
        Mat2::from_fn(|i, j| self.0[i][j].clone() + rhs.0[i][j].clone())
    }
}

impl<T: Scalar> Sub for &Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, rhs: Self) -> Mat2<T> {
        Mat2::from_fn(|i, j| self.0[i][j].clone() - rhs.0[i][j].clone())
    }
}

impl<T: Scalar> Mul for &Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, rhs: Self) -> Mat2<T> {
        self.matmul(rhs)
    }
}

impl Mat2<f64> {
    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .map(|row| row[0].abs() + row[1].abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// Leading-minor test.
    pub fn is_positive_definite(&self) -> bool {
        self.0[0][0] > 0.0 && self.det() > 0.0
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }
}

impl Mat2<Expr> {
    pub fn eval(&self, x: f64, y: f64) -> Result<Mat2<f64>, crate::expr::DomainError> {
        let [[a, b], [c, d]] = &self.0;
        Ok(Mat2::new(
            a.eval(x, y)?,
            b.eval(x, y)?,
            c.eval(x, y)?,
            d.eval(x, y)?,
        ))
    }
}

/// The standard symplectic matrix `[[0, 1], [-1, 0]]`.
pub fn symplectic() -> Mat2<f64> {
    Mat2::new(0.0, 1.0, -1.0, 0.0)
}

impl<T: fmt::Debug> fmt::Debug for Mat2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_basics() {
        let m = Mat2::new(2.0, 1.0, 1.0, 3.0);
        assert_eq!(m.det(), 5.0);
        assert_eq!(m.trace(), 5.0);
        let prod = &m * &m.inverse();
        assert!((&prod - &Mat2::identity()).max_abs() < 1e-15);
        assert!(m.is_positive_definite());
        assert_eq!(m.norm_inf(), 4.0);
    }

    #[test]
    fn symbolic_matches_numeric() {
        let m: Mat2<Expr> = Mat2::new(Expr::x(), Expr::one(), Expr::y(), Expr::x() * Expr::y());
        let d = m.det();
        assert_eq!(d.eval(2.0, 3.0).unwrap(), 2.0 * 6.0 - 3.0);
        let inv = m.inverse().eval(2.0, 3.0).unwrap();
        let num = m.eval(2.0, 3.0).unwrap().inverse();
        assert!((&inv - &num).max_abs() < 1e-15);
    }
}
