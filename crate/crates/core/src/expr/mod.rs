//! Symbolic scalar expressions in the two chart coordinates `x` and `y`.
//!
//! Expressions are immutable, reference-counted trees. Sub-expressions are
//! shared freely, so an [`Expr`] is really a DAG; [`Tape`] compiles one or
//! more expressions into a deduplicated instruction list for fast repeated
//! evaluation over a grid.
//!
//! Simplification is deliberately shallow: the smart constructors fold
//! constants, absorb `0` and `1`, and cancel double negation. Nothing else is
//! rewritten.

mod diff;
mod parse;
mod tape;

use std::f64::consts::{E, PI};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use parse::{parse, ParseError};
pub use tape::Tape;

/// A chart coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::Y => "y",
        })
    }
}

/// Elementary functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function, returning `None` outside its domain.
    pub fn apply(self, v: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(v.sin()),
            Func::Cos => Some(v.cos()),
            Func::Tan => Some(v.tan()),
            Func::Exp => Some(v.exp()),
            Func::Ln => (v > 0.0).then(|| v.ln()),
            Func::Sqrt => (v >= 0.0).then(|| v.sqrt()),
            Func::Sinh => Some(v.sinh()),
            Func::Cosh => Some(v.cosh()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn apply(self, a: f64, b: f64) -> Option<f64> {
        match self {
            BinOp::Add => Some(a + b),
            BinOp::Sub => Some(a - b),
            BinOp::Mul => Some(a * b),
            BinOp::Div => (b != 0.0).then(|| a / b),
        }
    }
}

/// Evaluates `base^exponent` under the grammar's rules: integer exponents
/// work for any base (except `0` with a negative exponent), anything else
/// needs a strictly positive base.
pub(crate) fn checked_pow(base: f64, exponent: f64) -> Option<f64> {
    if exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return None;
        }
        Some(base.powi(exponent as i32))
    } else if base > 0.0 {
        Some((exponent * base.ln()).exp())
    } else {
        None
    }
}

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Expr),
    Func(Func, Expr),
    Binary(BinOp, Expr, Expr),
    /// Power with a constant exponent.
    Pow(Expr, f64),
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

/// Evaluation failure: the point and the offending sub-expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at ({x}, {y}) in `{node}`")]
pub struct DomainError {
    pub x: f64,
    pub y: f64,
    pub kind: DomainErrorKind,
    pub node: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    InvalidPower,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainErrorKind::SqrtOfNegative => "square root of a negative value",
            DomainErrorKind::InvalidPower => "non-integer power of a non-positive base",
        })
    }
}

impl DomainErrorKind {
    pub(crate) fn of_func(f: Func) -> Self {
        match f {
            Func::Ln => DomainErrorKind::LogOfNonPositive,
            _ => DomainErrorKind::SqrtOfNegative,
        }
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(v: f64) -> Self {
        Expr::from_node(Node::Const(v))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn x() -> Self {
        Expr::from_node(Node::Var(Var::X))
    }

    pub fn y() -> Self {
        Expr::from_node(Node::Var(Var::Y))
    }

    pub fn var(v: Var) -> Self {
        Expr::from_node(Node::Var(v))
    }

    pub fn pi() -> Self {
        Expr::constant(PI)
    }

    pub fn euler() -> Self {
        Expr::constant(E)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Applies an elementary function, folding constant arguments.
    pub fn apply(func: Func, arg: Expr) -> Self {
        if let Some(v) = arg.as_const().and_then(|c| func.apply(c)) {
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Func(func, arg))
    }

    pub fn sin(self) -> Self {
        Expr::apply(Func::Sin, self)
    }
    pub fn cos(self) -> Self {
        Expr::apply(Func::Cos, self)
    }
    pub fn tan(self) -> Self {
        Expr::apply(Func::Tan, self)
    }
    pub fn exp(self) -> Self {
        Expr::apply(Func::Exp, self)
    }
    pub fn ln(self) -> Self {
        Expr::apply(Func::Ln, self)
    }
    pub fn sqrt(self) -> Self {
        Expr::apply(Func::Sqrt, self)
    }
    pub fn sinh(self) -> Self {
        Expr::apply(Func::Sinh, self)
    }
    pub fn cosh(self) -> Self {
        Expr::apply(Func::Cosh, self)
    }

    pub fn powf(self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Expr::one();
        }
        if exponent == 1.0 {
            return self;
        }
        if let Some(v) = self.as_const().and_then(|c| checked_pow(c, exponent)) {
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Pow(self, exponent))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        if let (Some(u), Some(v)) = (a.as_const(), b.as_const()) {
            if let Some(r) = op.apply(u, v).filter(|r| r.is_finite()) {
                return Expr::constant(r);
            }
        }
        match op {
            BinOp::Add => {
                if a.is_zero() {
                    return b;
                }
                if b.is_zero() {
                    return a;
                }
            }
            BinOp::Sub => {
                if b.is_zero() {
                    return a;
                }
                if a.is_zero() {
                    return -b;
                }
            }
            BinOp::Mul => {
                if a.is_zero() || b.is_zero() {
                    return Expr::zero();
                }
                if a.is_one() {
                    return b;
                }
                if b.is_one() {
                    return a;
                }
                if a.as_const() == Some(-1.0) {
                    return -b;
                }
                if b.as_const() == Some(-1.0) {
                    return -a;
                }
            }
            BinOp::Div => {
                if a.is_zero() && !b.is_zero() {
                    return Expr::zero();
                }
                if b.is_one() {
                    return a;
                }
            }
        }
        Expr::from_node(Node::Binary(op, a, b))
    }

    /// Evaluates at a point by direct recursion.
    ///
    /// Shared sub-expressions are re-evaluated each time they are reached;
    /// use a [`Tape`] for large DAGs or for many points.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, DomainError> {
        let fail = |kind, node: &Expr| DomainError {
            x,
            y,
            kind,
            node: node.to_string(),
        };
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(Var::X) => Ok(x),
            Node::Var(Var::Y) => Ok(y),
            Node::Neg(a) => Ok(-a.eval(x, y)?),
            Node::Func(f, a) => {
                let v = a.eval(x, y)?;
                f.apply(v)
                    .ok_or_else(|| fail(DomainErrorKind::of_func(*f), self))
            }
            Node::Binary(op, a, b) => {
                let (u, v) = (a.eval(x, y)?, b.eval(x, y)?);
                op.apply(u, v)
                    .ok_or_else(|| fail(DomainErrorKind::DivisionByZero, self))
            }
            Node::Pow(a, n) => {
                let v = a.eval(x, y)?;
                checked_pow(v, *n).ok_or_else(|| {
                    let kind = if v == 0.0 {
                        DomainErrorKind::DivisionByZero
                    } else {
                        DomainErrorKind::InvalidPower
                    };
                    fail(kind, self)
                })
            }
        }
    }

    /// Exact partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        diff::differentiate(self, v)
    }

    /// True if `v` occurs anywhere in the expression.
    pub fn depends_on(&self, v: Var) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => a.depends_on(v),
            Node::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// Number of nodes counted as a tree (shared nodes counted repeatedly),
    /// saturating at `usize::MAX`.
    pub fn tree_size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => a.tree_size().saturating_add(1),
            Node::Binary(_, a, b) => a
                .tree_size()
                .saturating_add(b.tree_size())
                .saturating_add(1),
        }
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Pow(..) => 3,
            Node::Const(c) if *c < 0.0 => 4,
            Node::Neg(_) => 4,
            _ => 5,
        }
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn fmt_number(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{}", v as i64)
    } else {
        write!(f, "{:?}", v)
    }
}

struct Wrapped<'a>(&'a Expr, u8);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    /// Prints in the input grammar; `parse(e.to_string())` evaluates the same
    /// as `e` everywhere.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if *c < 0.0 {
                    f.write_str("-")?;
                    fmt_number(-c, f)
                } else {
                    fmt_number(*c, f)
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            // A negation is itself a `base`, so its operand must be one too.
            Node::Neg(a) => write!(f, "-{}", Wrapped(a, 5)),
            Node::Func(func, a) => write!(f, "{}({})", func.name(), a),
            Node::Binary(op, a, b) => {
                let (left, right) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                };
                write!(
                    f,
                    "{} {} {}",
                    Wrapped(a, left),
                    op.symbol(),
                    Wrapped(b, right)
                )
            }
            Node::Pow(a, n) => {
                write!(f, "{}^", Wrapped(a, 5))?;
                if *n < 0.0 {
                    f.write_str("(-")?;
                    fmt_number(-n, f)?;
                    f.write_str(")")
                } else {
                    fmt_number(*n, f)
                }
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::from_node(Node::Neg(self)),
        }
    }
}

impl Neg for &Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        -self.clone()
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs)
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::constant(rhs))
            }
        }
        impl $trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self.clone(), Expr::constant(rhs))
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs)
            }
        }
        impl $trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn evaluates_simple_cases() {
        assert_eq!(p("x^2 + y").eval(2.0, 3.0).unwrap(), 7.0);
        assert_eq!(p("exp(0)").eval(5.0, -1.0).unwrap(), 1.0);
        assert_eq!(p("2").as_const(), Some(2.0));
    }

    #[test]
    fn ln_of_negative_is_domain_error() {
        let err = p("ln(x)").eval(-1.0, 0.0).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::LogOfNonPositive);
        assert_eq!(err.x, -1.0);
        assert_eq!(err.node, "ln(x)");
    }

    #[test]
    fn other_domain_errors() {
        assert_eq!(
            p("1/x").eval(0.0, 0.0).unwrap_err().kind,
            DomainErrorKind::DivisionByZero
        );
        assert_eq!(
            p("sqrt(y)").eval(0.0, -2.0).unwrap_err().kind,
            DomainErrorKind::SqrtOfNegative
        );
        assert_eq!(
            p("x^0.5").eval(-1.0, 0.0).unwrap_err().kind,
            DomainErrorKind::InvalidPower
        );
        assert_eq!(p("x^3").eval(-2.0, 0.0).unwrap(), -8.0);
    }

    #[test]
    fn smart_constructors_fold() {
        let x = Expr::x();
        assert_eq!((&x * 1.0).to_string(), "x");
        assert!((&x * 0.0).is_zero());
        assert_eq!((0.0 + &x).to_string(), "x");
        assert_eq!((-(-x.clone())).to_string(), "x");
        assert_eq!((Expr::constant(2.0) * 3.0).as_const(), Some(6.0));
        assert_eq!(Expr::constant(0.0).cos().as_const(), Some(1.0));
        // ln(-1) must stay symbolic rather than fold to NaN
        assert!(Expr::constant(-1.0).ln().as_const().is_none());
    }

    #[test]
    fn printing_respects_grammar() {
        for s in [
            "x - (y - 1)",
            "x / (y * 2)",
            "(-x)^2",
            "-(x^2)",
            "2^(-1.5)",
            "x^(-2)",
            "sin(x)*y",
            "-x*-y",
            "(x+y)^3/(1-x)",
        ] {
            let e = p(s);
            let again = parse(&e.to_string()).unwrap_or_else(|err| panic!("{s} -> {e}: {err}"));
            for &(x, y) in &[(0.3, 0.7), (1.5, -0.2), (-0.8, 2.0)] {
                let (a, b) = (e.eval(x, y), again.eval(x, y));
                assert_eq!(a, b, "{s} printed as {e}");
            }
        }
    }

    #[test]
    fn constants_are_reserved() {
        assert_eq!(p("pi").as_const(), Some(PI));
        assert_eq!(p("e").as_const(), Some(E));
    }
}
