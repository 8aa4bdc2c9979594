use std::collections::HashMap;

use super::{BinOp, Expr, Func, Node, Node::*, Var};

/// Symbolic partial derivative. Results are memoized per shared node so the
/// derivative of a DAG stays proportional to the DAG, not to its tree size.
pub(super) fn differentiate(e: &Expr, v: Var) -> Expr {
    let mut memo = HashMap::new();
    go(e, v, &mut memo)
}

fn go(e: &Expr, v: Var, memo: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr()) {
        return d.clone();
    }
    let d = match e.node() {
        Const(_) => Expr::zero(),
        Var(w) => Expr::constant(if *w == v { 1.0 } else { 0.0 }),
        Neg(a) => -go(a, v, memo),
        Func(f, a) => {
            let da = go(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match f {
                    Func::Sin => a.clone().cos(),
                    Func::Cos => -a.clone().sin(),
                    Func::Tan => 1.0 / a.clone().cos().powf(2.0),
                    Func::Exp => e.clone(),
                    Func::Ln => 1.0 / a,
                    Func::Sqrt => 0.5 / e,
                    Func::Sinh => a.clone().cosh(),
                    Func::Cosh => a.clone().sinh(),
                };
                outer * da
            }
        }
        Binary(op, a, b) => {
            let (da, db) = (go(a, v, memo), go(b, v, memo));
            match op {
                BinOp::Add => da + db,
                BinOp::Sub => da - db,
                BinOp::Mul => da * b + a * db,
                BinOp::Div => {
                    if db.is_zero() {
                        da / b
                    } else {
                        (da * b - a * db) / b.clone().powf(2.0)
                    }
                }
            }
        }
        Pow(a, n) => {
            let da = go(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                *n * a.clone().powf(n - 1.0) * da
            }
        }
    };
    memo.insert(e.ptr(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr, Var};

    fn d(s: &str, v: Var) -> Expr {
        parse(s).unwrap().diff(v)
    }

    #[test]
    fn textbook_cases() {
        assert_eq!(d("x*y", Var::X), Expr::y());
        assert_eq!(d("sin(x)", Var::X).to_string(), "cos(x)");
        let e = d("exp(2*y)", Var::Y);
        for y in [-1.0f64, 0.0, 0.7] {
            let want = 2.0 * (2.0 * y).exp();
            assert!((e.eval(0.0, y).unwrap() - want).abs() < 1e-14 * want.abs().max(1.0));
        }
    }

    #[test]
    fn derivative_of_constant_is_folded() {
        assert!(d("sin(pi/3) + 4", Var::X).is_zero());
        assert!(d("y^3", Var::X).is_zero());
    }

    #[test]
    fn every_function_rule() {
        type Rule = (&'static str, fn(f64) -> f64);
        let cases: &[Rule] = &[
            ("sin(x)", |x| x.cos()),
            ("cos(x)", |x| -x.sin()),
            ("tan(x)", |x| 1.0 / x.cos().powi(2)),
            ("exp(x)", |x| x.exp()),
            ("ln(x)", |x| 1.0 / x),
            ("sqrt(x)", |x| 0.5 / x.sqrt()),
            ("sinh(x)", |x| x.cosh()),
            ("cosh(x)", |x| x.sinh()),
            ("x^2.5", |x| 2.5 * x.powf(1.5)),
            ("1/x", |x| -1.0 / (x * x)),
        ];
        for (s, want) in cases {
            let e = d(s, Var::X);
            for &x in &[0.3, 0.9, 1.4] {
                let got = e.eval(x, 0.0).unwrap();
                assert!((got - want(x)).abs() < 1e-13, "{s} at {x}: {got}");
            }
        }
    }
}
