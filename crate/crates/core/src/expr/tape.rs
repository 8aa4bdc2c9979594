use std::collections::HashMap;

use super::{checked_pow, BinOp, DomainError, DomainErrorKind, Expr, Func, Node, Var};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    X,
    Y,
    Neg(u32),
    Func(Func, u32),
    Binary(BinOp, u32, u32),
    Pow(u32, f64),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Var(Var),
    Neg(u32),
    Func(Func, u32),
    Binary(BinOp, u32, u32),
    Pow(u32, u64),
}

/// A batch of expressions compiled to one instruction list with common
/// sub-expressions merged. Evaluating the tape at a point costs one step per
/// distinct node, however often the node is shared.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    // the source node behind each op, kept for error messages
    sources: Vec<Expr>,
}

struct Compiler {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    by_ptr: HashMap<*const Node, u32>,
    by_key: HashMap<Key, u32>,
}

impl Compiler {
    fn emit(&mut self, e: &Expr) -> u32 {
        if let Some(&slot) = self.by_ptr.get(&e.ptr()) {
            return slot;
        }
        let (op, key) = match e.node() {
            Node::Const(c) => (Op::Const(*c), Key::Const(c.to_bits())),
            Node::Var(Var::X) => (Op::X, Key::Var(Var::X)),
            Node::Var(Var::Y) => (Op::Y, Key::Var(Var::Y)),
            Node::Neg(a) => {
                let a = self.emit(a);
                (Op::Neg(a), Key::Neg(a))
            }
            Node::Func(f, a) => {
                let a = self.emit(a);
                (Op::Func(*f, a), Key::Func(*f, a))
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                (Op::Binary(*op, a, b), Key::Binary(*op, a, b))
            }
            Node::Pow(a, n) => {
                let a = self.emit(a);
                (Op::Pow(a, *n), Key::Pow(a, n.to_bits()))
            }
        };
        let slot = match self.by_key.get(&key) {
            Some(&slot) => slot,
            None => {
                let slot = self.ops.len() as u32;
                self.ops.push(op);
                self.sources.push(e.clone());
                self.by_key.insert(key, slot);
                slot
            }
        };
        self.by_ptr.insert(e.ptr(), slot);
        slot
    }
}

impl Tape {
    pub fn new<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Tape {
        let mut c = Compiler {
            ops: Vec::new(),
            sources: Vec::new(),
            by_ptr: HashMap::new(),
            by_key: HashMap::new(),
        };
        let outputs = exprs.into_iter().map(|e| c.emit(e)).collect();
        Tape {
            ops: c.ops,
            outputs,
            sources: c.sources,
        }
    }

    /// Number of distinct instructions.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates every output at `(x, y)`, writing them to `out`.
    /// `scratch` is reused between calls to avoid allocation.
    pub fn eval_into(
        &self,
        x: f64,
        y: f64,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<(), DomainError> {
        scratch.clear();
        scratch.reserve(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let r = |s: u32| scratch[s as usize];
            let v = match *op {
                Op::Const(c) => c,
                Op::X => x,
                Op::Y => y,
                Op::Neg(a) => -r(a),
                Op::Func(f, a) => match f.apply(r(a)) {
                    Some(v) => v,
                    None => return Err(self.fail(i, x, y, DomainErrorKind::of_func(f))),
                },
                Op::Binary(op, a, b) => match op {
                    BinOp::Add => r(a) + r(b),
                    BinOp::Sub => r(a) - r(b),
                    BinOp::Mul => r(a) * r(b),
                    BinOp::Div => {
                        let d = r(b);
                        if d == 0.0 {
                            return Err(self.fail(i, x, y, DomainErrorKind::DivisionByZero));
                        }
                        r(a) / d
                    }
                },
                Op::Pow(a, n) => {
                    let base = r(a);
                    match checked_pow(base, n) {
                        Some(v) => v,
                        None => {
                            let kind = if base == 0.0 {
                                DomainErrorKind::DivisionByZero
                            } else {
                                DomainErrorKind::InvalidPower
                            };
                            return Err(self.fail(i, x, y, kind));
                        }
                    }
                }
            };
            scratch.push(v);
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[slot as usize];
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<Vec<f64>, DomainError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(x, y, &mut scratch, &mut out)?;
        Ok(out)
    }

    fn fail(&self, i: usize, x: f64, y: f64, kind: DomainErrorKind) -> DomainError {
        let mut node = self.sources[i].to_string();
        if node.len() > 200 {
            node.truncate(200);
            node.push_str("...");
        }
        DomainError { x, y, kind, node }
    }
}
