use super::{BinOp, ExprAst, Func, Node, NodeKind};
use crate::jet::JetPoint;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error at byte {pos}: {message}")]
    Domain { pos: usize, message: String },
    #[error("point has dimensions {got:?}, expression expects {want:?}")]
    Dims { got: (usize, usize), want: (usize, usize) },
    /// Failure inside a derived (non-expression) field.
    #[error("{0}")]
    Field(String),
}

fn domain(pos: usize, message: impl Into<String>) -> EvalError {
    EvalError::Domain { pos, message: message.into() }
}

impl ExprAst {
    /// Evaluate at `pt`; derivative layers of `S` propagate exactly.
    pub fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S, EvalError> {
        let d = pt.dims();
        if d != self.dims() {
            return Err(EvalError::Dims {
                got: (d.p, d.n),
                want: (self.dims().p, self.dims().n),
            });
        }
        eval_node(&self.root, pt)
    }
}

fn finite<S: Scalar>(v: S, node: &Node, what: &str) -> Result<S, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(node.pos, format!("{what} is not finite")))
    }
}

fn eval_node<S: Scalar>(node: &Node, pt: &JetPoint<S>) -> Result<S, EvalError> {
    match &node.kind {
        NodeKind::Num(v) => Ok(S::cst(*v)),
        NodeKind::Coord(c) => Ok(pt.get(*c)),
        NodeKind::Neg(e) => Ok(-eval_node(e, pt)?),
        NodeKind::Bin(op, l, r) => {
            let a = eval_node(l, pt)?;
            match op {
                BinOp::Add => Ok(a + eval_node(r, pt)?),
                BinOp::Sub => Ok(a - eval_node(r, pt)?),
                BinOp::Mul => finite(a * eval_node(r, pt)?, node, "product"),
                BinOp::Div => {
                    let b = eval_node(r, pt)?;
                    if b.re() == 0.0 {
                        return Err(domain(node.pos, "division by zero"));
                    }
                    finite(a / b, node, "quotient")
                }
                BinOp::Pow => pow(node, a, r, pt),
            }
        }
        NodeKind::Call(func, arg) => {
            let a = eval_node(arg, pt)?;
            let v = match func {
                Func::Exp => a.exp(),
                Func::Log => {
                    if a.re() <= 0.0 {
                        return Err(domain(node.pos, format!("log of non-positive value {}", a.re())));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a.re() < 0.0 {
                        return Err(domain(node.pos, format!("sqrt of negative value {}", a.re())));
                    }
                    a.sqrt()
                }
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tanh => a.tanh(),
                Func::Abs => a.abs(),
            };
            finite(v, node, func.name())
        }
    }
}

fn pow<S: Scalar>(node: &Node, base: S, exp_node: &Node, pt: &JetPoint<S>) -> Result<S, EvalError> {
    let e = eval_node(exp_node, pt)?;
    if exp_node.is_constant() {
        let k = e.re();
        if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
            if k < 0.0 && base.re() == 0.0 {
                return Err(domain(node.pos, "zero raised to a negative power"));
            }
            return finite(base.powi(k as i32), node, "power");
        }
    }
    if base.re() < 0.0 {
        return Err(domain(node.pos, "negative base with non-integer exponent"));
    }
    if base.re() == 0.0 {
        return Err(domain(node.pos, "zero base with non-constant or fractional exponent"));
    }
    finite((e * base.ln()).exp(), node, "power")
}
