//! A small, total expression language for scalar fields on J¹(T,M).
//!
//! Grammar (indices 1-based in source, 0-based in the AST):
//!
//! ```text
//! expr  := term (("+"|"-") term)*
//! term  := unary (("*"|"/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | coord | call | "(" expr ")"
//! coord := "t" "[" int "]" | "x" "[" int "]" | "xs" "[" int "]" "[" int "]"
//! call  := ident "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and is
//! right-associative.

mod eval;
mod parse;

use std::fmt;

pub use eval::EvalError;
pub use parse::ParseError;

use crate::jet::{Coord, Dims, Family};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] =
        [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Sqrt, Func::Tanh, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Num(f64),
    Coord(Coord),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An AST node and the byte offset it came from.
#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub pos: usize,
}

/// Structural equality; source positions are ignored.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Num(a), NodeKind::Num(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Coord(a), NodeKind::Coord(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a == b,
            (NodeKind::Bin(o1, l1, r1), NodeKind::Bin(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (NodeKind::Call(f1, a1), NodeKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Node {
    fn precedence(&self) -> u8 {
        match &self.kind {
            NodeKind::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            NodeKind::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            NodeKind::Neg(_) => 3,
            NodeKind::Bin(BinOp::Pow, ..) => 4,
            NodeKind::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match &self.kind {
            NodeKind::Num(v) => write!(f, "{v:?}")?,
            NodeKind::Coord(c) => write!(f, "{c}")?,
            NodeKind::Neg(e) => {
                f.write_str("-")?;
                e.write_at(f, 3)?;
            }
            NodeKind::Bin(op, l, r) => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                l.write_at(f, lp)?;
                match op {
                    BinOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                r.write_at(f, rp)?;
            }
            NodeKind::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    fn visit<'a>(&'a self, out: &mut impl FnMut(&'a Node)) {
        out(self);
        match &self.kind {
            NodeKind::Num(_) | NodeKind::Coord(_) => {}
            NodeKind::Neg(e) | NodeKind::Call(_, e) => e.visit(out),
            NodeKind::Bin(_, l, r) => {
                l.visit(out);
                r.visit(out);
            }
        }
    }

    fn is_constant(&self) -> bool {
        let mut constant = true;
        self.visit(&mut |n| {
            if matches!(n.kind, NodeKind::Coord(_)) {
                constant = false;
            }
        });
        constant
    }
}

/// Set of coordinate families a field may depend on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Deps {
    pub t: bool,
    pub x: bool,
    pub xs: bool,
}

impl Deps {
    pub const NONE: Deps = Deps { t: false, x: false, xs: false };
    pub const T: Deps = Deps { t: true, x: false, xs: false };
    pub const X: Deps = Deps { t: false, x: true, xs: false };
    pub const TX: Deps = Deps { t: true, x: true, xs: false };
    pub const ALL: Deps = Deps { t: true, x: true, xs: true };

    pub fn contains(&self, fam: Family) -> bool {
        match fam {
            Family::T => self.t,
            Family::X => self.x,
            Family::Xs => self.xs,
        }
    }

    pub fn union(self, o: Deps) -> Deps {
        Deps { t: self.t || o.t, x: self.x || o.x, xs: self.xs || o.xs }
    }

    pub fn is_subset(&self, o: &Deps) -> bool {
        (!self.t || o.t) && (!self.x || o.x) && (!self.xs || o.xs)
    }
}

impl fmt::Display for Deps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.t, "t"), (self.x, "x"), (self.xs, "xs")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, s)| *s)
            .collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// A coordinate reference outside the declared dependency set.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub pos: usize,
    pub coord: Coord,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.coord, self.pos)
    }
}

/// A parsed, bounds-checked scalar field expression.
#[derive(Clone, Debug)]
pub struct ExprAst {
    pub root: Node,
    dims: Dims,
}

impl PartialEq for ExprAst {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.root == other.root
    }
}

impl ExprAst {
    pub fn parse(src: &str, dims: Dims) -> Result<Self, ParseError> {
        parse_field(src, dims)
    }

    pub fn constant(v: f64, dims: Dims) -> Self {
        ExprAst { root: Node { kind: NodeKind::Num(v), pos: 0 }, dims }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Families actually referenced.
    pub fn deps(&self) -> Deps {
        let mut d = Deps::NONE;
        self.root.visit(&mut |n| {
            if let NodeKind::Coord(c) = n.kind {
                match c.family() {
                    Family::T => d.t = true,
                    Family::X => d.x = true,
                    Family::Xs => d.xs = true,
                }
            }
        });
        d
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// Canonical source text; reparses to a structurally equal AST.
    pub fn to_source(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write_at(f, 0)
    }
}

/// Parse `src` into a validated AST for dimensions `dims`.
pub fn parse_field(src: &str, dims: Dims) -> Result<ExprAst, ParseError> {
    let root = parse::Parser::new(src, dims).parse()?;
    Ok(ExprAst { root, dims })
}

/// Every coordinate reference whose family is outside `declared`.
pub fn validate_field(ast: &ExprAst, declared: Deps) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    ast.root.visit(&mut |n| {
        if let NodeKind::Coord(c) = n.kind {
            if !declared.contains(c.family()) {
                out.push(Violation { pos: n.pos, coord: c });
            }
        }
    });
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d22() -> Dims {
        Dims::new(2, 2)
    }

    #[test]
    fn deps_are_collected() {
        let e = parse_field("t[1] + x[2]*xs[1][2]", d22()).unwrap();
        assert_eq!(e.deps(), Deps::ALL);
        assert_eq!(parse_field("3", d22()).unwrap().deps(), Deps::NONE);
        assert!(parse_field("exp(2)", d22()).unwrap().is_constant());
    }

    #[test]
    fn validate_reports_each_offender() {
        let e = parse_field("t[1]+t[2]", d22()).unwrap();
        assert!(validate_field(&e, Deps::T).is_ok());
        let e = parse_field("x[1]", d22()).unwrap();
        let v = validate_field(&e, Deps::T).unwrap_err();
        assert_eq!(v, vec![Violation { pos: 0, coord: Coord::X(0) }]);
        let e = parse_field("t[1] * x[2] + xs[2][1]", d22()).unwrap();
        let v = validate_field(&e, Deps::T).unwrap_err();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].pos, 7);
        assert_eq!(v[1].coord, Coord::Xs(1, 0));
    }

    #[test]
    fn printing_is_minimal_and_faithful() {
        let cases = [
            ("1+2*3", "1.0 + 2.0 * 3.0"),
            ("(1+2)*3", "(1.0 + 2.0) * 3.0"),
            ("1-(2-3)", "1.0 - (2.0 - 3.0)"),
            ("-x[1]^2", "-x[1]^2.0"),
            ("(-x[1])^2", "(-x[1])^2.0"),
            ("2^3^2", "2.0^3.0^2.0"),
            ("(2^3)^2", "(2.0^3.0)^2.0"),
            ("2^-1", "2.0^-1.0"),
            ("exp(2*t[1]*x[1])", "exp(2.0 * t[1] * x[1])"),
            ("a(1)", ""),
        ];
        for (src, want) in cases {
            match parse_field(src, d22()) {
                Ok(e) => assert_eq!(e.to_source(), want, "{src}"),
                Err(_) => assert!(want.is_empty(), "{src}"),
            }
        }
    }
}
