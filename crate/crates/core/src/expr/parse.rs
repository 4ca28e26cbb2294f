use std::fmt;

use super::{BinOp, Func, Node, NodeKind};
use crate::jet::{Coord, Dims};

/// Located parse failure. `offset` is where the longest valid prefix ends.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub excerpt: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: expected {}\n{}", self.offset, self.expected, self.excerpt)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Eof => "end of input".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
        }
    }
}

pub(super) struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    dims: Dims,
    cursor: usize,
    peeked: Option<(Tok, usize, usize)>,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str, dims: Dims) -> Self {
        Parser { src, bytes: src.as_bytes(), dims, cursor: 0, peeked: None }
    }

    pub(super) fn parse(mut self) -> Result<Node, ParseError> {
        let e = self.expr()?;
        let (tok, start, _) = self.peek()?;
        if tok != Tok::Eof {
            return Err(self.error(start, "an operator or end of input"));
        }
        Ok(e)
    }

    fn error(&self, offset: usize, expected: impl Into<String>) -> ParseError {
        let line_start = self.src[..offset.min(self.src.len())].rfind('\n').map_or(0, |k| k + 1);
        let line_end = self.src[line_start..].find('\n').map_or(self.src.len(), |k| line_start + k);
        let line = &self.src[line_start..line_end];
        let col = self.src[line_start..offset.min(self.src.len())].chars().count();
        ParseError {
            offset,
            expected: expected.into(),
            excerpt: format!("{line}\n{}^", " ".repeat(col)),
        }
    }

    fn lex(&self, mut pos: usize) -> Result<(Tok, usize, usize), ParseError> {
        while pos < self.bytes.len() && self.bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        let Some(&c) = self.bytes.get(pos) else {
            return Ok((Tok::Eof, start, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            _ => None,
        };
        if let Some(t) = single {
            return Ok((t, start, start + 1));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < self.bytes.len()
                && (self.bytes[pos].is_ascii_alphanumeric() || self.bytes[pos] == b'_')
            {
                pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..pos].to_string()), start, pos));
        }
        Err(self.error(start, "a number, coordinate, function call, '-' or '('"))
    }

    fn lex_number(&self, start: usize) -> Result<(Tok, usize, usize), ParseError> {
        let b = self.bytes;
        let mut pos = start;
        let digits = |mut p: usize| {
            while p < b.len() && b[p].is_ascii_digit() {
                p += 1;
            }
            p
        };
        pos = digits(pos);
        let int_end = pos;
        let mut is_int = true;
        if pos < b.len() && b[pos] == b'.' {
            is_int = false;
            let frac_end = digits(pos + 1);
            if frac_end == pos + 1 && int_end == start {
                return Err(self.error(start, "a digit"));
            }
            pos = frac_end;
        }
        if pos < b.len() && (b[pos] == b'e' || b[pos] == b'E') {
            let mut q = pos + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            let exp_end = digits(q);
            if exp_end == q {
                return Err(self.error(q, "exponent digits"));
            }
            is_int = false;
            pos = exp_end;
        }
        let text = &self.src[start..pos];
        if is_int {
            if let Ok(v) = text.parse::<u64>() {
                return Ok((Tok::Int(v), start, pos));
            }
        }
        let v: f64 = text.parse().map_err(|_| self.error(start, "a decimal literal"))?;
        if !v.is_finite() {
            return Err(self.error(start, "a finite decimal literal"));
        }
        Ok((Tok::Num(v), start, pos))
    }

    fn peek(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex(self.cursor)?);
        }
        Ok(self.peeked.clone().unwrap())
    }

    fn bump(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        let t = self.peek()?;
        self.cursor = t.2;
        self.peeked = None;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<usize, ParseError> {
        let (tok, start, _) = self.peek()?;
        if tok == want {
            self.bump()?;
            Ok(start)
        } else {
            Err(self.error(start, want.describe()))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (tok, start, _) = self.peek()?;
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Node { kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos: start };
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let (tok, start, _) = self.peek()?;
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Node { kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos: start };
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let (tok, start, _) = self.peek()?;
        if tok == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Node { kind: NodeKind::Neg(Box::new(inner)), pos: start });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        let (tok, start, _) = self.peek()?;
        if tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let exp = self.unary()?;
        Ok(Node { kind: NodeKind::Bin(BinOp::Pow, Box::new(base), Box::new(exp)), pos: start })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (tok, start, _) = self.peek()?;
        match tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node { kind: NodeKind::Num(v), pos: start })
            }
            Tok::Int(v) => {
                self.bump()?;
                Ok(Node { kind: NodeKind::Num(v as f64), pos: start })
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "t" => {
                        let a = self.index(self.dims.p, "temporal")?;
                        Ok(Node { kind: NodeKind::Coord(Coord::T(a)), pos: start })
                    }
                    "x" => {
                        let i = self.index(self.dims.n, "spatial")?;
                        Ok(Node { kind: NodeKind::Coord(Coord::X(i)), pos: start })
                    }
                    "xs" => {
                        let i = self.index(self.dims.n, "spatial")?;
                        let a = self.index(self.dims.p, "temporal")?;
                        Ok(Node { kind: NodeKind::Coord(Coord::Xs(i, a)), pos: start })
                    }
                    other => {
                        let Some(func) = Func::from_name(other) else {
                            return Err(self.error(
                                start,
                                "a coordinate (t, x, xs) or one of exp, log, sin, cos, sqrt, tanh, abs",
                            ));
                        };
                        self.expect(Tok::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Node { kind: NodeKind::Call(func, Box::new(arg)), pos: start })
                    }
                }
            }
            other => Err(self.error(
                start,
                format!("a number, coordinate, function call, '-' or '(' (found {})", other.describe()),
            )),
        }
    }

    /// `"[" int "]"`, 1-based in source, returned 0-based.
    fn index(&mut self, bound: usize, what: &str) -> Result<usize, ParseError> {
        self.expect(Tok::LBracket)?;
        let (tok, start, _) = self.peek()?;
        let expected = format!("a {what} index in 1..={bound}");
        let v = match tok {
            Tok::Int(v) if v >= 1 && (v as usize) <= bound => v as usize,
            _ => return Err(self.error(start, expected)),
        };
        self.bump()?;
        self.expect(Tok::RBracket)?;
        Ok(v - 1)
    }
}
