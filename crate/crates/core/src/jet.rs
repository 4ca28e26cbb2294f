//! Points of the first-order jet bundle and their coordinate bookkeeping.

use std::fmt;

use crate::dual::Dual;
use crate::scalar::Scalar;

/// Dimensions of the temporal (`p`) and spatial (`n`) manifolds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub p: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(p: usize, n: usize) -> Self {
        Dims { p, n }
    }

    /// Total number of jet coordinates `p + n + n·p`.
    pub fn n_coords(&self) -> usize {
        self.p + self.n + self.n * self.p
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.n_coords()).map(move |k| Coord::from_flat(*self, k))
    }
}

/// The three coordinate families of J¹(T,M).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    T,
    X,
    Xs,
}

/// A single coordinate, 0-based: `T(α)`, `X(i)`, `Xs(i, α)` for `x^i_α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    T(usize),
    X(usize),
    Xs(usize, usize),
}

impl Coord {
    /// Flat index: `t` first, then `x`, then `xs` in `[i][α]` order.
    pub fn flat(&self, dims: Dims) -> usize {
        match *self {
            Coord::T(a) => a,
            Coord::X(i) => dims.p + i,
            Coord::Xs(i, a) => dims.p + dims.n + i * dims.p + a,
        }
    }

    pub fn from_flat(dims: Dims, k: usize) -> Coord {
        if k < dims.p {
            Coord::T(k)
        } else if k < dims.p + dims.n {
            Coord::X(k - dims.p)
        } else {
            let r = k - dims.p - dims.n;
            Coord::Xs(r / dims.p, r % dims.p)
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Coord::T(_) => Family::T,
            Coord::X(_) => Family::X,
            Coord::Xs(..) => Family::Xs,
        }
    }

    pub fn in_bounds(&self, dims: Dims) -> bool {
        match *self {
            Coord::T(a) => a < dims.p,
            Coord::X(i) => i < dims.n,
            Coord::Xs(i, a) => i < dims.n && a < dims.p,
        }
    }
}

/// 1-based rendering, matching the expression syntax.
impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Coord::T(a) => write!(f, "t[{}]", a + 1),
            Coord::X(i) => write!(f, "x[{}]", i + 1),
            Coord::Xs(i, a) => write!(f, "xs[{}][{}]", i + 1, a + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("jet point has wrong shape: expected t[{p}], x[{n}], xs[{n}][{p}]")]
pub struct ShapeError {
    pub p: usize,
    pub n: usize,
}

/// A point `(t^α, x^i, x^i_α)` of J¹(T,M).
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint<S> {
    dims: Dims,
    pub t: Vec<S>,
    pub x: Vec<S>,
    /// Row-major `[i][α]`.
    pub xs: Vec<S>,
}

impl<S: Scalar> JetPoint<S> {
    pub fn new(t: Vec<S>, x: Vec<S>, xs: Vec<Vec<S>>) -> Result<Self, ShapeError> {
        let (p, n) = (t.len(), x.len());
        let err = ShapeError { p, n };
        if p == 0 || n == 0 || xs.len() != n || xs.iter().any(|row| row.len() != p) {
            return Err(err);
        }
        Ok(JetPoint { dims: Dims { p, n }, t, x, xs: xs.into_iter().flatten().collect() })
    }

    pub fn zeros(dims: Dims) -> Self {
        JetPoint {
            dims,
            t: vec![S::zero(); dims.p],
            x: vec![S::zero(); dims.n],
            xs: vec![S::zero(); dims.n * dims.p],
        }
    }

    /// Build from a flat coordinate vector in [`Coord::flat`] order.
    pub fn from_flat(dims: Dims, v: &[S]) -> Self {
        assert_eq!(v.len(), dims.n_coords());
        JetPoint {
            dims,
            t: v[..dims.p].to_vec(),
            x: v[dims.p..dims.p + dims.n].to_vec(),
            xs: v[dims.p + dims.n..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<S> {
        self.t.iter().chain(&self.x).chain(&self.xs).copied().collect()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn xs(&self, i: usize, a: usize) -> S {
        self.xs[i * self.dims.p + a]
    }

    #[inline]
    pub fn get(&self, c: Coord) -> S {
        match c {
            Coord::T(a) => self.t[a],
            Coord::X(i) => self.x[i],
            Coord::Xs(i, a) => self.xs(i, a),
        }
    }

    pub fn set(&mut self, c: Coord, v: S) {
        match c {
            Coord::T(a) => self.t[a] = v,
            Coord::X(i) => self.x[i] = v,
            Coord::Xs(i, a) => self.xs[i * self.dims.p + a] = v,
        }
    }

    pub fn map<T>(&self, f: impl Fn(S) -> T) -> JetPoint<T> {
        JetPoint {
            dims: self.dims,
            t: self.t.iter().map(|&v| f(v)).collect(),
            x: self.x.iter().map(|&v| f(v)).collect(),
            xs: self.xs.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same point, every coordinate a constant dual.
    pub fn lift(&self) -> JetPoint<Dual<S>> {
        self.map(Dual::constant)
    }

    /// Same point with a unit tangent along `c`.
    pub fn seeded(&self, c: Coord) -> JetPoint<Dual<S>> {
        let mut out = self.lift();
        out.set(c, Dual::variable(self.get(c)));
        out
    }

    /// Real parts as plain doubles.
    pub fn re(&self) -> JetPoint<f64> {
        self.map(|v| v.re())
    }
}

impl JetPoint<f64> {
    /// Move one coordinate by `h`.
    pub fn shifted(&self, c: Coord, h: f64) -> Self {
        let mut out = self.clone();
        out.set(c, self.get(c) + h);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_indexing_round_trips() {
        let dims = Dims::new(2, 3);
        assert_eq!(dims.n_coords(), 11);
        for k in 0..dims.n_coords() {
            assert_eq!(Coord::from_flat(dims, k).flat(dims), k);
        }
        assert_eq!(Coord::Xs(1, 0).flat(dims), 7);
        assert_eq!(Coord::Xs(2, 1).to_string(), "xs[3][2]");
    }

    #[test]
    fn shape_is_checked() {
        assert!(JetPoint::new(vec![0.0], vec![0.0, 1.0], vec![vec![0.0]]).is_err());
        let pt = JetPoint::new(vec![0.1, 0.2], vec![1.0], vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(pt.xs(0, 1), 4.0);
        assert_eq!(pt.get(Coord::Xs(0, 0)), 3.0);
        assert_eq!(JetPoint::from_flat(pt.dims(), &pt.to_flat()), pt);
    }

    #[test]
    fn seeding_sets_one_tangent() {
        let pt = JetPoint::new(vec![0.5], vec![1.0, 2.0], vec![vec![3.0], vec![4.0]]).unwrap();
        let s = pt.seeded(Coord::X(1));
        let tangents: Vec<f64> = s.to_flat().iter().map(|d| d.eps).collect();
        assert_eq!(tangents, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }
}
