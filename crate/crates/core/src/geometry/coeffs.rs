use super::{christoffel, inverse, GeometryContext, Result};
use crate::expr::Deps;
use crate::jet::{Coord, Dims, JetPoint};
use crate::scalar::Scalar;
use crate::tensor::{Axis, DTensor, Slot};

/// Metrics, nonlinear connections and the Cartan canonical connection at one
/// point.
///
/// Storage: `hc` is `H^γ_{αβ}` as `[γ][α][β]`; `m` is `M^{(i)}_{(α)β}`,
/// `n` is `N^{(i)}_{(α)j}`; `gc` is `G^k_{jγ}`; `lc` is `L^i_{jk}`; `cc` is
/// `C^{i(γ)}_{j(k)}` as `[i][j][k][γ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs<S> {
    pub h: DTensor<S>,
    pub h_inv: DTensor<S>,
    pub g: DTensor<S>,
    pub g_inv: DTensor<S>,
    pub hc: DTensor<S>,
    pub m: DTensor<S>,
    pub n: DTensor<S>,
    pub gc: DTensor<S>,
    pub lc: DTensor<S>,
    pub cc: DTensor<S>,
}

/// Things that form a vector space componentwise.
pub trait Linear<S> {
    /// `self += a · o`
    fn axpy(&mut self, a: S, o: &Self);
}

impl<S: Scalar> Linear<S> for DTensor<S> {
    fn axpy(&mut self, a: S, o: &Self) {
        for (x, y) in self.data_mut().iter_mut().zip(o.data()) {
            *x += a * *y;
        }
    }
}

impl<S: Scalar> Linear<S> for Vec<DTensor<S>> {
    fn axpy(&mut self, a: S, o: &Self) {
        for (x, y) in self.iter_mut().zip(o) {
            x.axpy(a, y);
        }
    }
}

impl<S: Scalar> Coeffs<S> {
    fn parts(&self) -> [&DTensor<S>; 10] {
        [&self.h, &self.h_inv, &self.g, &self.g_inv, &self.hc, &self.m, &self.n, &self.gc, &self.lc, &self.cc]
    }

    fn parts_mut(&mut self) -> [&mut DTensor<S>; 10] {
        [
            &mut self.h,
            &mut self.h_inv,
            &mut self.g,
            &mut self.g_inv,
            &mut self.hc,
            &mut self.m,
            &mut self.n,
            &mut self.gc,
            &mut self.lc,
            &mut self.cc,
        ]
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T + Copy) -> Coeffs<T> {
        let [h, h_inv, g, g_inv, hc, m, n, gc, lc, cc] = self.parts().map(|t| t.map(f));
        Coeffs { h, h_inv, g, g_inv, hc, m, n, gc, lc, cc }
    }

    pub fn dims(&self) -> Dims {
        self.h.dims()
    }

    pub fn re(&self) -> Coeffs<f64> {
        self.map(|v| v.re())
    }
}

impl<S: Scalar> Linear<S> for Coeffs<S> {
    fn axpy(&mut self, a: S, o: &Self) {
        for (x, y) in self.parts_mut().into_iter().zip(o.parts()) {
            x.axpy(a, y);
        }
    }
}

/// Direction of a covariant derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// h-temporal, `/β`
    Temporal,
    /// h-spatial, `|k`
    Spatial,
    /// vertical, `|^{(γ)}_{(k)}`
    Vertical,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Temporal, Direction::Spatial, Direction::Vertical];

    pub fn slot(self) -> Slot {
        match self {
            Direction::Temporal => Slot::TemporalDown,
            Direction::Spatial => Slot::SpatialDown,
            Direction::Vertical => Slot::VerticalDown,
        }
    }

    pub fn count(self, dims: Dims) -> usize {
        match self {
            Direction::Temporal => dims.p,
            Direction::Spatial => dims.n,
            Direction::Vertical => dims.n * dims.p,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Temporal => "h-temporal",
            Direction::Spatial => "h-spatial",
            Direction::Vertical => "vertical",
        }
    }
}

/// Adapted derivatives `δ/δt^β`, `δ/δx^k` or `∂/∂x^k_γ` of a quantity from
/// its plain partials `d[flat coord]`. Vertical entries are ordered `k·p + γ`.
pub fn adapted<S: Scalar, T: Linear<S> + Clone>(
    d: &[T],
    m: &DTensor<S>,
    n: &DTensor<S>,
    dir: Direction,
    dims: Dims,
) -> Vec<T> {
    let (p, nn) = (dims.p, dims.n);
    let subtract = |base: Coord, conn: &DTensor<S>, last: usize| {
        let mut out = d[base.flat(dims)].clone();
        for j in 0..nn {
            for mu in 0..p {
                let c = conn.get(&[j, mu, last]);
                if !c.is_exact_zero() {
                    out.axpy(-c, &d[Coord::Xs(j, mu).flat(dims)]);
                }
            }
        }
        out
    };
    match dir {
        Direction::Temporal => (0..p).map(|b| subtract(Coord::T(b), m, b)).collect(),
        Direction::Spatial => (0..nn).map(|k| subtract(Coord::X(k), n, k)).collect(),
        Direction::Vertical => (0..nn * p).map(|r| d[Coord::Xs(r / p, r % p).flat(dims)].clone()).collect(),
    }
}

/// Covariant derivative of `val` with respect to the Cartan canonical
/// connection, given its adapted derivatives along `dir`. The new index is
/// appended as the last slot.
pub fn covariant<S: Scalar>(co: &Coeffs<S>, val: &DTensor<S>, adapted: &[DTensor<S>], dir: Direction) -> DTensor<S> {
    let dims = val.dims();
    let p = dims.p;
    let mut slots = val.slots().to_vec();
    slots.push(dir.slot());
    let axes: Vec<Axis> = val.axes().to_vec();
    let r = axes.len();
    let mut scratch = vec![0usize; r];
    DTensor::from_fn(&slots, dims, |ix| {
        let vi = &ix[..r];
        let di = match dir {
            Direction::Temporal | Direction::Spatial => ix[r],
            Direction::Vertical => ix[r] * p + ix[r + 1],
        };
        let mut acc = adapted[di].get(vi);
        scratch.copy_from_slice(vi);
        for a in 0..r {
            let v = vi[a];
            let ext = axes[a].extent(dims);
            // coefficient multiplying val[.., w, ..]
            let coef = |w: usize| -> S {
                match (axes[a], dir) {
                    (Axis::TemporalUp, Direction::Temporal) => co.hc.get(&[v, w, ix[r]]),
                    (Axis::TemporalDown, Direction::Temporal) => -co.hc.get(&[w, v, ix[r]]),
                    (Axis::SpatialUp, Direction::Temporal) => co.gc.get(&[v, w, ix[r]]),
                    (Axis::SpatialDown, Direction::Temporal) => -co.gc.get(&[w, v, ix[r]]),
                    (Axis::SpatialUp, Direction::Spatial) => co.lc.get(&[v, w, ix[r]]),
                    (Axis::SpatialDown, Direction::Spatial) => -co.lc.get(&[w, v, ix[r]]),
                    (Axis::SpatialUp, Direction::Vertical) => co.cc.get(&[v, w, ix[r], ix[r + 1]]),
                    (Axis::SpatialDown, Direction::Vertical) => -co.cc.get(&[w, v, ix[r], ix[r + 1]]),
                    _ => S::zero(),
                }
            };
            if axes[a].is_temporal() && dir != Direction::Temporal {
                continue;
            }
            for w in 0..ext {
                let c = coef(w);
                if c.is_exact_zero() {
                    continue;
                }
                scratch[a] = w;
                acc += c * val.get(&scratch);
            }
            scratch[a] = v;
        }
        acc
    })
}

/// A d-tensor field (or a bundle of several) defined pointwise and generically.
pub trait TensorField {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>>;

    /// Coordinate families the field may depend on.
    fn deps(&self) -> Deps {
        Deps::ALL
    }
}

impl<F: TensorField> TensorField for &F {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>> {
        (*self).eval(pt)
    }

    fn deps(&self) -> Deps {
        (*self).deps()
    }
}

/// Values and all first partials of a tensor field bundle.
#[derive(Clone, Debug)]
pub struct FieldJet<S> {
    pub val: Vec<DTensor<S>>,
    /// `d[flat coord][component]`
    pub d: Vec<Vec<DTensor<S>>>,
}

impl<S: Scalar> FieldJet<S> {
    pub fn of<F: TensorField>(f: &F, pt: &JetPoint<S>) -> Result<Self> {
        let deps = f.deps();
        let dims = pt.dims();
        let mut val = None;
        let mut d = Vec::with_capacity(dims.n_coords());
        let mut pending = Vec::new();
        for c in dims.coords() {
            if !deps.contains(c.family()) {
                pending.push(d.len());
                d.push(Vec::new());
                continue;
            }
            let v = f.eval(&pt.seeded(c))?;
            if val.is_none() {
                val = Some(v.iter().map(|t| t.map(|x| x.re)).collect::<Vec<_>>());
            }
            d.push(v.iter().map(|t| t.map(|x| x.eps)).collect());
        }
        let val = match val {
            Some(v) => v,
            None => f.eval(pt)?,
        };
        let zero: Vec<DTensor<S>> = val.iter().map(|t| DTensor::zeros(t.slots(), dims)).collect();
        for k in pending {
            d[k] = zero.clone();
        }
        Ok(FieldJet { val, d })
    }

    /// Covariant derivatives of every component along `dir`.
    pub fn covariant(&self, co: &Coeffs<S>, dir: Direction) -> Vec<DTensor<S>> {
        let ad = adapted(&self.d, &co.m, &co.n, dir, co.dims());
        (0..self.val.len())
            .map(|c| {
                let comp: Vec<DTensor<S>> = ad.iter().map(|a| a[c].clone()).collect();
                covariant(co, &self.val[c], &comp, dir)
            })
            .collect()
    }
}

/// Connection coefficients with all first partials and the adapted
/// derivatives along each direction.
#[derive(Clone, Debug)]
pub struct CoeffJet<S> {
    pub val: Coeffs<S>,
    pub d: Vec<Coeffs<S>>,
    /// `δ/δt^β`
    pub dt: Vec<Coeffs<S>>,
    /// `δ/δx^k`
    pub dx: Vec<Coeffs<S>>,
    /// `∂/∂x^k_γ`, flat `k·p + γ`
    pub dv: Vec<Coeffs<S>>,
}

impl<S: Scalar> CoeffJet<S> {
    pub fn dv(&self, k: usize, gamma: usize) -> &Coeffs<S> {
        &self.dv[k * self.val.dims().p + gamma]
    }
}

impl GeometryContext {
    /// All connection coefficients at `pt`.
    pub fn coeffs<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Coeffs<S>> {
        let dims = self.dims();
        let n = dims.n;
        let (hc, m) = self.temporal_christoffel_and_m(pt)?;
        let h = self.eval_h(pt)?;
        let h_inv = inverse("h", &h, pt)?;
        let (g, dg) = self.g_jet(pt)?;
        let g_inv = inverse("g", &g, pt)?;
        let nn = self.spatial_nlc_with(pt, Some((&g, &dg)))?;

        let dgt = adapted(&dg, &m, &nn, Direction::Temporal, dims);
        let dgx = adapted(&dg, &m, &nn, Direction::Spatial, dims);
        let half = S::cst(0.5);
        let gc = DTensor::from_fn(&[Slot::SpatialUp, Slot::SpatialDown, Slot::TemporalDown], dims, |ix| {
            let (k, j, ga) = (ix[0], ix[1], ix[2]);
            half * (0..n).map(|i| g_inv.get(&[k, i]) * dgt[ga].get(&[i, j])).sum::<S>()
        });
        let lc = christoffel(&g_inv, &dgx, Slot::SpatialUp, Slot::SpatialDown, dims);
        let cc = if self.g_deps().xs {
            let dv = |k: usize, ga: usize| &dg[Coord::Xs(k, ga).flat(dims)];
            DTensor::from_fn(&[Slot::SpatialUp, Slot::SpatialDown, Slot::VerticalDown], dims, |ix| {
                let (i, j, k, ga) = (ix[0], ix[1], ix[2], ix[3]);
                let mut s = S::zero();
                for mm in 0..n {
                    let t = dv(k, ga).get(&[mm, j]) + dv(j, ga).get(&[mm, k]) - dv(mm, ga).get(&[j, k]);
                    s += g_inv.get(&[i, mm]) * t;
                }
                half * s
            })
        } else {
            DTensor::zeros(&[Slot::SpatialUp, Slot::SpatialDown, Slot::VerticalDown], dims)
        };
        Ok(Coeffs { h, h_inv, g, g_inv, hc, m, n: nn, gc, lc, cc })
    }

    /// Coefficients with their first partials and adapted derivatives.
    pub fn coeff_jet<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<CoeffJet<S>> {
        let dims = self.dims();
        let deps = self.coeff_deps();
        let mut val = None;
        let mut d = Vec::with_capacity(dims.n_coords());
        for c in dims.coords() {
            if !deps.contains(c.family()) {
                d.push(None);
                continue;
            }
            let co = self.coeffs(&pt.seeded(c))?;
            if val.is_none() {
                val = Some(co.map(|v| v.re));
            }
            d.push(Some(co.map(|v| v.eps)));
        }
        let val = match val {
            Some(v) => v,
            None => self.coeffs(pt)?,
        };
        let zero = val.map(|_| S::zero());
        let d: Vec<Coeffs<S>> = d.into_iter().map(|c| c.unwrap_or_else(|| zero.clone())).collect();
        let dt = adapted(&d, &val.m, &val.n, Direction::Temporal, dims);
        let dx = adapted(&d, &val.m, &val.n, Direction::Spatial, dims);
        let dv = adapted(&d, &val.m, &val.n, Direction::Vertical, dims);
        Ok(CoeffJet { val, d, dt, dx, dv })
    }

    /// Covariant derivatives of a field bundle at `pt` along `dir`.
    pub fn cov_deriv<S: Scalar, F: TensorField>(&self, f: &F, pt: &JetPoint<S>, dir: Direction) -> Result<Vec<DTensor<S>>> {
        let co = self.coeffs(pt)?;
        Ok(FieldJet::of(f, pt)?.covariant(&co, dir))
    }

    /// Adapted derivative of a field bundle: `δ/δt^β`, `δ/δx^k` or `∂/∂x^k_γ`.
    pub fn adapted_deriv<S: Scalar, F: TensorField>(&self, f: &F, pt: &JetPoint<S>, dir: Direction) -> Result<Vec<Vec<DTensor<S>>>> {
        let (_, m) = self.temporal_christoffel_and_m(pt)?;
        let n = self.spatial_nlc(pt)?;
        Ok(adapted(&FieldJet::of(f, pt)?.d, &m, &n, dir, self.dims()))
    }
}
