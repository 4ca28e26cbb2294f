//! Generalized metrical multi-time Lagrange spaces: nonlinear connections,
//! the Cartan canonical connection, covariant derivatives, torsion and
//! curvature.
//!
//! Everything is a pure function of `(context, point)` and generic over the
//! scalar type, so derivatives of any derived quantity come from evaluating
//! the same code at a seeded dual point.

mod checks;
mod coeffs;
mod curvature;
mod lagrange;

pub use checks::{MetricField, MetricityResiduals, SymmetryResiduals};
pub use coeffs::{adapted, covariant, CoeffJet, Coeffs, Direction, FieldJet, Linear, TensorField};
pub use curvature::{AntisymmetryResiduals, Curvature, CurvatureSet, RicciSet, ScalarSet, TorsionSet};
/// Torsion blocks from a coefficient jet.
pub fn torsion_of<S: Scalar>(j: &CoeffJet<S>) -> TorsionSet<S> {
    curvature::torsion_from(j)
}

pub use lagrange::{EnergyField, LagrangianField, RegularityVerdict, TorsionFreeVerdict};

use crate::diff::{DiffConfig, DiffError};
use crate::dual::Dual;
use crate::expr::{validate_field, Deps, EvalError, ExprAst};
use crate::jet::{Coord, Dims, JetPoint};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::{sym_inverse, DTensor, Slot, TensorError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("field {field}: {source}")]
    Eval { field: String, source: EvalError },
    #[error("field {field} references {coord} (byte {pos}) but may only depend on {allowed}")]
    Dependency { field: String, coord: Coord, pos: usize, allowed: Deps },
    #[error("{which} is singular at {point:?}: determinant {det:e}, condition number {cond:e}")]
    SingularMetric { which: &'static str, det: f64, cond: f64, point: Vec<f64> },
    #[error("{which} is not symmetric at {point:?} (asymmetry {asym:e})")]
    NotSymmetric { which: &'static str, asym: f64, point: Vec<f64> },
    #[error("regularity violation: {0}")]
    Regularity(String),
    #[error("domain error at {point:?}: {message}")]
    Domain { message: String, point: Vec<f64> },
    #[error("signature of {which} changed from {first:?} to {now:?} at {point:?}")]
    SignatureChanged { which: &'static str, first: (usize, usize), now: (usize, usize), point: Vec<f64> },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Conformal exponent σ in `g = e^{2σ} φ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sigma {
    Zero,
    /// Arbitrary expression.
    Expr(ExprAst),
    /// `σ = U^{(α)}_{(i)} ẋ^i_α`, entries `[α][i]` depending on (t, x).
    Linear(Vec<Vec<ExprAst>>),
    /// `σ = h^{αβ} A_i A_j ẋ^i_α ẋ^j_β`, `A` depending on x.
    Covector(Vec<ExprAst>),
    /// `σ = φ_ij X^α X^β ẋ^i_α ẋ^j_β`, `X` depending on t.
    Vector(Vec<ExprAst>),
}

/// A multi-time Lagrangian whose vertical Hessian defines `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum Lagrangian {
    Expr(ExprAst),
    /// `L = h^{αβ} g_ij ẋ^i_α ẋ^j_β + U^{(α)}_{(i)} ẋ^i_α + F` with `g`, `U[α][i]`, `F`
    /// depending on (t, x).
    Quadratic { g: Vec<Vec<ExprAst>>, u: Vec<Vec<ExprAst>>, f: ExprAst },
}

/// How the spatial metric `g_ij` is realized.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSource {
    Direct(Vec<Vec<ExprAst>>),
    /// `g_ij = (1/p) h_{μν} · ½ ∂²L/∂ẋ^i_μ∂ẋ^j_ν`.
    FromLagrangian(Lagrangian),
    /// `g_ij = e^{2σ} φ_ij`.
    Conformal { phi: Vec<Vec<ExprAst>>, sigma: Sigma },
    /// `g_ij = φ_ij + (1 − 1/n) Y_i Y_j`, `Y_i = φ_im ẋ^m_μ X^μ`.
    Optic { phi: Vec<Vec<ExprAst>>, index: ExprAst, dir: Vec<ExprAst> },
}

/// Spatial nonlinear connection.
#[derive(Clone, Debug, PartialEq)]
pub enum NlcSpec {
    /// `N = Γ^i_{jm} ẋ^m_α + ½ g^{im} ∂g_jm/∂t^α`; needs direction-independent `g`.
    QuadraticCanonical,
    /// `N = γ^i_{jm}(φ) ẋ^m_α`.
    ChristoffelOfPhi(Vec<Vec<ExprAst>>),
    /// Components `N^{(i)}_{(α)j}` as `[i][α][j]`.
    UserGiven(Vec<Vec<Vec<ExprAst>>>),
}

/// Everything needed to evaluate the geometry at a point.
#[derive(Clone, Debug)]
pub struct GeometryContext {
    dims: Dims,
    h: Vec<Vec<ExprAst>>,
    g_source: MetricSource,
    nlc: NlcSpec,
    pub diff: DiffConfig,
    /// Einstein constant.
    pub kappa: f64,
    g_deps: Deps,
}

fn check_shape(name: &str, got: &[Vec<ExprAst>], rows: usize, cols: usize) -> Result<()> {
    if got.len() != rows || got.iter().any(|r| r.len() != cols) {
        return Err(GeometryError::Shape(format!("{name} must be {rows}×{cols}")));
    }
    Ok(())
}

fn check_deps(name: &str, e: &ExprAst, allowed: Deps, dims: Dims) -> Result<()> {
    if e.dims() != dims {
        return Err(GeometryError::Shape(format!(
            "{name} was parsed for (p, n) = ({}, {}), expected ({}, {})",
            e.dims().p,
            e.dims().n,
            dims.p,
            dims.n
        )));
    }
    validate_field(e, allowed).map_err(|v| GeometryError::Dependency {
        field: name.to_string(),
        coord: v[0].coord,
        pos: v[0].pos,
        allowed,
    })
}

fn check_matrix(name: &str, m: &[Vec<ExprAst>], rows: usize, cols: usize, allowed: Deps, dims: Dims) -> Result<()> {
    check_shape(name, m, rows, cols)?;
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            // single-row inputs are vectors and labelled as such
            let label = if rows == 1 { format!("{name}[{}]", j + 1) } else { format!("{name}[{}][{}]", i + 1, j + 1) };
            check_deps(&label, e, allowed, dims)?;
        }
    }
    Ok(())
}

fn deps_of<'a>(es: impl IntoIterator<Item = &'a ExprAst>) -> Deps {
    es.into_iter().fold(Deps::NONE, |d, e| d.union(e.deps()))
}

fn all_zero<'a>(es: impl IntoIterator<Item = &'a ExprAst>) -> bool {
    es.into_iter().all(|e| {
        // constant expressions ignore the point
        e.is_constant() && e.eval::<f64>(&JetPoint::zeros(e.dims())).map(|v| v == 0.0).unwrap_or(false)
    })
}

const XS: Deps = Deps { t: false, x: false, xs: true };

impl GeometryContext {
    pub fn new(dims: Dims, h: Vec<Vec<ExprAst>>, g_source: MetricSource, nlc: NlcSpec) -> Result<Self> {
        if dims.p == 0 || dims.n == 0 {
            return Err(GeometryError::Shape("p and n must be positive".into()));
        }
        let (p, n) = (dims.p, dims.n);
        check_matrix("h", &h, p, p, Deps::T, dims)?;
        let g_deps = match &g_source {
            MetricSource::Direct(g) => {
                check_matrix("g", g, n, n, Deps::ALL, dims)?;
                deps_of(g.iter().flatten())
            }
            MetricSource::FromLagrangian(Lagrangian::Expr(l)) => {
                check_deps("L", l, Deps::ALL, dims)?;
                // the Hessian is contracted with h
                l.deps().union(Deps::T)
            }
            MetricSource::FromLagrangian(Lagrangian::Quadratic { g, u, f }) => {
                check_matrix("g", g, n, n, Deps::TX, dims)?;
                check_matrix("U", u, p, n, Deps::TX, dims)?;
                check_deps("F", f, Deps::TX, dims)?;
                deps_of(g.iter().flatten()).union(Deps::T)
            }
            MetricSource::Conformal { phi, sigma } => {
                check_matrix("phi", phi, n, n, Deps::X, dims)?;
                let base = deps_of(phi.iter().flatten());
                let s = match sigma {
                    Sigma::Zero => Deps::NONE,
                    Sigma::Expr(e) => {
                        check_deps("sigma", e, Deps::ALL, dims)?;
                        e.deps()
                    }
                    Sigma::Linear(u) => {
                        check_matrix("U", u, p, n, Deps::TX, dims)?;
                        if all_zero(u.iter().flatten()) {
                            Deps::NONE
                        } else {
                            deps_of(u.iter().flatten()).union(XS)
                        }
                    }
                    Sigma::Covector(a) => {
                        check_matrix("A", std::slice::from_ref(a), 1, n, Deps::X, dims)?;
                        if all_zero(a) {
                            Deps::NONE
                        } else {
                            deps_of(a).union(XS).union(Deps::T)
                        }
                    }
                    Sigma::Vector(x) => {
                        check_matrix("X", std::slice::from_ref(x), 1, p, Deps::T, dims)?;
                        if all_zero(x) {
                            Deps::NONE
                        } else {
                            deps_of(x).union(XS).union(base)
                        }
                    }
                };
                base.union(s)
            }
            MetricSource::Optic { phi, index, dir } => {
                check_matrix("phi", phi, n, n, Deps::X, dims)?;
                check_deps("index", index, Deps::ALL, dims)?;
                check_matrix("X", std::slice::from_ref(dir), 1, p, Deps::T, dims)?;
                let base = deps_of(phi.iter().flatten());
                if all_zero(dir) {
                    base
                } else {
                    base.union(index.deps()).union(deps_of(dir)).union(XS)
                }
            }
        };
        match &nlc {
            NlcSpec::QuadraticCanonical => {
                if g_deps.xs && !matches!(g_source, MetricSource::FromLagrangian(Lagrangian::Expr(_))) {
                    return Err(GeometryError::Regularity(
                        "the canonical spatial nonlinear connection needs g independent of the partial directions xs; \
                         give an a priori connection instead"
                            .into(),
                    ));
                }
            }
            NlcSpec::ChristoffelOfPhi(phi) => check_matrix("phi", phi, n, n, Deps::X, dims)?,
            NlcSpec::UserGiven(nn) => {
                if nn.len() != n || nn.iter().any(|r| r.len() != p || r.iter().any(|c| c.len() != n)) {
                    return Err(GeometryError::Shape(format!("N must be {n}×{p}×{n}")));
                }
                for (i, a) in nn.iter().enumerate() {
                    for (al, row) in a.iter().enumerate() {
                        for (j, e) in row.iter().enumerate() {
                            check_deps(&format!("N[{}][{}][{}]", i + 1, al + 1, j + 1), e, Deps::ALL, dims)?;
                        }
                    }
                }
            }
        }
        Ok(GeometryContext { dims, h, g_source, nlc, diff: DiffConfig::default(), kappa: 1.0, g_deps })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_diff(mut self, diff: DiffConfig) -> Result<Self> {
        diff.validate()?;
        self.diff = diff;
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn h_exprs(&self) -> &[Vec<ExprAst>] {
        &self.h
    }

    pub fn g_source(&self) -> &MetricSource {
        &self.g_source
    }

    pub fn nlc(&self) -> &NlcSpec {
        &self.nlc
    }

    /// Conservative set of coordinate families `g` depends on.
    pub fn g_deps(&self) -> Deps {
        self.g_deps
    }

    pub fn h_is_constant(&self) -> bool {
        self.h.iter().flatten().all(|e| e.is_constant())
    }

    /// Whether `g` is direction-independent by construction.
    pub fn g_direction_independent(&self) -> bool {
        !self.g_deps.xs
    }

    /// Whether `g` is numerically independent of the directions at `pt`.
    pub fn g_direction_independent_at(&self, pt: &JetPoint<f64>) -> Result<bool> {
        if self.g_direction_independent() {
            return Ok(true);
        }
        let (g, dg) = self.g_jet(pt)?;
        Ok(require_direction_independent(&g, &dg, self.dims).is_ok())
    }

    /// Largest derivative order of the metric-defining fields used by
    /// curvature (Lagrangian metrics already carry two).
    pub fn curvature_order(&self) -> usize {
        match self.g_source {
            MetricSource::FromLagrangian(_) => 3,
            _ => 2,
        }
    }

    /// Whether the configured derivative budget allows curvature.
    pub fn require_curvature_budget(&self) -> Result<()> {
        let need = self.curvature_order();
        if self.diff.max_order < need {
            return Err(DiffError::OrderExceeded { order: need, max: self.diff.max_order }.into());
        }
        Ok(())
    }

    /// Conservative set of coordinate families any connection coefficient
    /// depends on; partials along other families are exactly zero.
    pub fn coeff_deps(&self) -> Deps {
        let h_deps = deps_of(self.h.iter().flatten());
        let mut d = h_deps.union(self.g_deps);
        if !self.h_is_constant() {
            d.xs = true;
        }
        match &self.nlc {
            NlcSpec::QuadraticCanonical => {
                if self.g_deps.x {
                    d.xs = true;
                }
            }
            NlcSpec::ChristoffelOfPhi(phi) => {
                let pd = deps_of(phi.iter().flatten());
                d = d.union(pd);
                if pd.x {
                    d.xs = true;
                }
            }
            NlcSpec::UserGiven(nn) => d = d.union(deps_of(nn.iter().flatten().flatten())),
        }
        d
    }

    fn check_point<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<()> {
        if pt.dims() != self.dims {
            return Err(GeometryError::Shape(format!(
                "point has (p, n) = ({}, {}), context has ({}, {})",
                pt.dims().p,
                pt.dims().n,
                self.dims.p,
                self.dims.n
            )));
        }
        Ok(())
    }

    /// `h_{αβ}` at `pt`.
    pub fn eval_h<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<DTensor<S>> {
        self.check_point(pt)?;
        eval_matrix("h", &self.h, pt, Slot::TemporalDown)
    }

    /// `h_{αβ}` and `h^{αβ}` at `pt`.
    pub fn eval_h_pair<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<(DTensor<S>, DTensor<S>)> {
        let h = self.eval_h(pt)?;
        let hi = inverse("h", &h, pt)?;
        Ok((h, hi))
    }

    /// The realized spatial metric `g_ij` at `pt`.
    pub fn eval_g<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<DTensor<S>> {
        self.check_point(pt)?;
        let (p, n) = (self.dims.p, self.dims.n);
        match &self.g_source {
            MetricSource::Direct(g) => eval_matrix("g", g, pt, Slot::SpatialDown),
            MetricSource::FromLagrangian(l) => {
                let h = self.eval_h(pt)?;
                let lf = LagrangianField { ctx: self, lagrangian: l };
                let k = S::cst(0.5 / p as f64);
                let mut g = DTensor::zeros(&[Slot::SpatialDown, Slot::SpatialDown], self.dims);
                for i in 0..n {
                    for j in i..n {
                        let mut acc = S::zero();
                        for mu in 0..p {
                            // ∂²L along e_{(i,μ)} and v = Σ_ν h_{μν} e_{(j,ν)}
                            let pt2 = second_directional(pt, &[(Coord::Xs(i, mu), S::one())], &(0..p)
                                .map(|nu| (Coord::Xs(j, nu), h.get(&[mu, nu])))
                                .collect::<Vec<_>>());
                            acc += lf.eval_lagrangian(&pt2)?.eps.eps;
                        }
                        g.set(&[i, j], acc * k);
                        g.set(&[j, i], acc * k);
                    }
                }
                Ok(g)
            }
            MetricSource::Conformal { phi, sigma } => {
                let phi_v = eval_matrix("phi", phi, pt, Slot::SpatialDown)?;
                let s = self.eval_sigma(sigma, &phi_v, pt)?;
                let e = (s + s).exp();
                if !e.is_finite() {
                    return Err(GeometryError::Domain {
                        message: "conformal factor e^{2σ} overflows".into(),
                        point: pt.re().to_flat(),
                    });
                }
                Ok(phi_v.scale(e))
            }
            MetricSource::Optic { phi, index, dir } => {
                let phi_v = eval_matrix("phi", phi, pt, Slot::SpatialDown)?;
                let y = optic_y(&phi_v, dir, pt)?;
                let nv = ev("index", index, pt)?;
                if nv.re() < 1.0 {
                    return Err(GeometryError::Domain {
                        message: format!("refraction index {} is below 1", nv.re()),
                        point: pt.re().to_flat(),
                    });
                }
                let f = S::one() - nv.recip();
                // filled from the upper triangle so g is exactly symmetric
                Ok(DTensor::from_fn(&[Slot::SpatialDown, Slot::SpatialDown], self.dims, |ix| {
                    let (i, j) = (ix[0].min(ix[1]), ix[0].max(ix[1]));
                    phi_v.get(&[i, j]) + f * y[i] * y[j]
                }))
            }
        }
    }

    fn eval_sigma<S: Scalar>(&self, sigma: &Sigma, phi: &DTensor<S>, pt: &JetPoint<S>) -> Result<S> {
        let (p, n) = (self.dims.p, self.dims.n);
        Ok(match sigma {
            Sigma::Zero => S::zero(),
            Sigma::Expr(e) => ev("sigma", e, pt)?,
            Sigma::Linear(u) => {
                let mut s = S::zero();
                for a in 0..p {
                    for i in 0..n {
                        s += ev("U", &u[a][i], pt)? * pt.xs(i, a);
                    }
                }
                s
            }
            Sigma::Covector(a) => {
                let (_, hi) = self.eval_h_pair(pt)?;
                let av: Vec<S> = a.iter().map(|e| ev("A", e, pt)).collect::<Result<_>>()?;
                // (A·ẋ)_α
                let ax: Vec<S> = (0..p).map(|al| (0..n).map(|i| av[i] * pt.xs(i, al)).sum()).collect();
                let mut s = S::zero();
                for al in 0..p {
                    for be in 0..p {
                        s += hi.get(&[al, be]) * ax[al] * ax[be];
                    }
                }
                s
            }
            Sigma::Vector(x) => {
                let xv: Vec<S> = x.iter().map(|e| ev("X", e, pt)).collect::<Result<_>>()?;
                let w: Vec<S> = (0..n).map(|i| (0..p).map(|al| xv[al] * pt.xs(i, al)).sum()).collect();
                let mut s = S::zero();
                for i in 0..n {
                    for j in 0..n {
                        s += phi.get(&[i, j]) * w[i] * w[j];
                    }
                }
                s
            }
        })
    }

    /// `g_ij` and `g^{ij}` at `pt`.
    pub fn eval_g_pair<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<(DTensor<S>, DTensor<S>)> {
        let g = self.eval_g(pt)?;
        let gi = inverse("g", &g, pt)?;
        Ok((g, gi))
    }

    /// `g` and its partials along every jet coordinate, `[flat coord]`.
    pub(crate) fn g_jet<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<(DTensor<S>, Vec<DTensor<S>>)> {
        let deps = self.g_deps;
        let mut val = None;
        let mut d = Vec::with_capacity(self.dims.n_coords());
        for c in self.dims.coords() {
            if !deps.contains(c.family()) {
                d.push(DTensor::zeros(&[Slot::SpatialDown, Slot::SpatialDown], self.dims));
                continue;
            }
            let gd = self.eval_g(&pt.seeded(c))?;
            if val.is_none() {
                val = Some(gd.map(|v| v.re));
            }
            d.push(gd.map(|v| v.eps));
        }
        let val = match val {
            Some(v) => v,
            None => self.eval_g(pt)?,
        };
        Ok((val, d))
    }

    /// `h` and its partials along each temporal coordinate.
    fn h_jet<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<(DTensor<S>, Vec<DTensor<S>>)> {
        if self.h_is_constant() {
            let h = self.eval_h(pt)?;
            let z = DTensor::zeros(h.slots(), self.dims);
            return Ok((h, vec![z; self.dims.p]));
        }
        let mut val = None;
        let mut d = Vec::with_capacity(self.dims.p);
        for a in 0..self.dims.p {
            let hd = self.eval_h(&pt.seeded(Coord::T(a)))?;
            if val.is_none() {
                val = Some(hd.map(|v| v.re));
            }
            d.push(hd.map(|v| v.eps));
        }
        Ok((val.expect("p ≥ 1"), d))
    }

    /// Christoffel symbols `H^γ_{αβ}` of `h` and the canonical temporal
    /// nonlinear connection `M^{(i)}_{(α)β} = −H^γ_{αβ} ẋ^i_γ`.
    pub fn temporal_christoffel_and_m<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<(DTensor<S>, DTensor<S>)> {
        let (h, dh) = self.h_jet(pt)?;
        let hi = inverse("h", &h, pt)?;
        let hc = christoffel(&hi, &dh, Slot::TemporalUp, Slot::TemporalDown, self.dims);
        let m = temporal_nlc(&hc, pt);
        Ok((hc, m))
    }

    /// Christoffel symbols `Γ^i_{jk}` of `g` (x-derivatives only). Refused
    /// when `g` depends on the partial directions.
    pub fn spatial_christoffel_generalized<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<DTensor<S>> {
        let (g, dg) = self.g_jet(pt)?;
        require_direction_independent(&g, &dg, self.dims)?;
        let gi = inverse("g", &g, pt)?;
        let dx: Vec<DTensor<S>> = (0..self.dims.n).map(|k| dg[Coord::X(k).flat(self.dims)].clone()).collect();
        Ok(christoffel(&gi, &dx, Slot::SpatialUp, Slot::SpatialDown, self.dims))
    }

    /// Christoffel symbols `γ^i_{jk}` of a static spatial metric `φ(x)`.
    pub fn spatial_christoffel_static<S: Scalar>(&self, phi: &[Vec<ExprAst>], pt: &JetPoint<S>) -> Result<DTensor<S>> {
        self.check_point(pt)?;
        let n = self.dims.n;
        let p_v = eval_matrix("phi", phi, pt, Slot::SpatialDown)?;
        let pi = inverse("phi", &p_v, pt)?;
        let mut dx = Vec::with_capacity(n);
        for k in 0..n {
            dx.push(eval_matrix("phi", phi, &pt.seeded(Coord::X(k)), Slot::SpatialDown)?.map(|v| v.eps));
        }
        Ok(christoffel(&pi, &dx, Slot::SpatialUp, Slot::SpatialDown, self.dims))
    }

    /// The spatial nonlinear connection `N^{(i)}_{(α)j}`, slots `[VU(i,α), SD j]`.
    pub fn spatial_nlc<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<DTensor<S>> {
        match &self.nlc {
            NlcSpec::QuadraticCanonical => {
                let (g, dg) = self.g_jet(pt)?;
                self.quadratic_nlc(pt, &g, &dg)
            }
            _ => self.spatial_nlc_with(pt, None),
        }
    }

    fn quadratic_nlc<S: Scalar>(&self, pt: &JetPoint<S>, g: &DTensor<S>, dg: &[DTensor<S>]) -> Result<DTensor<S>> {
        let dims = self.dims;
        let n = dims.n;
        require_direction_independent(g, dg, dims)?;
        let gi = inverse("g", g, pt)?;
        let dx: Vec<DTensor<S>> = (0..n).map(|k| dg[Coord::X(k).flat(dims)].clone()).collect();
        let gam = christoffel(&gi, &dx, Slot::SpatialUp, Slot::SpatialDown, dims);
        let half = S::cst(0.5);
        Ok(DTensor::from_fn(&[Slot::VerticalUp, Slot::SpatialDown], dims, |ix| {
            let (i, al, j) = (ix[0], ix[1], ix[2]);
            let dt = &dg[Coord::T(al).flat(dims)];
            let mut v = S::zero();
            for m in 0..n {
                v += gam.get(&[i, j, m]) * pt.xs(m, al) + half * gi.get(&[i, m]) * dt.get(&[j, m]);
            }
            v
        }))
    }

    fn spatial_nlc_with<S: Scalar>(&self, pt: &JetPoint<S>, g: Option<(&DTensor<S>, &[DTensor<S>])>) -> Result<DTensor<S>> {
        let dims = self.dims;
        let n = dims.n;
        match &self.nlc {
            NlcSpec::QuadraticCanonical => {
                let (g, dg) = g.expect("quadratic connection needs the metric jet");
                self.quadratic_nlc(pt, g, dg)
            }
            NlcSpec::ChristoffelOfPhi(phi) => {
                let gam = self.spatial_christoffel_static(phi, pt)?;
                Ok(DTensor::from_fn(&[Slot::VerticalUp, Slot::SpatialDown], dims, |ix| {
                    let (i, al, j) = (ix[0], ix[1], ix[2]);
                    (0..n).map(|m| gam.get(&[i, j, m]) * pt.xs(m, al)).sum()
                }))
            }
            NlcSpec::UserGiven(nn) => {
                let mut out = DTensor::zeros(&[Slot::VerticalUp, Slot::SpatialDown], dims);
                for (i, a) in nn.iter().enumerate() {
                    for (al, row) in a.iter().enumerate() {
                        for (j, e) in row.iter().enumerate() {
                            out.set(&[i, al, j], ev("N", e, pt)?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Largest 1-norm condition number of `h` and `g` at `pt`.
    pub fn metric_condition(&self, pt: &JetPoint<f64>) -> Result<f64> {
        let h = self.eval_h(pt)?;
        let g = self.eval_g(pt)?;
        Ok(linalg::condition(h.data(), self.dims.p).max(linalg::condition(g.data(), self.dims.n)))
    }

    /// `(positive, negative)` eigenvalue counts of `h` and `g`.
    pub fn signatures(&self, pt: &JetPoint<f64>) -> Result<((usize, usize), (usize, usize))> {
        let h = self.eval_h(pt)?;
        let g = self.eval_g(pt)?;
        Ok((signature(h.data(), self.dims.p), signature(g.data(), self.dims.n)))
    }

    /// Symmetry, invertibility, and constant signature of `h` and `g` over
    /// `pts`, measured against the first sample.
    pub fn check_metrics(&self, pts: &[JetPoint<f64>]) -> Result<()> {
        let mut first = None;
        for pt in pts {
            self.eval_h_pair(pt)?;
            self.eval_g_pair(pt)?;
            let (sh, sg) = self.signatures(pt)?;
            match first {
                None => first = Some((sh, sg)),
                Some((fh, fg)) => {
                    if sh != fh {
                        return Err(GeometryError::SignatureChanged { which: "h", first: fh, now: sh, point: pt.to_flat() });
                    }
                    if sg != fg {
                        return Err(GeometryError::SignatureChanged { which: "g", first: fg, now: sg, point: pt.to_flat() });
                    }
                }
            }
        }
        Ok(())
    }
}

fn signature(m: &[f64], k: usize) -> (usize, usize) {
    let ev = linalg::sym_eigenvalues(m, k);
    (ev.iter().filter(|&&v| v > 0.0).count(), ev.iter().filter(|&&v| v < 0.0).count())
}

pub(crate) fn ev<S: Scalar>(name: &str, e: &ExprAst, pt: &JetPoint<S>) -> Result<S> {
    e.eval(pt).map_err(|source| GeometryError::Eval { field: name.to_string(), source })
}

fn eval_matrix<S: Scalar>(name: &str, m: &[Vec<ExprAst>], pt: &JetPoint<S>, slot: Slot) -> Result<DTensor<S>> {
    let k = m.len();
    let mut out = DTensor::zeros(&[slot, slot], pt.dims());
    for i in 0..k {
        for j in 0..k {
            let v = m[i][j].eval(pt).map_err(|source| GeometryError::Eval {
                field: format!("{name}[{}][{}]", i + 1, j + 1),
                source,
            })?;
            out.set(&[i, j], v);
        }
    }
    Ok(out)
}

pub(crate) fn inverse<S: Scalar>(which: &'static str, m: &DTensor<S>, pt: &JetPoint<S>) -> Result<DTensor<S>> {
    sym_inverse(m).map_err(|e| match e {
        TensorError::SingularMetric { det, cond } => {
            GeometryError::SingularMetric { which, det, cond, point: pt.re().to_flat() }
        }
        TensorError::NotSymmetric { asym } => GeometryError::NotSymmetric { which, asym, point: pt.re().to_flat() },
        other => GeometryError::Shape(other.to_string()),
    })
}

/// `Y_i = φ_im ẋ^m_μ X^μ`.
fn optic_y<S: Scalar>(phi: &DTensor<S>, dir: &[ExprAst], pt: &JetPoint<S>) -> Result<Vec<S>> {
    let d = pt.dims();
    let xv: Vec<S> = dir.iter().map(|e| ev("X", e, pt)).collect::<Result<_>>()?;
    let w: Vec<S> = (0..d.n).map(|m| (0..d.p).map(|mu| pt.xs(m, mu) * xv[mu]).sum()).collect();
    Ok((0..d.n).map(|i| (0..d.n).map(|m| phi.get(&[i, m]) * w[m]).sum()).collect())
}

/// `Γ^a_{bc} = ½ m^{ad}(∂_c m_{db} + ∂_b m_{dc} − ∂_d m_{bc})` from the
/// inverse metric and the partials `dm[c]` along the metric's own family.
fn christoffel<S: Scalar>(mi: &DTensor<S>, dm: &[DTensor<S>], up: Slot, dn: Slot, dims: Dims) -> DTensor<S> {
    let k = dm.len();
    let half = S::cst(0.5);
    DTensor::from_fn(&[up, dn, dn], dims, |ix| {
        let (a, b, c) = (ix[0], ix[1], ix[2]);
        let mut s = S::zero();
        for d in 0..k {
            let t = dm[c].get(&[d, b]) + dm[b].get(&[d, c]) - dm[d].get(&[b, c]);
            s += mi.get(&[a, d]) * t;
        }
        s * half
    })
}

fn temporal_nlc<S: Scalar>(hc: &DTensor<S>, pt: &JetPoint<S>) -> DTensor<S> {
    let d = pt.dims();
    DTensor::from_fn(&[Slot::VerticalUp, Slot::TemporalDown], d, |ix| {
        let (i, al, be) = (ix[0], ix[1], ix[2]);
        -(0..d.p).map(|ga| hc.get(&[ga, al, be]) * pt.xs(i, ga)).sum::<S>()
    })
}

fn require_direction_independent<S: Scalar>(g: &DTensor<S>, dg: &[DTensor<S>], dims: Dims) -> Result<()> {
    let scale = g.max_abs().max(1.0);
    for i in 0..dims.n {
        for a in 0..dims.p {
            let d = dg[Coord::Xs(i, a).flat(dims)].max_abs();
            if d > 1e-12 * scale {
                return Err(GeometryError::Regularity(format!(
                    "g depends on the partial direction {} (|∂g| = {d:e}); the canonical spatial \
                     nonlinear connection is unavailable",
                    Coord::Xs(i, a)
                )));
            }
        }
    }
    Ok(())
}

/// Point carrying two nested tangents: the inner along `a`, the outer
/// along `b`; `f(pt).eps.eps` is then `aᵀ ∇²f b`.
pub(crate) fn second_directional<S: Scalar>(
    pt: &JetPoint<S>,
    a: &[(Coord, S)],
    b: &[(Coord, S)],
) -> JetPoint<Dual<Dual<S>>> {
    let mut out: JetPoint<Dual<Dual<S>>> = pt.lift().lift();
    for &(c, w) in a {
        let mut v = out.get(c);
        v.re.eps += w;
        out.set(c, v);
    }
    for &(c, w) in b {
        let mut v = out.get(c);
        v.eps.re += w;
        out.set(c, v);
    }
    out
}
