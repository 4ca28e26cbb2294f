use super::{ev, inverse, second_directional, GeometryContext, GeometryError, Lagrangian, Result};
use crate::diff::ScalarField;
use crate::expr::{Deps, EvalError};
use crate::jet::{Coord, JetPoint};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::{DTensor, Slot};

/// A context's multi-time Lagrangian as a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct LagrangianField<'a> {
    pub ctx: &'a GeometryContext,
    pub lagrangian: &'a Lagrangian,
}

impl LagrangianField<'_> {
    pub fn eval_lagrangian<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        match self.lagrangian {
            Lagrangian::Expr(e) => ev("L", e, pt),
            Lagrangian::Quadratic { g, u, f } => {
                let d = pt.dims();
                let (_, hi) = self.ctx.eval_h_pair(pt)?;
                let mut acc = ev("F", f, pt)?;
                for i in 0..d.n {
                    for j in 0..d.n {
                        let gij = ev("g", &g[i][j], pt)?;
                        for a in 0..d.p {
                            for b in 0..d.p {
                                acc += hi.get(&[a, b]) * gij * pt.xs(i, a) * pt.xs(j, b);
                            }
                        }
                    }
                }
                for a in 0..d.p {
                    for i in 0..d.n {
                        acc += ev("U", &u[a][i], pt)? * pt.xs(i, a);
                    }
                }
                Ok(acc)
            }
        }
    }
}

impl ScalarField for LagrangianField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> std::result::Result<S, EvalError> {
        self.eval_lagrangian(pt).map_err(|e| EvalError::Field(e.to_string()))
    }

    fn deps(&self) -> Deps {
        match self.lagrangian {
            Lagrangian::Expr(e) => e.deps(),
            Lagrangian::Quadratic { .. } => Deps::ALL,
        }
    }
}

/// The absolute energy Lagrangian `ℰ = h^{μν} g_{mr} ẋ^m_μ ẋ^r_ν`.
#[derive(Clone, Copy, Debug)]
pub struct EnergyField<'a>(pub &'a GeometryContext);

impl EnergyField<'_> {
    pub fn energy<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        let d = pt.dims();
        let (_, hi) = self.0.eval_h_pair(pt)?;
        let g = self.0.eval_g(pt)?;
        let mut acc = S::zero();
        for mu in 0..d.p {
            for nu in 0..d.p {
                let h = hi.get(&[mu, nu]);
                if h.is_exact_zero() {
                    continue;
                }
                for m in 0..d.n {
                    for r in 0..d.n {
                        acc += h * g.get(&[m, r]) * pt.xs(m, mu) * pt.xs(r, nu);
                    }
                }
            }
        }
        Ok(acc)
    }
}

impl ScalarField for EnergyField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> std::result::Result<S, EvalError> {
        self.energy(pt).map_err(|e| EvalError::Field(e.to_string()))
    }

    fn deps(&self) -> Deps {
        Deps::ALL
    }
}

/// Outcome of the Kronecker h-regularity test.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityVerdict {
    pub regular: bool,
    /// `max |B^{(α)(β)}_{ij} − h^{αβ} ĝ_ij|`, relative to `max(1, |B|)`.
    pub max_dev: f64,
    pub witness: Option<Vec<f64>>,
    /// The extracted `ĝ` at each sample.
    pub g_hat: Vec<DTensor<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionFreeVerdict {
    pub torsion_free: bool,
    /// `max |∂N^{(i)}_{(α)j}/∂ẋ^k_γ − ∂N^{(i)}_{(α)k}/∂ẋ^j_γ|`
    pub max_violation: f64,
    pub witness: Option<Vec<f64>>,
}

fn eval_err(field: &str, e: EvalError) -> GeometryError {
    GeometryError::Eval { field: field.to_string(), source: e }
}

impl GeometryContext {
    /// `½ ∂²f/∂ẋ^i_α∂ẋ^j_β`, slots `[VD(i,α), VD(j,β)]`.
    pub fn half_hessian<F: ScalarField>(&self, f: &F, pt: &JetPoint<f64>) -> Result<DTensor<f64>> {
        let d = self.dims();
        let mut out = DTensor::zeros(&[Slot::VerticalDown, Slot::VerticalDown], d);
        let pairs: Vec<(usize, usize)> = (0..d.n).flat_map(|i| (0..d.p).map(move |a| (i, a))).collect();
        for (u, &(i, a)) in pairs.iter().enumerate() {
            for &(j, b) in &pairs[u..] {
                let pt2 = second_directional(pt, &[(Coord::Xs(i, a), 1.0)], &[(Coord::Xs(j, b), 1.0)]);
                let v = 0.5 * f.eval(&pt2).map_err(|e| eval_err("Lagrangian", e))?.eps.eps;
                out.set(&[i, a, j, b], v);
                out.set(&[j, b, i, a], v);
            }
        }
        Ok(out)
    }

    /// `ĝ_ij = (1/p) h_{μν} B^{(μ)(ν)}_{(i)(j)}`.
    fn contract_hessian(&self, b: &DTensor<f64>, h: &DTensor<f64>) -> DTensor<f64> {
        let d = self.dims();
        let k = 1.0 / d.p as f64;
        DTensor::from_fn(&[Slot::SpatialDown, Slot::SpatialDown], d, |ix| {
            let mut s = 0.0;
            for mu in 0..d.p {
                for nu in 0..d.p {
                    s += h.get(&[mu, nu]) * b.get(&[ix[0], mu, ix[1], nu]);
                }
            }
            k * s
        })
    }

    /// The vertical fundamental metric of the context's Lagrangian and its
    /// canonical contraction `g = (1/p) h_{μν} G^{(μ)(ν)}`.
    pub fn vertical_metric_from_l(&self, pt: &JetPoint<f64>) -> Result<(DTensor<f64>, DTensor<f64>)> {
        let super::MetricSource::FromLagrangian(l) = self.g_source() else {
            return Err(GeometryError::Precondition("the metric is not derived from a Lagrangian".into()));
        };
        let field = LagrangianField { ctx: self, lagrangian: l };
        let gv = self.half_hessian(&field, pt)?;
        let h = self.eval_h(pt)?;
        let g = self.contract_hessian(&gv, &h);
        let n = self.dims().n;
        let cond = linalg::condition(g.data(), n);
        if cond.is_nan() || cond > linalg::SINGULAR_COND {
            return Err(GeometryError::Regularity(format!(
                "canonical contraction of the vertical Hessian is singular at {:?} (condition {cond:e})",
                pt.to_flat()
            )));
        }
        Ok((gv, g))
    }

    /// `ℰ` at `pt`.
    pub fn energy_lagrangian(&self, pt: &JetPoint<f64>) -> Result<f64> {
        EnergyField(self).energy(pt)
    }

    /// Test whether `f`'s half-Hessian blocks factor as `h^{αβ} ĝ_ij`.
    pub fn kronecker_regularity_check<F: ScalarField>(
        &self,
        f: &F,
        pts: &[JetPoint<f64>],
        tol: f64,
    ) -> Result<RegularityVerdict> {
        let d = self.dims();
        let mut max_dev = 0.0f64;
        let mut witness = None;
        let mut g_hat = Vec::with_capacity(pts.len());
        for pt in pts {
            let b = self.half_hessian(f, pt)?;
            let (h, hi) = self.eval_h_pair(pt)?;
            let gh = self.contract_hessian(&b, &h);
            let scale = b.max_abs().max(1.0);
            let mut dev = 0.0f64;
            for i in 0..d.n {
                for j in 0..d.n {
                    for a in 0..d.p {
                        for be in 0..d.p {
                            let want = hi.get(&[a, be]) * gh.get(&[i, j]);
                            dev = dev.max((b.get(&[i, a, j, be]) - want).abs() / scale);
                        }
                    }
                }
            }
            if dev > max_dev {
                max_dev = dev;
                if dev > tol {
                    witness = Some(pt.to_flat());
                }
            }
            g_hat.push(gh);
        }
        Ok(RegularityVerdict { regular: max_dev <= tol, max_dev, witness, g_hat })
    }

    /// `∂N^{(i)}_{(α)j}/∂ẋ^k_γ` as `[VU(i,α), SD j, VD(k,γ)]`.
    pub fn nlc_vertical_jacobian(&self, pt: &JetPoint<f64>) -> Result<DTensor<f64>> {
        let d = self.dims();
        let mut out = DTensor::zeros(&[Slot::VerticalUp, Slot::SpatialDown, Slot::VerticalDown], d);
        for k in 0..d.n {
            for g in 0..d.p {
                let dn = self.spatial_nlc(&pt.seeded(Coord::Xs(k, g)))?;
                for i in 0..d.n {
                    for a in 0..d.p {
                        for j in 0..d.n {
                            out.set(&[i, a, j, k, g], dn.get(&[i, a, j]).eps);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Symmetry of the spatial nonlinear connection's vertical Jacobian
    /// under `j ↔ k` (with `γ` paired).
    pub fn nlc_torsion_free_check(&self, pts: &[JetPoint<f64>], tol: f64) -> Result<TorsionFreeVerdict> {
        let d = self.dims();
        let mut max_violation = 0.0f64;
        let mut witness = None;
        for pt in pts {
            let jac = self.nlc_vertical_jacobian(pt)?;
            let scale = jac.max_abs().max(1.0);
            let mut v = 0.0f64;
            for i in 0..d.n {
                for a in 0..d.p {
                    for j in 0..d.n {
                        for k in 0..d.n {
                            for g in 0..d.p {
                                v = v.max((jac.get(&[i, a, j, k, g]) - jac.get(&[i, a, k, j, g])).abs() / scale);
                            }
                        }
                    }
                }
            }
            if v > max_violation {
                max_violation = v;
                if v > tol {
                    witness = Some(pt.to_flat());
                }
            }
        }
        Ok(TorsionFreeVerdict { torsion_free: max_violation <= tol, max_violation, witness })
    }

    /// `g^{ij}` of the context, for callers that only need the inverse.
    pub fn g_inverse(&self, pt: &JetPoint<f64>) -> Result<DTensor<f64>> {
        let g = self.eval_g(pt)?;
        inverse("g", &g, pt)
    }
}
