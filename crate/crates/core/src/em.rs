//! Deflection d-tensors, the electromagnetic 2-form and its Maxwell
//! equations.

use crate::expr::Deps;
use crate::geometry::{
    covariant, Coeffs, Direction, FieldJet, GeometryContext, GeometryError, TensorField, TorsionSet,
};
use crate::jet::JetPoint;
use crate::residual::{ResidualStats, RELATIVE_FLOOR};
use crate::scalar::Scalar;
use crate::tensor::{DTensor, Slot};

use Slot::{SpatialDown as SD, TemporalDown as TD, VerticalDown as VD, VerticalUp as VU};

type Result<T> = std::result::Result<T, GeometryError>;

/// The canonical Liouville field `x^i_α`, slot `[VU(i,α)]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LiouvilleField;

impl TensorField for LiouvilleField {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>> {
        Ok(vec![DTensor::from_fn(&[VU], pt.dims(), |ix| pt.xs(ix[0], ix[1]))])
    }

    fn deps(&self) -> Deps {
        Deps { t: false, x: false, xs: true }
    }
}

/// `x^{(α)}_{(i)} = h^{αμ} g_im x^m_μ`, slot `[VD(i,α)]`.
#[derive(Clone, Copy, Debug)]
pub struct LoweredLiouvilleField<'a>(pub &'a GeometryContext);

impl TensorField for LoweredLiouvilleField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>> {
        let (_, hi) = self.0.eval_h_pair(pt)?;
        let g = self.0.eval_g(pt)?;
        Ok(vec![lower_vertical(&hi, &g, &DTensor::from_fn(&[VU], pt.dims(), |ix| pt.xs(ix[0], ix[1])))])
    }
}

/// Lower the leading vertical-up slot of `x` with `G = h^{-1} ⊗ g`.
fn lower_vertical<S: Scalar>(h_inv: &DTensor<S>, g: &DTensor<S>, x: &DTensor<S>) -> DTensor<S> {
    let d = x.dims();
    let mut slots = x.slots().to_vec();
    slots[0] = VD;
    let mut idx = Vec::with_capacity(x.shape().len());
    DTensor::from_fn(&slots, d, |ix| {
        let (i, al) = (ix[0], ix[1]);
        let mut s = S::zero();
        for m in 0..d.n {
            let gim = g.get(&[i, m]);
            if gim.is_exact_zero() {
                continue;
            }
            for mu in 0..d.p {
                idx.clear();
                idx.extend([m, mu]);
                idx.extend_from_slice(&ix[2..]);
                s += h_inv.get(&[al, mu]) * gim * x.get(&idx);
            }
        }
        s
    })
}

/// Raw and metrical deflection tensors at a point.
///
/// Raw (closed form): `raw_t` = `x^i_{α/β}` `[i][α][β]`, `raw_s` = `x^i_{α|j}`,
/// `raw_v` = `x^i_α|^{(β)}_{(j)}` `[i][α][j][β]`. Metrical: `dbar` =
/// `D̄^{(α)}_{(i)β}` `[i][α][β]`, `d_s` = `D^{(α)}_{(i)j}` `[i][α][j]`, `d_v` =
/// `d^{(α)(β)}_{(i)(j)}` `[i][α][j][β]`; `x_low` = `x^{(α)}_{(p)}` `[p][α]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeflectionSet<S> {
    pub raw_t: DTensor<S>,
    pub raw_s: DTensor<S>,
    pub raw_v: DTensor<S>,
    pub dbar: DTensor<S>,
    pub d_s: DTensor<S>,
    pub d_v: DTensor<S>,
    pub x_low: DTensor<S>,
}

/// Deflections from the closed forms and `G`-lowering.
pub fn deflections_closed<S: Scalar>(co: &Coeffs<S>, pt: &JetPoint<S>) -> DeflectionSet<S> {
    let d = pt.dims();
    let n = d.n;
    let raw_t = DTensor::from_fn(&[VU, TD], d, |ix| {
        let (i, al, be) = (ix[0], ix[1], ix[2]);
        (0..n).map(|m| co.gc.get(&[i, m, be]) * pt.xs(m, al)).sum()
    });
    let raw_s = DTensor::from_fn(&[VU, SD], d, |ix| {
        let (i, al, j) = (ix[0], ix[1], ix[2]);
        -co.n.get(&[i, al, j]) + (0..n).map(|m| co.lc.get(&[i, m, j]) * pt.xs(m, al)).sum::<S>()
    });
    let raw_v = DTensor::from_fn(&[VU, VD], d, |ix| {
        let (i, al, j, be) = (ix[0], ix[1], ix[2], ix[3]);
        let id = if i == j && al == be { S::one() } else { S::zero() };
        id + (0..n).map(|m| co.cc.get(&[i, j, m, be]) * pt.xs(m, al)).sum::<S>()
    });
    let liou = DTensor::from_fn(&[VU], d, |ix| pt.xs(ix[0], ix[1]));
    DeflectionSet {
        dbar: lower_vertical(&co.h_inv, &co.g, &raw_t),
        d_s: lower_vertical(&co.h_inv, &co.g, &raw_s),
        d_v: lower_vertical(&co.h_inv, &co.g, &raw_v),
        x_low: lower_vertical(&co.h_inv, &co.g, &liou),
        raw_t,
        raw_s,
        raw_v,
    }
}

/// `F^{(α)}_{(i)j}` `[i][α][j]` and `f^{(α)(β)}_{(i)(j)}` `[i][α][j][β]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmSet<S> {
    pub f_big: DTensor<S>,
    pub f_small: DTensor<S>,
}

pub fn em_from<S: Scalar>(defl: &DeflectionSet<S>) -> EmSet<S> {
    let d = defl.d_s.dims();
    let half = S::cst(0.5);
    let f_big = DTensor::from_fn(&[VD, SD], d, |ix| {
        let (i, al, j) = (ix[0], ix[1], ix[2]);
        half * (defl.d_s.get(&[i, al, j]) - defl.d_s.get(&[j, al, i]))
    });
    let f_small = DTensor::from_fn(&[VD, VD], d, |ix| {
        let (i, al, j, be) = (ix[0], ix[1], ix[2], ix[3]);
        half * (defl.d_v.get(&[i, al, j, be]) - defl.d_v.get(&[j, al, i, be]))
    });
    EmSet { f_big, f_small }
}

/// `[F, f, D̄, D, d, x_low]` as a field bundle (closed-form path).
#[derive(Clone, Copy, Debug)]
pub struct EmField<'a>(pub &'a GeometryContext);

impl TensorField for EmField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>> {
        let co = self.0.coeffs(pt)?;
        let defl = deflections_closed(&co, pt);
        let em = em_from(&defl);
        Ok(vec![em.f_big, em.f_small, defl.dbar, defl.d_s, defl.d_v, defl.x_low])
    }
}

/// Largest disagreement between the generic covariant-derivative path and
/// the closed forms, for raw and for metrical deflections.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeflectionAgreement {
    pub raw: f64,
    pub metrical: f64,
}

impl GeometryContext {
    pub fn deflection_set(&self, pt: &JetPoint<f64>) -> Result<DeflectionSet<f64>> {
        Ok(deflections_closed(&self.coeffs(pt)?, pt))
    }

    pub fn em_tensors(&self, pt: &JetPoint<f64>) -> Result<EmSet<f64>> {
        Ok(em_from(&self.deflection_set(pt)?))
    }

    /// Compare closed-form deflections with covariant derivatives of the
    /// Liouville field and of its lowered form.
    pub fn deflection_agreement(&self, pt: &JetPoint<f64>) -> Result<DeflectionAgreement> {
        let co = self.coeffs(pt)?;
        let closed = deflections_closed(&co, pt);
        let raw = FieldJet::of(&LiouvilleField, pt)?;
        let low = FieldJet::of(&LoweredLiouvilleField(self), pt)?;
        let mut out = DeflectionAgreement::default();
        for (dir, r, m) in [
            (Direction::Temporal, &closed.raw_t, &closed.dbar),
            (Direction::Spatial, &closed.raw_s, &closed.d_s),
            (Direction::Vertical, &closed.raw_v, &closed.d_v),
        ] {
            out.raw = out.raw.max(raw.covariant(&co, dir)[0].sub(r).max_abs());
            out.metrical = out.metrical.max(low.covariant(&co, dir)[0].sub(m).max_abs());
        }
        Ok(out)
    }
}

/// Residual statistics of one Maxwell equation at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationResidual {
    /// `LHS − RHS` per component.
    pub residual: DTensor<f64>,
    /// Largest magnitude among all terms entering the equation.
    pub scale: f64,
}

impl EquationResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.max_abs()
    }

    /// `max|LHS − RHS| / max(scale, floor)`.
    pub fn relative(&self) -> f64 {
        self.max_abs() / self.scale.max(RELATIVE_FLOOR)
    }
}

pub const MAXWELL_NAMES: [&str; 5] = ["F/t", "f/t", "cyclic F|k", "cyclic F|v + f|k", "cyclic f|v"];

/// Evaluation of the five Maxwell equations at one point, plus `F` and `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellPoint {
    pub equations: [EquationResidual; 5],
    pub em: EmSet<f64>,
}

/// `T^m_{αj} = −G^m_{jα}` from a `G` array.
fn t_from_gc(gc: &DTensor<f64>) -> DTensor<f64> {
    DTensor::from_fn(&[Slot::SpatialUp, TD, SD], gc.dims(), |ix| -gc.get(&[ix[0], ix[2], ix[1]]))
}

struct Scale(f64);

impl Scale {
    fn see(&mut self, v: f64) -> f64 {
        self.0 = self.0.max(v.abs());
        v
    }
}

impl GeometryContext {
    /// The five Maxwell equations at `pt`, each as displayed, residual
    /// `LHS − RHS` per component. Requires a torsion-free spatial nonlinear
    /// connection (checked by the caller).
    pub fn maxwell_at(&self, pt: &JetPoint<f64>) -> Result<MaxwellPoint> {
        self.require_curvature_budget()?;
        let d = self.dims();
        let (p, n) = (d.p, d.n);
        let cj = self.coeff_jet(pt)?;
        let tor: TorsionSet<f64> = crate::geometry::torsion_of(&cj);
        let co = &cj.val;
        let jet = FieldJet::of(&EmField(self), pt)?;
        let cov_t = jet.covariant(co, Direction::Temporal);
        let cov_s = jet.covariant(co, Direction::Spatial);
        let cov_v = jet.covariant(co, Direction::Vertical);
        let (f_t, fs_t) = (&cov_t[0], &cov_t[1]);
        let (f_s, fs_s, dbar_s) = (&cov_s[0], &cov_s[1], &cov_s[2]);
        let (f_v, fs_v, dbar_v) = (&cov_v[0], &cov_v[1], &cov_v[2]);
        let (d_s, d_v, x_low) = (&jet.val[3], &jet.val[4], &jet.val[5]);
        let t = &tor.t_ha;
        let t_s = covariant(co, t, &cj.dx.iter().map(|c| t_from_gc(&c.gc)).collect::<Vec<_>>(), Direction::Spatial);
        let t_v: Vec<DTensor<f64>> = cj.dv.iter().map(|c| t_from_gc(&c.gc)).collect();
        let cc = &co.cc;

        // 1) F_{/β} = ½ A_{i,k}{…}, components [i][α][k][β]
        let mut sc = Scale(0.0);
        let brace1 = |i: usize, al: usize, k: usize, be: usize, sc: &mut Scale| -> f64 {
            let mut v = sc.see(dbar_s.get(&[i, al, be, k]));
            for m in 0..n {
                v += sc.see(d_s.get(&[i, al, m]) * t.get(&[m, be, k]));
                for mu in 0..p {
                    v += sc.see(d_v.get(&[i, al, m, mu]) * tor.r_ts.get(&[m, mu, be, k]));
                }
            }
            for q in 0..n {
                let mut b = t_s.get(&[q, be, i, k]);
                for m in 0..n {
                    for mu in 0..p {
                        b += cc.get(&[q, k, m, mu]) * tor.r_ts.get(&[m, mu, be, i]);
                    }
                }
                v -= sc.see(b * x_low.get(&[q, al]));
            }
            v
        };
        let r1 = DTensor::from_fn(&[VD, SD, TD], d, |ix| {
            let (i, al, k, be) = (ix[0], ix[1], ix[2], ix[3]);
            let lhs = sc.see(f_t.get(&[i, al, k, be]));
            lhs - 0.5 * (brace1(i, al, k, be, &mut sc) - brace1(k, al, i, be, &mut sc))
        });
        let e1 = EquationResidual { residual: r1, scale: sc.0 };

        // 2) f_{/β} = ½ A_{i,k}{…}, components [i][α][k][γ][β]
        let mut sc = Scale(0.0);
        let brace2 = |i: usize, al: usize, k: usize, ga: usize, be: usize, sc: &mut Scale| -> f64 {
            let mut v = sc.see(dbar_v.get(&[i, al, be, k, ga]));
            for m in 0..n {
                for mu in 0..p {
                    v += sc.see(d_v.get(&[i, al, m, mu]) * tor.p_vt.get(&[m, mu, be, k, ga]));
                }
            }
            for q in 0..n {
                let mut b = t_v[k * p + ga].get(&[q, be, i]);
                for m in 0..n {
                    for mu in 0..p {
                        b += cc.get(&[q, k, m, mu]) * tor.p_vt.get(&[m, mu, be, i, ga]);
                    }
                }
                v -= sc.see(b * x_low.get(&[q, al]));
            }
            v
        };
        let r2 = DTensor::from_fn(&[VD, VD, TD], d, |ix| {
            let (i, al, k, ga, be) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
            let lhs = sc.see(fs_t.get(&[i, al, k, ga, be]));
            lhs - 0.5 * (brace2(i, al, k, ga, be, &mut sc) - brace2(k, al, i, ga, be, &mut sc))
        });
        let e2 = EquationResidual { residual: r2, scale: sc.0 };

        let cyc = |i: usize, j: usize, k: usize| [(i, j, k), (j, k, i), (k, i, j)];

        // 3) Σ F_{|k} = −½ Σ [C x_low + d] R, components [i][j][k][α]
        let mut sc = Scale(0.0);
        let r3 = DTensor::from_fn(&[SD, SD, SD, Slot::TemporalUp], d, |ix| {
            let (i0, j0, k0, al) = (ix[0], ix[1], ix[2], ix[3]);
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for (i, j, k) in cyc(i0, j0, k0) {
                lhs += sc.see(f_s.get(&[i, al, j, k]));
                for m in 0..n {
                    for mu in 0..p {
                        let mut c = d_v.get(&[i, al, m, mu]);
                        for q in 0..n {
                            c += cc.get(&[q, i, m, mu]) * x_low.get(&[q, al]);
                        }
                        rhs -= 0.5 * sc.see(c * tor.r_ss.get(&[m, mu, j, k]));
                    }
                }
            }
            lhs - rhs
        });
        let e3 = EquationResidual { residual: r3, scale: sc.0 };

        // 4) Σ {F|^{(γ)}_{(k)} + f_{|k}} = 0, components [i][j][k][α][γ]
        let mut sc = Scale(0.0);
        let r4 = DTensor::from_fn(&[SD, SD, SD, Slot::TemporalUp, Slot::TemporalUp], d, |ix| {
            let (i0, j0, k0, al, ga) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
            cyc(i0, j0, k0)
                .into_iter()
                .map(|(i, j, k)| sc.see(f_v.get(&[i, al, j, k, ga])) + sc.see(fs_s.get(&[i, al, j, ga, k])))
                .sum()
        });
        let e4 = EquationResidual { residual: r4, scale: sc.0 };

        // 5) Σ f|^{(γ)}_{(k)} = 0, components [i][j][k][α][β][γ]
        let mut sc = Scale(0.0);
        let r5 = DTensor::from_fn(
            &[SD, SD, SD, Slot::TemporalUp, Slot::TemporalUp, Slot::TemporalUp],
            d,
            |ix| {
                let (i0, j0, k0, al, be, ga) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
                cyc(i0, j0, k0)
                    .into_iter()
                    .map(|(i, j, k)| sc.see(fs_v.get(&[i, al, j, be, k, ga])))
                    .sum()
            },
        );
        let e5 = EquationResidual { residual: r5, scale: sc.0 };

        Ok(MaxwellPoint {
            equations: [e1, e2, e3, e4, e5],
            em: EmSet { f_big: jet.val[0].clone(), f_small: jet.val[1].clone() },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellReport {
    pub equations: [ResidualStats; 5],
    pub max_f_big: f64,
    pub max_f_small: f64,
    pub points: usize,
}

impl MaxwellReport {
    pub fn max_rel(&self) -> f64 {
        self.equations.iter().map(|e| e.max_rel).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.equations.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }
}

/// Tolerance for the torsion-free precondition.
pub const TORSION_FREE_TOL: f64 = 1e-9;

impl GeometryContext {
    /// All five Maxwell equations over `pts`. Fails with a precondition
    /// error unless the spatial nonlinear connection is torsion free there.
    pub fn maxwell_residuals(&self, pts: &[JetPoint<f64>]) -> Result<MaxwellReport> {
        let tf = self.nlc_torsion_free_check(pts, TORSION_FREE_TOL)?;
        if !tf.torsion_free {
            return Err(GeometryError::Precondition(format!(
                "the spatial nonlinear connection has torsion (violation {:e} at {:?})",
                tf.max_violation,
                tf.witness.unwrap_or_default()
            )));
        }
        let mut out = MaxwellReport {
            equations: MAXWELL_NAMES.map(ResidualStats::new),
            max_f_big: 0.0,
            max_f_small: 0.0,
            points: pts.len(),
        };
        for pt in pts {
            let mp = self.maxwell_at(pt)?;
            out.max_f_big = out.max_f_big.max(mp.em.f_big.max_abs());
            out.max_f_small = out.max_f_small.max(mp.em.f_small.max_abs());
            for (st, r) in out.equations.iter_mut().zip(&mp.equations) {
                st.absorb(&r.residual, r.scale, pt);
            }
        }
        Ok(out)
    }
}
