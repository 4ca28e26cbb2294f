use super::coeffs::{covariant, CoeffJet, Coeffs, Direction};
use super::{GeometryContext, Result};
use crate::jet::{Dims, JetPoint};
use crate::scalar::Scalar;
use crate::tensor::{DTensor, Slot};

use Slot::{SpatialDown as SD, SpatialUp as SU, TemporalDown as TD, TemporalUp as TU, VerticalDown as VD, VerticalUp as VU};

/// The eight torsion blocks of the Cartan canonical connection.
///
/// Storage: `t_ha` = `T^m_{αj}` `[m][α][j]`; `p_vh` = `P^{m(β)}_{i(j)}`
/// `[m][i][j][β]`; `p_vt` = `P^{(m)(β)}_{(μ)α(j)}` `[m][μ][α][j][β]`;
/// `p_vs` = `P^{(m)(β)}_{(μ)i(j)}` `[m][μ][i][j][β]`; `r_tt`, `r_ts`, `r_ss` =
/// `R^{(m)}_{(μ)··}` `[m][μ][·][·]`; `s_vv` = `S^{(m)(α)(β)}_{(μ)(i)(j)}`
/// `[m][μ][i][α][j][β]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionSet<S> {
    pub t_ha: DTensor<S>,
    pub p_vh: DTensor<S>,
    pub p_vt: DTensor<S>,
    pub p_vs: DTensor<S>,
    pub r_tt: DTensor<S>,
    pub r_ts: DTensor<S>,
    pub r_ss: DTensor<S>,
    pub s_vv: DTensor<S>,
}

/// The seven effective curvature blocks.
///
/// Storage: `h` = `H^α_{ηβγ}`; `r_tt` = `R^l_{iβγ}`; `r_ts` = `R^l_{iβk}`;
/// `r_ss` = `R^l_{ijk}`; `p_t` = `P^{l(γ)}_{iβ(k)}` `[l][i][β][k][γ]`;
/// `p_s` = `P^{l(γ)}_{ij(k)}` `[l][i][j][k][γ]`; `s_vv` =
/// `S^{l(β)(γ)}_{i(j)(k)}` `[l][i][j][β][k][γ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSet<S> {
    pub h: DTensor<S>,
    pub r_tt: DTensor<S>,
    pub r_ts: DTensor<S>,
    pub r_ss: DTensor<S>,
    pub p_t: DTensor<S>,
    pub p_s: DTensor<S>,
    pub s_vv: DTensor<S>,
}

/// Ricci components.
///
/// `h` = `H_{αβ}`; `p_sv` = `P^{(α)}_{i(j)}` (carrying the minus sign)
/// `[i][j][α]`; `p_vs` = `P^{(α)}_{(i)j}` `[i][α][j]`; `p_vt` =
/// `P^{(α)}_{(i)β}` `[i][α][β]`; `s` = `S^{(α)(β)}_{(i)(j)}` `[i][α][j][β]`;
/// `r_st` = `R_{iα}`; `r_ss` = `R_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RicciSet<S> {
    pub h: DTensor<S>,
    pub p_sv: DTensor<S>,
    pub p_vs: DTensor<S>,
    pub p_vt: DTensor<S>,
    pub s: DTensor<S>,
    pub r_st: DTensor<S>,
    pub r_ss: DTensor<S>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarSet<S> {
    pub h: S,
    pub r: S,
    pub s: S,
}

impl<S: Scalar> ScalarSet<S> {
    /// `Sc = H + R + S`.
    pub fn total(&self) -> S {
        self.h + self.r + self.s
    }
}

/// Everything curvature-related at one point.
#[derive(Clone, Debug)]
pub struct Curvature<S> {
    pub coeffs: Coeffs<S>,
    pub torsion: TorsionSet<S>,
    pub curvature: CurvatureSet<S>,
    pub ricci: RicciSet<S>,
    pub scalars: ScalarSet<S>,
}

/// Largest `|X_{ij…} + X_{ji…}|` for each lowered curvature block, in the
/// order H, R(ββ), R(βk), R(jk), P(β), P(k), S; plus the largest lowered
/// component for scale.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymmetryResiduals {
    pub residual: [f64; 7],
    pub scale: [f64; 7],
}

impl AntisymmetryResiduals {
    pub const NAMES: [&'static str; 7] = ["H", "R_tt", "R_ts", "R_ss", "P_t", "P_s", "S"];

    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

fn delta<S: Scalar>(a: usize, b: usize) -> S {
    if a == b {
        S::one()
    } else {
        S::zero()
    }
}

pub(crate) fn torsion_from<S: Scalar>(j: &CoeffJet<S>) -> TorsionSet<S> {
    let co = &j.val;
    let d = co.dims();
    let t_ha = DTensor::from_fn(&[SU, TD, SD], d, |ix| -co.gc.get(&[ix[0], ix[2], ix[1]]));
    let p_vh = co.cc.clone();
    let p_vt = DTensor::from_fn(&[VU, TD, VD], d, |ix| {
        let (m, mu, al, jj, be) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        j.dv(jj, be).m.get(&[m, mu, al]) - delta::<S>(be, mu) * co.gc.get(&[m, jj, al])
            + delta::<S>(m, jj) * co.hc.get(&[be, mu, al])
    });
    let p_vs = DTensor::from_fn(&[VU, SD, VD], d, |ix| {
        let (m, mu, i, jj, be) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        j.dv(jj, be).n.get(&[m, mu, i]) - delta::<S>(be, mu) * co.lc.get(&[m, jj, i])
    });
    let r_tt = DTensor::from_fn(&[VU, TD, TD], d, |ix| {
        let (m, mu, al, be) = (ix[0], ix[1], ix[2], ix[3]);
        j.dt[be].m.get(&[m, mu, al]) - j.dt[al].m.get(&[m, mu, be])
    });
    let r_ts = DTensor::from_fn(&[VU, TD, SD], d, |ix| {
        let (m, mu, al, jj) = (ix[0], ix[1], ix[2], ix[3]);
        j.dx[jj].m.get(&[m, mu, al]) - j.dt[al].n.get(&[m, mu, jj])
    });
    let r_ss = DTensor::from_fn(&[VU, SD, SD], d, |ix| {
        let (m, mu, i, jj) = (ix[0], ix[1], ix[2], ix[3]);
        j.dx[jj].n.get(&[m, mu, i]) - j.dx[i].n.get(&[m, mu, jj])
    });
    let s_vv = DTensor::from_fn(&[VU, VD, VD], d, |ix| {
        let (m, mu, i, al, jj, be) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        delta::<S>(al, mu) * co.cc.get(&[m, i, jj, be]) - delta::<S>(be, mu) * co.cc.get(&[m, jj, i, al])
    });
    TorsionSet { t_ha, p_vh, p_vt, p_vs, r_tt, r_ts, r_ss, s_vv }
}

pub(crate) fn curvature_from<S: Scalar>(j: &CoeffJet<S>, t: &TorsionSet<S>) -> CurvatureSet<S> {
    let co = &j.val;
    let d = co.dims();
    let (p, n) = (d.p, d.n);
    let hc = &co.hc;
    let gc = &co.gc;
    let lc = &co.lc;
    let cc = &co.cc;
    // C^{l(μ)}_{i(m)} X^{(m)}_{(μ)…}
    let c_contract = |l: usize, i: usize, x: &dyn Fn(usize, usize) -> S| -> S {
        let mut s = S::zero();
        for m in 0..n {
            for mu in 0..p {
                let c = cc.get(&[l, i, m, mu]);
                if !c.is_exact_zero() {
                    s += c * x(m, mu);
                }
            }
        }
        s
    };

    let h = DTensor::from_fn(&[TU, TD, TD, TD], d, |ix| {
        let (a, e, b, g) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = j.dt[g].hc.get(&[a, e, b]) - j.dt[b].hc.get(&[a, e, g]);
        for mu in 0..p {
            s += hc.get(&[mu, e, b]) * hc.get(&[a, mu, g]) - hc.get(&[mu, e, g]) * hc.get(&[a, mu, b]);
        }
        s
    });
    let r_tt = DTensor::from_fn(&[SU, SD, TD, TD], d, |ix| {
        let (l, i, b, g) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = j.dt[g].gc.get(&[l, i, b]) - j.dt[b].gc.get(&[l, i, g]);
        for m in 0..n {
            s += gc.get(&[m, i, b]) * gc.get(&[l, m, g]) - gc.get(&[m, i, g]) * gc.get(&[l, m, b]);
        }
        s + c_contract(l, i, &|m, mu| t.r_tt.get(&[m, mu, b, g]))
    });
    let r_ts = DTensor::from_fn(&[SU, SD, TD, SD], d, |ix| {
        let (l, i, b, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = j.dx[k].gc.get(&[l, i, b]) - j.dt[b].lc.get(&[l, i, k]);
        for m in 0..n {
            s += gc.get(&[m, i, b]) * lc.get(&[l, m, k]) - lc.get(&[m, i, k]) * gc.get(&[l, m, b]);
        }
        s + c_contract(l, i, &|m, mu| t.r_ts.get(&[m, mu, b, k]))
    });
    let r_ss = DTensor::from_fn(&[SU, SD, SD, SD], d, |ix| {
        let (l, i, jj, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = j.dx[k].lc.get(&[l, i, jj]) - j.dx[jj].lc.get(&[l, i, k]);
        for m in 0..n {
            s += lc.get(&[m, i, jj]) * lc.get(&[l, m, k]) - lc.get(&[m, i, k]) * lc.get(&[l, m, jj]);
        }
        s + c_contract(l, i, &|m, mu| t.r_ss.get(&[m, mu, jj, k]))
    });

    // C_{/β} and C_{|j}, new index appended: [l][i][k][γ][β] and [l][i][k][γ][j]
    let c_t = covariant(co, cc, &j.dt.iter().map(|c| c.cc.clone()).collect::<Vec<_>>(), Direction::Temporal);
    let c_s = covariant(co, cc, &j.dx.iter().map(|c| c.cc.clone()).collect::<Vec<_>>(), Direction::Spatial);
    let p_t = DTensor::from_fn(&[SU, SD, TD, VD], d, |ix| {
        let (l, i, b, k, g) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        j.dv(k, g).gc.get(&[l, i, b]) - c_t.get(&[l, i, k, g, b])
            + c_contract(l, i, &|m, mu| t.p_vt.get(&[m, mu, b, k, g]))
    });
    let p_s = DTensor::from_fn(&[SU, SD, SD, VD], d, |ix| {
        let (l, i, jj, k, g) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        j.dv(k, g).lc.get(&[l, i, jj]) - c_s.get(&[l, i, k, g, jj])
            + c_contract(l, i, &|m, mu| t.p_vs.get(&[m, mu, jj, k, g]))
    });
    let s_vv = DTensor::from_fn(&[SU, SD, VD, VD], d, |ix| {
        let (l, i, jj, b, k, g) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        let mut s = j.dv(k, g).cc.get(&[l, i, jj, b]) - j.dv(jj, b).cc.get(&[l, i, k, g]);
        for m in 0..n {
            s += cc.get(&[m, i, jj, b]) * cc.get(&[l, m, k, g]) - cc.get(&[m, i, k, g]) * cc.get(&[l, m, jj, b]);
        }
        s
    });
    CurvatureSet { h, r_tt, r_ts, r_ss, p_t, p_s, s_vv }
}

pub(crate) fn ricci_from<S: Scalar>(c: &CurvatureSet<S>, d: Dims) -> RicciSet<S> {
    let (p, n) = (d.p, d.n);
    let h = DTensor::from_fn(&[TD, TD], d, |ix| (0..p).map(|mu| c.h.get(&[mu, ix[0], ix[1], mu])).sum());
    let p_sv = DTensor::from_fn(&[SD, VD], d, |ix| {
        let (i, jj, al) = (ix[0], ix[1], ix[2]);
        -(0..n).map(|m| c.p_s.get(&[m, i, m, jj, al])).sum::<S>()
    });
    let p_vs = DTensor::from_fn(&[VD, SD], d, |ix| {
        let (i, al, jj) = (ix[0], ix[1], ix[2]);
        (0..n).map(|m| c.p_s.get(&[m, i, jj, m, al])).sum()
    });
    let p_vt = DTensor::from_fn(&[VD, TD], d, |ix| {
        let (i, al, be) = (ix[0], ix[1], ix[2]);
        (0..n).map(|m| c.p_t.get(&[m, i, be, m, al])).sum()
    });
    let s = DTensor::from_fn(&[VD, VD], d, |ix| {
        let (i, al, jj, be) = (ix[0], ix[1], ix[2], ix[3]);
        (0..n).map(|m| c.s_vv.get(&[m, i, jj, be, m, al])).sum()
    });
    let r_st = DTensor::from_fn(&[SD, TD], d, |ix| (0..n).map(|m| c.r_ts.get(&[m, ix[0], ix[1], m])).sum());
    let r_ss = DTensor::from_fn(&[SD, SD], d, |ix| (0..n).map(|m| c.r_ss.get(&[m, ix[0], ix[1], m])).sum());
    RicciSet { h, p_sv, p_vs, p_vt, s, r_st, r_ss }
}

pub(crate) fn scalars_from<S: Scalar>(r: &RicciSet<S>, co: &Coeffs<S>) -> ScalarSet<S> {
    let d = co.dims();
    let (p, n) = (d.p, d.n);
    let mut h = S::zero();
    for a in 0..p {
        for b in 0..p {
            h += co.h_inv.get(&[a, b]) * r.h.get(&[a, b]);
        }
    }
    let mut rr = S::zero();
    for i in 0..n {
        for j in 0..n {
            rr += co.g_inv.get(&[i, j]) * r.r_ss.get(&[i, j]);
        }
    }
    let mut s = S::zero();
    for a in 0..p {
        for b in 0..p {
            for i in 0..n {
                for j in 0..n {
                    s += co.h.get(&[a, b]) * co.g_inv.get(&[i, j]) * r.s.get(&[i, a, j, b]);
                }
            }
        }
    }
    ScalarSet { h, r: rr, s }
}

/// `max |Y_{ij…} + Y_{ji…}|` with `Y_{ij…} = m_{jk} X^k_{i…}`, for a block
/// stored with its up and first down index leading.
fn lowered_antisymmetry(block: &DTensor<f64>, metric: &DTensor<f64>) -> (f64, f64) {
    let e = block.shape()[0];
    let rest: usize = block.shape()[2..].iter().product();
    let x = block.data();
    let at = |l: usize, i: usize, r: usize| x[(l * e + i) * rest + r];
    let y = |i: usize, j: usize, r: usize| (0..e).map(|m| metric.get(&[j, m]) * at(m, i, r)).sum::<f64>();
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..e {
        for j in 0..e {
            for r in 0..rest {
                let a = y(i, j, r);
                res = res.max((a + y(j, i, r)).abs());
                scale = scale.max(a.abs());
            }
        }
    }
    (res, scale)
}

impl CurvatureSet<f64> {
    /// The seven curvature antisymmetry identities after lowering.
    pub fn antisymmetry(&self, co: &Coeffs<f64>) -> AntisymmetryResiduals {
        let blocks = [
            (&self.h, &co.h),
            (&self.r_tt, &co.g),
            (&self.r_ts, &co.g),
            (&self.r_ss, &co.g),
            (&self.p_t, &co.g),
            (&self.p_s, &co.g),
            (&self.s_vv, &co.g),
        ];
        let mut residual = [0.0; 7];
        let mut scale = [0.0; 7];
        for (k, (b, m)) in blocks.iter().enumerate() {
            (residual[k], scale[k]) = lowered_antisymmetry(b, m);
        }
        AntisymmetryResiduals { residual, scale }
    }

    pub fn blocks(&self) -> [(&'static str, &DTensor<f64>); 7] {
        [
            ("H", &self.h),
            ("R_tt", &self.r_tt),
            ("R_ts", &self.r_ts),
            ("R_ss", &self.r_ss),
            ("P_t", &self.p_t),
            ("P_s", &self.p_s),
            ("S", &self.s_vv),
        ]
    }
}

impl<S: Scalar> TorsionSet<S> {
    pub fn blocks(&self) -> [(&'static str, &DTensor<S>); 8] {
        [
            ("T_ha", &self.t_ha),
            ("P_vh", &self.p_vh),
            ("P_vt", &self.p_vt),
            ("P_vs", &self.p_vs),
            ("R_tt", &self.r_tt),
            ("R_ts", &self.r_ts),
            ("R_ss", &self.r_ss),
            ("S_vv", &self.s_vv),
        ]
    }
}

impl<S: Scalar> RicciSet<S> {
    pub fn blocks(&self) -> [(&'static str, &DTensor<S>); 7] {
        [
            ("H", &self.h),
            ("P_sv", &self.p_sv),
            ("P_vs", &self.p_vs),
            ("P_vt", &self.p_vt),
            ("S", &self.s),
            ("R_st", &self.r_st),
            ("R_ss", &self.r_ss),
        ]
    }
}

impl GeometryContext {
    pub fn torsion_set<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<TorsionSet<S>> {
        Ok(torsion_from(&self.coeff_jet(pt)?))
    }

    /// Torsion, curvature, Ricci and scalar curvature at `pt`.
    pub fn curvature<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Curvature<S>> {
        self.require_curvature_budget()?;
        let j = self.coeff_jet(pt)?;
        let torsion = torsion_from(&j);
        let curvature = curvature_from(&j, &torsion);
        let ricci = ricci_from(&curvature, self.dims());
        let scalars = scalars_from(&ricci, &j.val);
        Ok(Curvature { coeffs: j.val, torsion, curvature, ricci, scalars })
    }
}
