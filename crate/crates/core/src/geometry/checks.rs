use super::coeffs::{Direction, FieldJet, TensorField};
use super::{GeometryContext, Result};
use crate::expr::Deps;
use crate::jet::JetPoint;
use crate::scalar::Scalar;
use crate::tensor::DTensor;

/// `[h_{αβ}, g_ij]` as a field bundle.
#[derive(Clone, Copy, Debug)]
pub struct MetricField<'a>(pub &'a GeometryContext);

impl TensorField for MetricField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>> {
        Ok(vec![self.0.eval_h(pt)?, self.0.eval_g(pt)?])
    }

    fn deps(&self) -> Deps {
        let h: Deps = self.0.h_exprs().iter().flatten().fold(Deps::NONE, |d, e| d.union(e.deps()));
        h.union(self.0.g_deps())
    }
}

/// Largest covariant derivative of each metric, all of which vanish for
/// the Cartan canonical connection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricityResiduals {
    /// `g_{ij|k}`
    pub g_spatial: f64,
    /// `g_ij|^{(γ)}_{(k)}`
    pub g_vertical: f64,
    /// `h_{αβ/γ}`
    pub h_temporal: f64,
    /// `h_{αβ|k}`
    pub h_spatial: f64,
    /// `h_{αβ}|^{(γ)}_{(k)}`
    pub h_vertical: f64,
    /// `g_{ij/γ}`
    pub g_temporal: f64,
}

impl MetricityResiduals {
    pub const NAMES: [&'static str; 6] = ["g|k", "g|v", "h/t", "h|k", "h|v", "g/t"];

    pub fn values(&self) -> [f64; 6] {
        [self.g_spatial, self.g_vertical, self.h_temporal, self.h_spatial, self.h_vertical, self.g_temporal]
    }

    pub fn max(&self) -> f64 {
        self.values().into_iter().fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &MetricityResiduals) {
        self.g_spatial = self.g_spatial.max(o.g_spatial);
        self.g_vertical = self.g_vertical.max(o.g_vertical);
        self.h_temporal = self.h_temporal.max(o.h_temporal);
        self.h_spatial = self.h_spatial.max(o.h_spatial);
        self.h_vertical = self.h_vertical.max(o.h_vertical);
        self.g_temporal = self.g_temporal.max(o.g_temporal);
    }
}

/// Largest violation of each structural symmetry of the coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymmetryResiduals {
    /// `H^γ_{αβ} − H^γ_{βα}`
    pub h: f64,
    /// `L^i_{jk} − L^i_{kj}`
    pub l: f64,
    /// `C^{i(γ)}_{j(k)} − C^{i(γ)}_{k(j)}`
    pub c: f64,
}

impl GeometryContext {
    pub fn metricity(&self, pt: &JetPoint<f64>) -> Result<MetricityResiduals> {
        let co = self.coeffs(pt)?;
        let jet = FieldJet::of(&MetricField(self), pt)?;
        let t = jet.covariant(&co, Direction::Temporal);
        let s = jet.covariant(&co, Direction::Spatial);
        let v = jet.covariant(&co, Direction::Vertical);
        Ok(MetricityResiduals {
            g_spatial: s[1].max_abs(),
            g_vertical: v[1].max_abs(),
            h_temporal: t[0].max_abs(),
            h_spatial: s[0].max_abs(),
            h_vertical: v[0].max_abs(),
            g_temporal: t[1].max_abs(),
        })
    }

    pub fn coefficient_symmetries(&self, pt: &JetPoint<f64>) -> Result<SymmetryResiduals> {
        let co = self.coeffs(pt)?;
        let d = self.dims();
        let mut r = SymmetryResiduals::default();
        for g in 0..d.p {
            for a in 0..d.p {
                for b in 0..d.p {
                    r.h = r.h.max((co.hc.get(&[g, a, b]) - co.hc.get(&[g, b, a])).abs());
                }
            }
        }
        for i in 0..d.n {
            for j in 0..d.n {
                for k in 0..d.n {
                    r.l = r.l.max((co.lc.get(&[i, j, k]) - co.lc.get(&[i, k, j])).abs());
                    for g in 0..d.p {
                        r.c = r.c.max((co.cc.get(&[i, j, k, g]) - co.cc.get(&[i, k, j, g])).abs());
                    }
                }
            }
        }
        Ok(r)
    }
}
