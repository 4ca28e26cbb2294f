//! Aggregation of per-point residual tensors.

use crate::jet::JetPoint;
use crate::tensor::DTensor;

/// Floor of relative normalizations, so that identically vanishing
/// quantities do not divide by zero.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Max/mean statistics of one residual family over sample points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualStats {
    pub name: &'static str,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// `max|r| / max(scale, RELATIVE_FLOOR)` at the worst point.
    pub max_rel: f64,
    /// Point attaining `max_rel`.
    pub witness: Option<Vec<f64>>,
    pub points: usize,
}

impl ResidualStats {
    pub fn new(name: &'static str) -> Self {
        ResidualStats { name, ..Default::default() }
    }

    /// Fold in one point's residual. `scale` is the magnitude the residual
    /// is measured against.
    pub fn absorb(&mut self, residual: &DTensor<f64>, scale: f64, pt: &JetPoint<f64>) {
        let data = residual.data();
        let max = residual.max_abs();
        let mean = if data.is_empty() { 0.0 } else { data.iter().map(|v| v.abs()).sum::<f64>() / data.len() as f64 };
        let rel = max / scale.max(RELATIVE_FLOOR);
        self.max_abs = self.max_abs.max(max);
        // running mean over points
        self.points += 1;
        self.mean_abs += (mean - self.mean_abs) / self.points as f64;
        if self.witness.is_none() || rel > self.max_rel || rel.is_nan() {
            self.max_rel = if rel.is_nan() { f64::NAN } else { self.max_rel.max(rel) };
            self.witness = Some(pt.to_flat());
        }
    }
}
