//! Seeded uniform sampling of jet points with metric-conditioning rejection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{GeometryContext, GeometryError};
use crate::jet::JetPoint;

/// Name of the generator, recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64";
/// Points whose metrics exceed this 1-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Per-family coordinate ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub xs: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { t: (-1.0, 1.0), x: (-1.0, 1.0), xs: (-1.0, 1.0) }
    }
}

impl SampleBox {
    pub fn validate(&self) -> Result<(), String> {
        for (name, (lo, hi)) in [("t", self.t), ("x", self.x), ("xs", self.xs)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(format!("box range for {name} must be finite with lo ≤ hi, got [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SamplingError {
    #[error("only {got} of {want} points accepted after {attempts} draws (metrics ill-conditioned on the box)")]
    Exhausted { got: usize, want: usize, attempts: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// `count` points drawn uniformly per coordinate (t, then x, then ẋ in
/// `[i][α]` order), skipping draws where `h` or `g` is near-singular.
pub fn sample_points(
    ctx: &GeometryContext,
    seed: u64,
    count: usize,
    bx: &SampleBox,
) -> Result<Vec<JetPoint<f64>>, SamplingError> {
    let dims = ctx.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = 100 * count.max(1);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == max_attempts {
            return Err(SamplingError::Exhausted { got: out.len(), want: count, attempts });
        }
        attempts += 1;
        let mut v = Vec::with_capacity(dims.n_coords());
        v.extend((0..dims.p).map(|_| draw(&mut rng, bx.t)));
        v.extend((0..dims.n).map(|_| draw(&mut rng, bx.x)));
        v.extend((0..dims.n * dims.p).map(|_| draw(&mut rng, bx.xs)));
        let pt = JetPoint::from_flat(dims, &v);
        if ctx.metric_condition(&pt)? <= MAX_CONDITION {
            out.push(pt);
        }
    }
    Ok(out)
}
