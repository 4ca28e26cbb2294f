//! Exact partial derivatives by nested forward-mode duals, and a central
//! finite-difference oracle to check them against.

use crate::dual::Dual;
use crate::expr::{Deps, EvalError, ExprAst};
use crate::jet::{Coord, Dims, JetPoint};
use crate::scalar::Scalar;

/// A scalar function on J¹(T,M), evaluable at any derivative layer.
pub trait ScalarField {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S, EvalError>;

    /// Coordinate families the field may depend on; derivatives along any
    /// other family are exactly zero.
    fn deps(&self) -> Deps;
}

impl ScalarField for ExprAst {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S, EvalError> {
        ExprAst::eval(self, pt)
    }

    fn deps(&self) -> Deps {
        ExprAst::deps(self)
    }
}

impl<F: ScalarField> ScalarField for &F {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S, EvalError> {
        (**self).eval(pt)
    }

    fn deps(&self) -> Deps {
        (**self).deps()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Taylor,
    CentralFd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffConfig {
    pub mode: Mode,
    /// Relative step factors `c` for first- and second-order differences.
    pub fd_steps: [f64; 2],
    pub max_order: usize,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { mode: Mode::Taylor, fd_steps: [1e-5, 1e-4], max_order: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("derivative of order {order} requested but the limit is {max}")]
    OrderExceeded { order: usize, max: usize },
    #[error("coordinate {coord} is out of bounds for (p, n) = ({}, {})", dims.p, dims.n)]
    BadCoord { coord: Coord, dims: Dims },
    #[error("invalid differentiation config: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl DiffConfig {
    pub fn validate(&self) -> Result<(), DiffError> {
        if !(1..=3).contains(&self.max_order) {
            return Err(DiffError::Config(format!("max_order must be in 1..=3, got {}", self.max_order)));
        }
        if self.fd_steps.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(DiffError::Config("finite-difference steps must be positive".into()));
        }
        Ok(())
    }
}

fn check_wrt(pt_dims: Dims, wrt: &[Coord]) -> Result<(), DiffError> {
    match wrt.iter().find(|c| !c.in_bounds(pt_dims)) {
        Some(&coord) => Err(DiffError::BadCoord { coord, dims: pt_dims }),
        None => Ok(()),
    }
}

/// Add a unit tangent along `c` at the innermost new layer.
fn seed_next<S: Scalar>(pt: &JetPoint<S>, c: Coord) -> JetPoint<Dual<S>> {
    let mut out = pt.lift();
    out.set(c, Dual::new(pt.get(c), S::one()));
    out
}

/// Mixed partial `∂^k f / ∂wrt[0] … ∂wrt[k-1]`, `k = wrt.len() ≤ 3`.
pub fn eval_derivs<F: ScalarField>(
    f: &F,
    pt: &JetPoint<f64>,
    wrt: &[Coord],
    cfg: &DiffConfig,
) -> Result<f64, DiffError> {
    check_wrt(pt.dims(), wrt)?;
    if wrt.len() > cfg.max_order {
        return Err(DiffError::OrderExceeded { order: wrt.len(), max: cfg.max_order });
    }
    if cfg.mode == Mode::CentralFd {
        return fd_partial(f, pt, wrt, cfg);
    }
    let deps = f.deps();
    if wrt.iter().any(|c| !deps.contains(c.family())) {
        return Ok(0.0);
    }
    Ok(match *wrt {
        [] => f.eval(pt)?,
        [a] => f.eval(&seed_next(pt, a))?.eps,
        [a, b] => f.eval(&seed_next(&seed_next(pt, a), b))?.eps.eps,
        [a, b, c] => f.eval(&seed_next(&seed_next(&seed_next(pt, a), b), c))?.eps.eps.eps,
        _ => unreachable!("order checked above"),
    })
}

/// Central-difference step for coordinate value `x`: `c·max(1, |x|)`,
/// rounded down to a power of two so `x ± h` is formed without error in
/// the step itself.
pub fn fd_step(c: f64, x: f64) -> f64 {
    let h = c * x.abs().max(1.0);
    2f64.powi(h.log2().floor() as i32)
}

/// Central-difference estimate of a partial of order ≤ 2; error O(h²).
pub fn fd_partial<F: ScalarField>(
    f: &F,
    pt: &JetPoint<f64>,
    wrt: &[Coord],
    cfg: &DiffConfig,
) -> Result<f64, DiffError> {
    check_wrt(pt.dims(), wrt)?;
    if wrt.len() > 2 {
        return Err(DiffError::OrderExceeded { order: wrt.len(), max: 2 });
    }
    fd_with_steps(f, pt, wrt, cfg.fd_steps)
}

fn fd_with_steps<F: ScalarField>(
    f: &F,
    pt: &JetPoint<f64>,
    wrt: &[Coord],
    steps: [f64; 2],
) -> Result<f64, DiffError> {
    let ev = |p: &JetPoint<f64>| f.eval(p).map_err(DiffError::from);
    Ok(match *wrt {
        [] => ev(pt)?,
        [a] => {
            let h = fd_step(steps[0], pt.get(a));
            (ev(&pt.shifted(a, h))? - ev(&pt.shifted(a, -h))?) / (2.0 * h)
        }
        [a, b] if a == b => {
            let h = fd_step(steps[1], pt.get(a));
            (ev(&pt.shifted(a, h))? - 2.0 * ev(pt)? + ev(&pt.shifted(a, -h))?) / (h * h)
        }
        [a, b] => {
            let ha = fd_step(steps[1], pt.get(a));
            let hb = fd_step(steps[1], pt.get(b));
            let at = |sa: f64, sb: f64| ev(&pt.shifted(a, sa * ha).shifted(b, sb * hb));
            (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * ha * hb)
        }
        _ => return Err(DiffError::OrderExceeded { order: wrt.len(), max: 2 }),
    })
}

/// Worst disagreement between Taylor and finite-difference partials.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    /// `max |taylor − fd| / max(1, |taylor|)` over every first and second partial.
    pub max_rel_dev: f64,
    pub max_abs_dev: f64,
    pub comparisons: usize,
    /// Partials where either mode failed to produce a finite value.
    pub nan_count: usize,
    /// Point index and coordinates of the worst comparison.
    pub worst: Option<(usize, Vec<Coord>)>,
}

impl AgreementReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.nan_count == 0 && self.max_rel_dev <= tol
    }
}

/// Compare Taylor and FD modes over all first and second partials along
/// the field's declared dependencies.
pub fn check_grad<F: ScalarField>(f: &F, pts: &[JetPoint<f64>], cfg: &DiffConfig) -> AgreementReport {
    assert!(!pts.is_empty(), "check_grad needs at least one point");
    let taylor = DiffConfig { mode: Mode::Taylor, max_order: 2, ..*cfg };
    let deps = f.deps();
    let mut rep = AgreementReport { max_rel_dev: 0.0, max_abs_dev: 0.0, comparisons: 0, nan_count: 0, worst: None };
    for (k, pt) in pts.iter().enumerate() {
        let coords: Vec<Coord> = pt.dims().coords().filter(|c| deps.contains(c.family())).collect();
        let mut wrts: Vec<Vec<Coord>> = coords.iter().map(|&c| vec![c]).collect();
        for (a, &ca) in coords.iter().enumerate() {
            for &cb in &coords[a..] {
                wrts.push(vec![ca, cb]);
            }
        }
        for wrt in wrts {
            rep.comparisons += 1;
            let exact = eval_derivs(f, pt, &wrt, &taylor);
            let approx = fd_partial(f, pt, &wrt, cfg);
            let (Ok(e), Ok(a)) = (exact, approx) else {
                rep.nan_count += 1;
                continue;
            };
            if !(e.is_finite() && a.is_finite()) {
                rep.nan_count += 1;
                continue;
            }
            let abs = (e - a).abs();
            let rel = abs / e.abs().max(1.0);
            rep.max_abs_dev = rep.max_abs_dev.max(abs);
            if rel > rep.max_rel_dev || rep.worst.is_none() {
                rep.max_rel_dev = rep.max_rel_dev.max(rel);
                rep.worst = Some((k, wrt));
            }
        }
    }
    rep
}
