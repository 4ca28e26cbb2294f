//! Check execution and report assembly.

use std::time::Instant;

use jetlag::diff::{check_grad, DiffConfig, ScalarField};
use jetlag::em::{MAXWELL_NAMES, TORSION_FREE_TOL};
use jetlag::expr::{Deps, EvalError};
use jetlag::geometry::{EnergyField, LagrangianField, MetricSource, MetricityResiduals, NlcSpec};
use jetlag::gravity::{GravityJet, CONSERVATION_NAMES, IDENTITY_NAMES};
use jetlag::residual::RELATIVE_FLOOR;
use jetlag::sampling::{GENERATOR, MAX_CONDITION};
use jetlag::{DTensor, GeometryContext, JetPoint, Scalar};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BoxCfg, CheckKind, DumpFamily, RawConfig, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

/// Which statistic a component's tolerance applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MaxAbs,
    MaxRel,
}

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub name: String,
    pub status: Status,
    pub measure: Measure,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_rel: f64,
    /// Point attaining the measured maximum.
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointError {
    /// Index into the report's `points`; absent for whole-run preconditions.
    pub point: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: CheckKind,
    pub status: Status,
    pub tolerance: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_rel: f64,
    /// Worst point of the worst failing or flagged component.
    pub witness: Option<Vec<f64>>,
    pub components: Vec<Component>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<PointError>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub status: Status,
    pub pass: usize,
    pub fail: usize,
    pub flagged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sampling {
    pub generator: &'static str,
    pub procedure: String,
    pub seed: Option<u64>,
    pub explicit: usize,
    pub sampled: usize,
    #[serde(rename = "box")]
    pub bx: BoxCfg,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RawConfig,
    pub space: String,
    pub sampling: Sampling,
    /// Coordinates in the order `t[1..p], x[1..n], xs[i][α]` (row-major).
    pub points: Vec<Vec<f64>>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dumps: Vec<Value>,
    /// Kept last so that reports of repeated runs differ only in this line.
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.summary.status == Status::Fail
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Policy {
    Assert,
    /// Flag rather than fail unless `g` was verified direction independent.
    FlagIfDirectionDependent,
    /// A classification; failing only when the space relies on regularity.
    Classify { must_be_regular: bool },
}

struct Sample {
    name: String,
    policy: Policy,
    max: f64,
    mean: f64,
    /// `None` for absolute measures.
    scale: Option<f64>,
}

impl Sample {
    fn abs(name: impl Into<String>, v: f64) -> Self {
        Sample { name: name.into(), policy: Policy::Assert, max: v, mean: v, scale: None }
    }

    fn tensor(name: impl Into<String>, policy: Policy, r: &DTensor<f64>, scale: f64) -> Self {
        let d = r.data();
        let mean = if d.is_empty() { 0.0 } else { d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64 };
        let max = if r.is_finite() { r.max_abs() } else { f64::NAN };
        Sample { name: name.into(), policy, max, mean, scale: Some(scale) }
    }

    fn with(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }
}

fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

struct Acc {
    name: String,
    policy: Policy,
    measure: Measure,
    max_abs: f64,
    mean_abs: f64,
    max_rel: f64,
    measured: f64,
    witness: Option<Vec<f64>>,
    points: usize,
}

impl Acc {
    fn new(s: &Sample) -> Self {
        Acc {
            name: s.name.clone(),
            policy: s.policy,
            measure: if s.scale.is_some() { Measure::MaxRel } else { Measure::MaxAbs },
            max_abs: 0.0,
            mean_abs: 0.0,
            max_rel: 0.0,
            measured: 0.0,
            witness: None,
            points: 0,
        }
    }

    fn absorb(&mut self, s: &Sample, pt: &JetPoint<f64>) {
        let rel = match s.scale {
            Some(sc) => s.max / sc.max(RELATIVE_FLOOR),
            None => s.max,
        };
        let m = if self.measure == Measure::MaxRel { rel } else { s.max };
        self.max_abs = worst(self.max_abs, s.max);
        self.max_rel = worst(self.max_rel, rel);
        self.points += 1;
        self.mean_abs += (s.mean - self.mean_abs) / self.points as f64;
        if self.witness.is_none() || m > self.measured || (m.is_nan() && !self.measured.is_nan()) {
            self.measured = m;
            self.witness = Some(pt.to_flat());
        }
    }

    fn finish(self, tol: f64, direction_independent: bool) -> Component {
        let ok = self.measured <= tol;
        let (status, verdict) = match self.policy {
            Policy::Assert => (if ok { Status::Pass } else { Status::Fail }, None),
            Policy::FlagIfDirectionDependent => (
                match (ok, direction_independent) {
                    (true, _) => Status::Pass,
                    (false, true) => Status::Fail,
                    (false, false) => Status::Flagged,
                },
                None,
            ),
            Policy::Classify { must_be_regular } => (
                if ok || !must_be_regular { Status::Pass } else { Status::Fail },
                Some(if ok { "regular" } else { "irregular" }),
            ),
        };
        Component {
            name: self.name,
            status,
            measure: self.measure,
            max_abs: self.max_abs,
            mean_abs: self.mean_abs,
            max_rel: self.max_rel,
            witness: self.witness,
            verdict,
        }
    }
}

/// The `(i, j)` entry of the realized spatial metric as a scalar field.
struct MetricEntry<'a> {
    ctx: &'a GeometryContext,
    i: usize,
    j: usize,
}

impl ScalarField for MetricEntry<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S, EvalError> {
        self.ctx.eval_g(pt).map(|g| g.get(&[self.i, self.j])).map_err(|e| EvalError::Field(e.to_string()))
    }

    fn deps(&self) -> Deps {
        self.ctx.g_deps()
    }
}

fn grad_samples(ctx: &GeometryContext, pt: &JetPoint<f64>) -> Vec<Sample> {
    let cfg = DiffConfig::default();
    let one = std::slice::from_ref(pt);
    let measure = |name: String, r: jetlag::diff::AgreementReport| {
        Sample::abs(name, if r.nan_count > 0 { f64::NAN } else { r.max_rel_dev })
    };
    let d = ctx.dims();
    let mut out = Vec::new();
    for a in 0..d.p {
        for b in a..d.p {
            out.push(measure(format!("h[{}][{}]", a + 1, b + 1), check_grad(&ctx.h_exprs()[a][b], one, &cfg)));
        }
    }
    for i in 0..d.n {
        for j in i..d.n {
            out.push(measure(format!("g[{}][{}]", i + 1, j + 1), check_grad(&MetricEntry { ctx, i, j }, one, &cfg)));
        }
    }
    if let MetricSource::FromLagrangian(l) = ctx.g_source() {
        out.push(measure("L".into(), check_grad(&LagrangianField { ctx, lagrangian: l }, one, &cfg)));
    }
    out.push(measure("energy".into(), check_grad(&EnergyField(ctx), one, &cfg)));
    out
}

type PointResult = Result<Vec<Sample>, String>;

struct PointEval {
    direction_independent: bool,
    results: Vec<PointResult>,
}

fn eval_point(ctx: &GeometryContext, pt: &JetPoint<f64>, checks: &[(CheckKind, f64)], skip_maxwell: bool) -> PointEval {
    let needs_jet = checks.iter().any(|(c, _)| matches!(c, CheckKind::Einstein | CheckKind::Conservation | CheckKind::NaturalForm));
    let jet: Option<Result<GravityJet, String>> = needs_jet.then(|| ctx.gravity_jet(pt).map_err(|e| e.to_string()));
    let jet = || jet.as_ref().expect("computed when needed").as_ref().map_err(|e| e.clone());
    let direction_independent = ctx.g_direction_independent_at(pt).unwrap_or(false);
    let dd = Policy::FlagIfDirectionDependent;
    let results = checks
        .iter()
        .map(|&(kind, tol)| -> PointResult {
            let err = |e: jetlag::GeometryError| e.to_string();
            Ok(match kind {
                CheckKind::Metricity => {
                    let m = ctx.metricity(pt).map_err(err)?;
                    MetricityResiduals::NAMES.iter().zip(m.values()).map(|(n, v)| Sample::abs(*n, v)).collect()
                }
                CheckKind::Antisymmetry => {
                    let c = ctx.curvature(pt).map_err(err)?;
                    let a = c.curvature.antisymmetry(&c.coeffs);
                    c.curvature.blocks().iter().zip(a.residual).map(|((n, _), v)| Sample::abs(*n, v)).collect()
                }
                CheckKind::Torsion => {
                    let v = ctx.nlc_torsion_free_check(std::slice::from_ref(pt), tol).map_err(err)?;
                    vec![Sample::abs("N vertical Jacobian symmetry", v.max_violation)]
                }
                CheckKind::Curvature => {
                    let s = ctx.coefficient_symmetries(pt).map_err(err)?;
                    let c = ctx.curvature(pt).map_err(err)?;
                    let d = ctx.dims();
                    let contracted = DTensor::from_fn(c.ricci.r_ss.slots(), d, |ix| {
                        (0..d.n).map(|m| c.curvature.r_ss.get(&[m, ix[0], ix[1], m])).sum()
                    });
                    let finite = c.curvature.blocks().iter().all(|(_, b)| b.is_finite())
                        && c.torsion.blocks().iter().all(|(_, b)| b.is_finite())
                        && c.scalars.total().is_finite();
                    vec![
                        Sample::abs("H symmetry", s.h),
                        Sample::abs("L symmetry", s.l),
                        Sample::abs("C symmetry", s.c),
                        Sample::abs("Ricci contraction", c.ricci.r_ss.sub(&contracted).max_abs()),
                        Sample::abs("finite blocks", if finite { 0.0 } else { f64::INFINITY }),
                    ]
                }
                CheckKind::Maxwell if skip_maxwell => Vec::new(),
                CheckKind::Maxwell => {
                    let m = ctx.maxwell_at(pt).map_err(err)?;
                    MAXWELL_NAMES
                        .iter()
                        .zip(&m.equations)
                        .map(|(n, e)| Sample::tensor(*n, Policy::Assert, &e.residual, e.scale))
                        .collect()
                }
                CheckKind::Einstein => {
                    let ch = jet()?.natural_checks();
                    let id = |k: usize, r: &DTensor<f64>, label: &str, policy| {
                        Sample::tensor(format!("identity {}{label}", IDENTITY_NAMES[k]), policy, r, ch.identity_scale[k])
                    };
                    let mut v = vec![id(0, &ch.identities[0], "", Policy::Assert)];
                    for k in 1..3 {
                        v.push(id(k, &ch.identities[k], " (as displayed)", dd));
                        v.push(id(k, &ch.identities_rhs_reversed[k], " (right-hand side negated)", Policy::Assert));
                    }
                    v
                }
                CheckKind::Conservation => {
                    let c = jet()?.conservation();
                    let mut v: Vec<Sample> =
                        (0..3).map(|k| Sample::tensor(CONSERVATION_NAMES[k], dd, &c.residual[k], c.scale[k])).collect();
                    v.push(Sample::tensor("temporal (torsion-corrected)", dd, &c.temporal_torsion_corrected, c.scale[0]));
                    v
                }
                CheckKind::NaturalForm => {
                    let nf = ctx.natural_stress_energy(pt).map_err(err)?;
                    let ch = jet()?.natural_checks();
                    let mut v = vec![
                        Sample::abs("round trip", nf.round_trip),
                        Sample::abs("trace solve", nf.trace_deviation()),
                        Sample::abs("trace recovery", nf.recovery_deviation()),
                        Sample::abs("E1' trace", nf.e1_prime_max()),
                        Sample::abs("trace first line", nf.trace_first_line),
                    ];
                    for (k, name) in CONSERVATION_NAMES.into_iter().enumerate() {
                        v.push(Sample::tensor(format!("new law {name} (as displayed)"), dd, &ch.new_laws[k], ch.law_scale[k]));
                        v.push(Sample::tensor(
                            format!("new law {name} (trace sign from definition)"),
                            dd,
                            &ch.new_laws_corrected[k],
                            ch.law_scale[k],
                        ));
                    }
                    v
                }
                CheckKind::Regularity => {
                    let one = std::slice::from_ref(pt);
                    let canonical = matches!(ctx.nlc(), NlcSpec::QuadraticCanonical);
                    let e = ctx.kronecker_regularity_check(&EnergyField(ctx), one, tol).map_err(err)?;
                    let mut v = vec![Sample::abs("energy", e.max_dev).with(Policy::Classify { must_be_regular: canonical })];
                    if let MetricSource::FromLagrangian(l) = ctx.g_source() {
                        let r = ctx.kronecker_regularity_check(&LagrangianField { ctx, lagrangian: l }, one, tol).map_err(err)?;
                        v.push(Sample::abs("L", r.max_dev).with(Policy::Classify { must_be_regular: true }));
                    }
                    v
                }
                CheckKind::GradCheck => grad_samples(ctx, pt),
            })
        })
        .collect();
    PointEval { direction_independent, results }
}

fn tensor_json(t: &DTensor<f64>) -> Value {
    json!({ "shape": t.shape(), "data": t.data() })
}

fn blocks_json<'a>(blocks: impl IntoIterator<Item = (&'static str, &'a DTensor<f64>)>) -> Value {
    Value::Object(blocks.into_iter().map(|(n, t)| (n.to_string(), tensor_json(t))).collect())
}

fn dump_point(ctx: &GeometryContext, index: usize, pt: &JetPoint<f64>, families: &[DumpFamily]) -> Value {
    let mut out = serde_json::Map::new();
    out.insert("point".into(), json!(index));
    let curvature = ctx.curvature(pt);
    for &fam in families {
        let key = serde_json::to_value(fam).expect("family names serialize");
        let key = key.as_str().expect("family names are strings").to_string();
        let value = (|| -> Result<Value, jetlag::GeometryError> {
            let c = curvature.as_ref().map_err(|e| e.clone())?;
            Ok(match fam {
                DumpFamily::Coeffs => {
                    let co = &c.coeffs;
                    blocks_json([
                        ("h", &co.h),
                        ("h_inv", &co.h_inv),
                        ("g", &co.g),
                        ("g_inv", &co.g_inv),
                        ("H", &co.hc),
                        ("M", &co.m),
                        ("N", &co.n),
                        ("G", &co.gc),
                        ("L", &co.lc),
                        ("C", &co.cc),
                    ])
                }
                DumpFamily::Torsion => blocks_json(c.torsion.blocks()),
                DumpFamily::Curvature => blocks_json(c.curvature.blocks()),
                DumpFamily::Ricci => blocks_json(c.ricci.blocks()),
                DumpFamily::Scalars => {
                    let s = &c.scalars;
                    json!({ "H": s.h, "R": s.r, "S": s.s, "total": s.total() })
                }
                DumpFamily::Einstein => blocks_json(ctx.einstein_blocks(pt)?.blocks()),
                DumpFamily::StressEnergy => blocks_json(ctx.stress_energy(pt)?.blocks()),
                DumpFamily::Em => {
                    let em = ctx.em_tensors(pt)?;
                    blocks_json([("F", &em.f_big), ("f", &em.f_small)])
                }
            })
        })()
        .unwrap_or_else(|e| json!({ "error": e.to_string() }));
        out.insert(key, value);
    }
    Value::Object(out)
}

fn assemble(kind: CheckKind, tol: f64, points: &[JetPoint<f64>], evals: &[PointEval], slot: usize, pre: Option<PointError>) -> CheckResult {
    let direction_independent = evals.iter().all(|e| e.direction_independent);
    let mut accs: Vec<Acc> = Vec::new();
    let mut errors: Vec<PointError> = pre.into_iter().collect();
    for (k, (e, pt)) in evals.iter().zip(points).enumerate() {
        match &e.results[slot] {
            Ok(samples) => {
                for s in samples {
                    let i = match accs.iter().position(|a| a.name == s.name) {
                        Some(i) => i,
                        None => {
                            accs.push(Acc::new(s));
                            accs.len() - 1
                        }
                    };
                    accs[i].absorb(s, pt);
                }
            }
            Err(message) => errors.push(PointError { point: Some(k), message: message.clone() }),
        }
    }
    let components: Vec<Component> = accs.into_iter().map(|a| a.finish(tol, direction_independent)).collect();
    let status = if !errors.is_empty() || components.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if components.iter().any(|c| c.status == Status::Flagged) {
        Status::Flagged
    } else {
        Status::Pass
    };
    let witness = match errors.iter().find_map(|e| e.point) {
        Some(k) => Some(points[k].to_flat()),
        None => components
            .iter()
            .filter(|c| c.status != Status::Pass)
            .max_by(|a, b| {
                let m = |c: &Component| if c.measure == Measure::MaxRel { c.max_rel } else { c.max_abs };
                m(a).total_cmp(&m(b))
            })
            .and_then(|c| c.witness.clone()),
    };
    let n = components.len().max(1) as f64;
    CheckResult {
        name: kind,
        status,
        tolerance: tol,
        max_abs: components.iter().fold(0.0, |m, c| worst(m, c.max_abs)),
        mean_abs: components.iter().map(|c| c.mean_abs).sum::<f64>() / n,
        max_rel: components.iter().fold(0.0, |m, c| worst(m, c.max_rel)),
        witness,
        components,
        errors,
    }
}

/// Run every requested check. `jobs = 0` uses all cores; the report does
/// not depend on the thread count.
pub fn run_report(cfg: &RunConfig, jobs: usize) -> RunReport {
    let start = Instant::now();
    let ctx = &cfg.ctx;
    let pts = &cfg.points;

    // Maxwell needs a torsion-free spatial connection on every point
    let mut maxwell_pre = None;
    if cfg.checks.iter().any(|(c, _)| *c == CheckKind::Maxwell) {
        maxwell_pre = match ctx.nlc_torsion_free_check(pts, TORSION_FREE_TOL) {
            Ok(v) if v.torsion_free => None,
            Ok(v) => Some(PointError {
                point: v.witness.as_ref().and_then(|w| pts.iter().position(|p| &p.to_flat() == w)),
                message: format!("the spatial nonlinear connection has torsion (violation {:e})", v.max_violation),
            }),
            Err(e) => Some(PointError { point: None, message: e.to_string() }),
        };
    }
    let skip_maxwell = maxwell_pre.is_some();

    let work = || -> (Vec<PointEval>, Vec<Value>) {
        let evals = pts.par_iter().map(|pt| eval_point(ctx, pt, &cfg.checks, skip_maxwell)).collect();
        let dumps = if cfg.dump.is_empty() {
            Vec::new()
        } else {
            pts.par_iter().enumerate().map(|(k, pt)| dump_point(ctx, k, pt, &cfg.dump)).collect()
        };
        (evals, dumps)
    };
    let (evals, dumps) = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };

    let checks: Vec<CheckResult> = cfg
        .checks
        .iter()
        .enumerate()
        .map(|(slot, &(kind, tol))| {
            let pre = if kind == CheckKind::Maxwell { maxwell_pre.clone() } else { None };
            assemble(kind, tol, pts, &evals, slot, pre)
        })
        .collect();
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary {
        status: if count(Status::Fail) > 0 {
            Status::Fail
        } else if count(Status::Flagged) > 0 {
            Status::Flagged
        } else {
            Status::Pass
        },
        pass: count(Status::Pass),
        fail: count(Status::Fail),
        flagged: count(Status::Flagged),
    };

    let explicit = pts.len() - cfg.sampled;
    RunReport {
        tool: "jetlag",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.raw.clone(),
        space: cfg.space_name.clone(),
        sampling: Sampling {
            generator: GENERATOR,
            procedure: format!(
                "one generator seeded with the seed; per point t, then x, then xs[i][α] drawn uniformly over the box; \
                 draws whose h or g has 1-norm condition number above {MAX_CONDITION:e} are discarded"
            ),
            seed: cfg.raw.points.seed,
            explicit,
            sampled: cfg.sampled,
            bx: cfg.raw.points.bx.clone().unwrap_or_default(),
        },
        points: pts.iter().map(|p| p.to_flat()).collect(),
        checks,
        summary,
        dumps,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}
