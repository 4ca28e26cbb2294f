//! Acceptance criteria, one verdict line each, at pinned tolerances.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails only when a verdict differs from the expected one: two
//! criteria are known not to hold as stated (see `KNOWN_FAILURES`) and are
//! reported as FAIL rather than loosened.

mod common;

use std::time::Instant;

use common::corpus;
use common::*;
use jetlag::diff::{check_grad, DiffConfig, ScalarField};
use jetlag::expr::{parse_field, Deps, EvalError};
use jetlag::geometry::{EnergyField, Lagrangian, LagrangianField, MetricSource};
use jetlag::jet::{Dims, JetPoint};
use jetlag::sampling::{sample_points, SampleBox};
use jetlag::spaces::{fixtures, make_flat, optic_inverse_closed, optic_inverse_rank_one, NlcChoice, SpaceSpec};
use jetlag::{GeometryContext, Scalar};

/// Criteria whose stated bound is not met by the identities as displayed.
const KNOWN_FAILURES: &[usize] = &[5, 9];

const DIMS: [(usize, usize); 2] = [(2, 2), (3, 3)];

fn pts(ctx: &GeometryContext, seed: u64, count: usize) -> Vec<JetPoint<f64>> {
    sample_points(ctx, seed, count, &SampleBox::default()).unwrap()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn fmt(v: f64) -> String {
    format!("{v:.2e}")
}

fn flat_baseline() -> Verdict {
    let mut worst = 0.0f64;
    for (p, n) in DIMS {
        let ctx = make_flat(p, n).unwrap();
        let samples = pts(&ctx, 101, 10);
        for pt in &samples {
            let c = ctx.curvature(pt).unwrap();
            let co = &c.coeffs;
            for t in [&co.hc, &co.m, &co.n, &co.gc, &co.lc, &co.cc] {
                worst = worst.max(t.max_abs());
            }
            for (_, b) in c.torsion.blocks().into_iter().chain(c.curvature.blocks()) {
                worst = worst.max(b.max_abs());
            }
            let em = ctx.em_tensors(pt).unwrap();
            worst = worst.max(em.f_big.max_abs()).max(em.f_small.max_abs());
            worst = worst.max(ctx.einstein_blocks(pt).unwrap().max_abs());
            worst = worst.max(ctx.metricity(pt).unwrap().max());
            worst = worst.max(c.curvature.antisymmetry(co).max());
            let law = ctx.gravity_jet(pt).unwrap().conservation();
            worst = law.residual.iter().fold(worst, |w, r| w.max(r.max_abs()));
        }
        worst = worst.max(ctx.maxwell_residuals(&samples).unwrap().max_abs());
    }
    verdict(worst <= 1e-12, format!("every coefficient, block and residual at (2,2), (3,3): max {} ≤ 1e-12", fmt(worst)))
}

fn metricity() -> Verdict {
    let mut worst = (0.0f64, "");
    for (p, n) in DIMS {
        for (name, spec) in fixtures::all(p, n).into_iter().take(5) {
            let ctx = build(spec, p, n);
            for pt in pts(&ctx, 102, 100) {
                let m = ctx.metricity(&pt).unwrap().max();
                if m > worst.0 {
                    worst = (m, name);
                }
            }
        }
    }
    verdict(worst.0 <= 1e-8, format!("optic, conformal i–iii, quadratic, 100 points: max {} ({}) ≤ 1e-8", fmt(worst.0), worst.1))
}

fn antisymmetries() -> Verdict {
    let mut worst = (0.0f64, "");
    for (p, n) in DIMS {
        for (name, spec) in fixtures::all(p, n) {
            let ctx = build(spec, p, n);
            let count = if p == 2 { 100 } else { 25 };
            for pt in pts(&ctx, 103, count) {
                let c = ctx.curvature(&pt).unwrap();
                let a = c.curvature.antisymmetry(&c.coeffs).max();
                if a > worst.0 {
                    worst = (a, name);
                }
            }
        }
    }
    verdict(worst.0 <= 1e-9, format!("seven identities, all fixtures, 100 points at (2,2) and 25 at (3,3): max {} ({}) ≤ 1e-9", fmt(worst.0), worst.1))
}

fn optic_inverse() -> Verdict {
    let rel = |a: &[f64], b: &[f64]| {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        max_dev(a, b) / scale
    };
    let (mut displayed, mut corrected) = (0.0f64, 0.0f64);
    for (p, n) in DIMS {
        let ctx = build(fixtures::optic_spec(p, n), p, n);
        for pt in pts(&ctx, 104, 100) {
            let numeric = ctx.g_inverse(&pt).unwrap();
            displayed = displayed.max(rel(optic_inverse_closed(&ctx, &pt).unwrap().data(), numeric.data()));
            corrected = corrected.max(rel(optic_inverse_rank_one(&ctx, &pt).unwrap().data(), numeric.data()));
        }
    }
    // the displayed closed form carries the wrong sign on its rank-one term;
    // the discrepancy is the documented outcome, the corrected form must agree
    let pass = displayed > 1e-10 && corrected <= 1e-10;
    verdict(
        pass,
        format!(
            "documented discrepancy: displayed closed form deviates {}, sign-corrected form {} ≤ 1e-10 (100 points)",
            fmt(displayed),
            fmt(corrected)
        ),
    )
}

fn maxwell() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for (p, n) in DIMS {
        for (name, spec) in fixtures::all(p, n).into_iter().take(4) {
            let ctx = build(spec, p, n);
            let r = ctx.maxwell_residuals(&pts(&ctx, 105, 50)).unwrap();
            let rel: Vec<f64> = r.equations.iter().map(|e| e.max_rel).collect();
            let bad: Vec<String> = rel.iter().enumerate().filter(|(_, v)| **v > 1e-7).map(|(k, v)| format!("eq{} {}", k + 1, fmt(*v))).collect();
            if !bad.is_empty() {
                pass = false;
                lines.push(format!("{name} ({p},{n}): {}", bad.join(", ")));
            }
        }
    }
    // direction-independent g: f vanishes and d_v reduces to h^{αβ} g_ij
    let ctx = build(fixtures::quadratic_spec(2, 3), 2, 3);
    let samples = pts(&ctx, 106, 50);
    let r = ctx.maxwell_residuals(&samples).unwrap();
    let mut reduction = 0.0f64;
    for pt in &samples {
        let d = ctx.deflection_set(pt).unwrap();
        let co = ctx.coeffs(pt).unwrap();
        for ix in d.d_v.indices() {
            let want = co.h_inv.get(&[ix[1], ix[3]]) * co.g.get(&[ix[0], ix[2]]);
            reduction = reduction.max((d.d_v.get(&ix) - want).abs());
        }
    }
    let di_ok = r.max_f_small <= 1e-12 && reduction <= 1e-12 && r.max_rel() <= 1e-7;
    pass &= di_ok;
    let di = format!("direction-independent: |f| {}, reduction {}, residual {}", fmt(r.max_f_small), fmt(reduction), fmt(r.max_rel()));
    let fails = if lines.is_empty() { "all five ≤ 1e-7 on optic and conformal".to_string() } else { format!("over 1e-7: {}", lines.join("; ")) };
    verdict(pass, format!("{fails}; {di}"))
}

fn torsion_free() -> Verdict {
    let mut ok = true;
    let mut worst = 0.0f64;
    // ChristoffelOfPhi (optic, conformal) and the canonical connection of ℰ (quadratic)
    for (p, n) in DIMS {
        for (_, spec) in fixtures::all(p, n).into_iter().take(5) {
            let ctx = build(spec, p, n);
            let v = ctx.nlc_torsion_free_check(&pts(&ctx, 107, 20), 1e-9).unwrap();
            ok &= v.torsion_free && v.witness.is_none();
            worst = worst.max(v.max_violation);
        }
    }
    let spec = SpaceSpec::Custom {
        h: None,
        g: Some(mat(&[&["1", "0"], &["0", "1"]])),
        lagrangian: None,
        nlc: NlcChoice::UserGiven(vec![vec![vec!["xs[2][1]*x[1]".into(), "0".into()]], vec![vec!["0".into(), "0".into()]]]),
    };
    let ctx = build(spec, 1, 2);
    let v = ctx.nlc_torsion_free_check(&pts(&ctx, 108, 20), 1e-9).unwrap();
    let crafted = !v.torsion_free && v.witness.is_some();
    verdict(
        ok && crafted,
        format!("canonical connections: violation {} ≤ 1e-9; crafted asymmetric N rejected with witness: {crafted}", fmt(worst)),
    )
}

fn natural_form() -> Verdict {
    let (mut round_trip, mut recovery) = (0.0f64, 0.0f64);
    for (_, spec) in fixtures::all(3, 3) {
        let ctx = build(spec, 3, 3).with_kappa(0.8);
        for pt in pts(&ctx, 109, 5) {
            let nf = ctx.natural_stress_energy(&pt).unwrap();
            round_trip = round_trip.max(nf.round_trip);
            recovery = recovery.max(nf.trace_deviation()).max(nf.recovery_deviation()).max(nf.e1_prime_max()).max(nf.trace_first_line);
        }
    }
    verdict(
        round_trip <= 1e-10 && recovery <= 1e-9,
        format!("(3,3), all fixtures: round trip {} ≤ 1e-10, trace recoveries {} ≤ 1e-9", fmt(round_trip), fmt(recovery)),
    )
}

fn classical_bianchi() -> Verdict {
    let (mut einstein_dev, mut law, mut identity, mut oracle_div) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (p, n) in DIMS {
        let ctx = build(fixtures::curved_h_flat_g_spec(p, n), p, n);
        let hf = curved_h_closure(p);
        for pt in pts(&ctx, 110, 5) {
            let e = ctx.einstein_blocks(&pt).unwrap();
            let oracle: Vec<f64> = einstein(&hf, &pt.t).into_iter().flatten().collect();
            einstein_dev = einstein_dev.max(max_dev(e.e_tt.data(), &oracle));
            oracle_div = einstein_divergence(&hf, &pt.t).iter().fold(oracle_div, |m, v| m.max(v.abs()));
            let jet = ctx.gravity_jet(&pt).unwrap();
            law = law.max(jet.conservation().residual[0].max_abs());
            identity = identity.max(jet.natural_checks().identities[0].max_abs());
        }
    }
    let worst = einstein_dev.max(law).max(identity);
    verdict(
        worst <= 1e-7,
        format!(
            "curved h, flat g: temporal Einstein vs oracle {}, first law {}, first identity {} ≤ 1e-7 (oracle divergence {})",
            fmt(einstein_dev),
            fmt(law),
            fmt(identity),
            fmt(oracle_div)
        ),
    )
}

fn conservation() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, n) in DIMS {
        for (name, spec) in fixtures::all(p, n) {
            let ctx = build(spec, p, n);
            let count = if name == "quadratic" || name == "curved-h-flat-g" { 30 } else { 5 };
            let r = ctx.conservation_residuals(&pts(&ctx, 111, count)).unwrap();
            let rel: Vec<String> = r.laws.iter().map(|l| fmt(l.max_rel)).collect();
            if r.direction_independent {
                let ok = r.laws.iter().all(|l| l.max_rel <= 1e-6);
                pass &= ok;
                if !ok {
                    parts.push(format!(
                        "{name} ({p},{n}) [{}], torsion-corrected first law {}",
                        rel.join(", "),
                        fmt(r.temporal_torsion_corrected.max_rel)
                    ));
                }
            } else if p == 3 {
                parts.push(format!("{name} ({p},{n}) flagged [{}]", rel.join(", ")));
            }
        }
    }
    let head = if pass { "direction-independent: all three ≤ 1e-6" } else { "direction-independent over 1e-6:" };
    verdict(pass, format!("{head} {}", parts.join("; ")))
}

/// One entry of the spatial metric as a scalar field.
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

fn differentiation() -> Verdict {
    let cfg = DiffConfig::default();
    let (mut worst, mut fields, mut nan) = ((0.0f64, String::new()), 0, 0);
    let mut record = |name: String, rep: jetlag::diff::AgreementReport| {
        fields += 1;
        nan += rep.nan_count;
        if rep.max_rel_dev > worst.0 {
            worst = (rep.max_rel_dev, name);
        }
    };
    for (space, spec) in fixtures::all(2, 2) {
        let ctx = build(spec, 2, 2);
        let samples = pts(&ctx, 112, 20);
        for (a, row) in ctx.h_exprs().iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                record(format!("{space} h[{}][{}]", a + 1, b + 1), check_grad(e, &samples, &cfg));
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                record(format!("{space} g[{}][{}]", i + 1, j + 1), check_grad(&MetricEntry { ctx: &ctx, i, j }, &samples, &cfg));
            }
        }
        if let MetricSource::FromLagrangian(l) = ctx.g_source() {
            record(format!("{space} L"), check_grad(&LagrangianField { ctx: &ctx, lagrangian: l }, &samples, &cfg));
        }
        record(format!("{space} energy"), check_grad(&EnergyField(&ctx), &samples, &cfg));
    }
    verdict(
        worst.0 <= 1e-5 && nan == 0,
        format!("{fields} built-in fields, first and second order, 20 points: max relative {} ({}) ≤ 1e-5", fmt(worst.0), worst.1),
    )
}

fn regularity() -> Verdict {
    let ctx = build(fixtures::quadratic_spec(2, 2), 2, 2);
    let samples = pts(&ctx, 113, 20);
    let MetricSource::FromLagrangian(l) = ctx.g_source() else { unreachable!("the quadratic fixture is Lagrangian") };
    let v = ctx.kronecker_regularity_check(&LagrangianField { ctx: &ctx, lagrangian: l }, &samples, 1e-9).unwrap();
    let SpaceSpec::Quadratic { g, .. } = fixtures::quadratic_spec(2, 2) else { unreachable!() };
    let mut recovery = 0.0f64;
    for (pt, gh) in samples.iter().zip(&v.g_hat) {
        for (i, row) in g.iter().enumerate() {
            for (j, src) in row.iter().enumerate() {
                let want = parse_field(src, Dims::new(2, 2)).unwrap().eval::<f64>(pt).unwrap();
                recovery = recovery.max((gh.get(&[i, j]) - want).abs());
            }
        }
    }
    let flat = make_flat(2, 1).unwrap();
    let quartic = Lagrangian::Expr(parse_field("xs[1][1]^4", Dims::new(2, 1)).unwrap());
    let q = flat.kronecker_regularity_check(&LagrangianField { ctx: &flat, lagrangian: &quartic }, &pts(&flat, 114, 20), 1e-9).unwrap();
    let irregular = !q.regular && q.witness.is_some();
    verdict(
        v.regular && recovery <= 1e-9 && irregular,
        format!("quadratic regular: {}, ĝ recovered to {} ≤ 1e-9; quartic irregular with witness: {irregular}", v.regular, fmt(recovery)),
    )
}

fn parser() -> Verdict {
    let d = Dims::new(2, 2);
    let pt = corpus::reference_point();
    let mut failures = Vec::new();
    for &(src, want) in corpus::VALUES {
        match parse_field(src, d).map(|a| a.eval::<f64>(&pt)) {
            Ok(Ok(v)) if (v - want).abs() <= 1e-14 * want.abs().max(1.0) => {}
            _ => failures.push(src),
        }
    }
    for &(src, offset) in corpus::PARSE_ERRORS {
        if !matches!(parse_field(src, d), Err(e) if e.offset == offset) {
            failures.push(src);
        }
    }
    for &src in corpus::DOMAIN_ERRORS {
        if !matches!(parse_field(src, d).map(|a| a.eval::<f64>(&pt)), Ok(Err(EvalError::Domain { .. }))) {
            failures.push(src);
        }
    }
    let cases = corpus::VALUES.len() + corpus::PARSE_ERRORS.len() + corpus::DOMAIN_ERRORS.len();
    let sources = corpus::all_builtin_sources();
    let fixpoint = sources.iter().all(|(dims, src)| {
        let a = parse_field(src, *dims).unwrap();
        parse_field(&a.to_source(), *dims).is_ok_and(|b| b == a)
    });
    verdict(
        cases >= 40 && failures.is_empty() && fixpoint,
        format!("{cases} corpus cases, failures {failures:?}; parse–print–parse fixpoint on {} built-in expressions: {fixpoint}", sources.len()),
    )
}

fn determinism() -> Verdict {
    let run = || {
        let ctx = build(fixtures::optic_spec(2, 3), 2, 3);
        let samples = pts(&ctx, 115, 5);
        let mut out: Vec<u64> = samples.iter().flat_map(|p| p.to_flat()).map(f64::to_bits).collect();
        for pt in &samples {
            let c = ctx.curvature(pt).unwrap();
            for (_, b) in c.curvature.blocks() {
                out.extend(b.data().iter().map(|v| v.to_bits()));
            }
            out.extend(ctx.gravity_jet(pt).unwrap().conservation().residual.iter().flat_map(|r| r.data().iter().map(|v| v.to_bits())));
        }
        let m = ctx.maxwell_residuals(&samples).unwrap();
        out.extend(m.equations.iter().map(|e| e.max_rel.to_bits()));
        out
    };
    let (a, b) = (run(), run());
    verdict(
        a == b,
        format!("seeded sampling and every residual bitwise identical across runs ({} values); byte-level report check in the CLI tests", a.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 13] = [
        ("flat baseline", flat_baseline),
        ("metricity", metricity),
        ("curvature antisymmetries", antisymmetries),
        ("optic inverse", optic_inverse),
        ("Maxwell identities", maxwell),
        ("torsion-free prerequisites", torsion_free),
        ("natural-form round trip", natural_form),
        ("contracted Bianchi reductions", classical_bianchi),
        ("conservation laws", conservation),
        ("differentiation cross-check", differentiation),
        ("regularity detection", regularity),
        ("parser", parser),
        ("determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        if v.pass == KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected verdicts for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
