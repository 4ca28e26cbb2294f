mod common;

use approx::assert_abs_diff_eq;
use common::*;
use jetlag::expr::{parse_field, Deps};
use jetlag::geometry::{Direction, EnergyField, Lagrangian, LagrangianField, TensorField};
use jetlag::jet::{Coord, Dims, JetPoint};
use jetlag::sampling::{sample_points, SampleBox};
use jetlag::spaces::{fixtures, make_flat, NlcChoice, SpaceSpec};
use jetlag::{DTensor, GeometryContext, GeometryError, Scalar};
use proptest::prelude::*;

fn polar_h() -> SpaceSpec {
    SpaceSpec::Quadratic { h: Some(mat(&[&["1", "0"], &["0", "t[1]^2"]])), g: mat(&[&["1"]]), u: None, f: None }
}

fn polar_g() -> SpaceSpec {
    SpaceSpec::Quadratic { h: None, g: mat(&[&["1", "0"], &["0", "x[1]^2"]]), u: None, f: None }
}

/// A single jet coordinate as a rank-0 field.
struct CoordField(Coord);

impl TensorField for CoordField {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<DTensor<S>>, GeometryError> {
        Ok(vec![DTensor::scalar(pt.get(self.0), pt.dims())])
    }
}

fn pts(ctx: &GeometryContext, seed: u64, count: usize) -> Vec<JetPoint<f64>> {
    sample_points(ctx, seed, count, &SampleBox::default()).unwrap()
}

#[test]
fn flat_space_has_no_connection() {
    for (p, n) in [(2, 2), (3, 3), (1, 3)] {
        let ctx = make_flat(p, n).unwrap();
        for pt in pts(&ctx, 3, 5) {
            let c = ctx.curvature(&pt).unwrap();
            let co = &c.coeffs;
            for t in [&co.hc, &co.m, &co.n, &co.gc, &co.lc, &co.cc] {
                assert_eq!(t.max_abs(), 0.0);
            }
            for (_, b) in c.torsion.blocks() {
                assert_eq!(b.max_abs(), 0.0);
            }
            for (_, b) in c.curvature.blocks() {
                assert_eq!(b.max_abs(), 0.0);
            }
            assert_eq!(c.scalars.total(), 0.0);
        }
    }
}

#[test]
fn temporal_christoffel_of_polar_h() {
    let ctx = build(polar_h(), 2, 1);
    let pt = point(&[2.0, 0.4], &[0.1], &[&[0.7, 3.0]]);
    let (hc, m) = ctx.temporal_christoffel_and_m(&pt).unwrap();
    // hc[γ][α][β] = H^γ_{αβ}
    assert_abs_diff_eq!(hc.get(&[1, 1, 0]), 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(hc.get(&[1, 0, 1]), 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(hc.get(&[0, 1, 1]), -2.0, epsilon = 1e-14);
    assert_eq!(hc.get(&[0, 0, 0]), 0.0);
    assert_abs_diff_eq!(m.get(&[0, 1, 0]), -1.5, epsilon = 1e-14);

    let h = |t: &[f64]| vec![vec![1.0, 0.0], vec![0.0, t[0] * t[0]]];
    let oracle = christoffel(&h, &[2.0, 0.4]);
    for g in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(hc.get(&[g, a, b]), oracle[g][a][b], epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn temporal_adapted_derivative_of_a_direction() {
    let ctx = build(polar_h(), 2, 1);
    let pt = point(&[2.0, 0.4], &[0.1], &[&[0.7, 3.0]]);
    let d = ctx.adapted_deriv(&CoordField(Coord::Xs(0, 1)), &pt, Direction::Temporal).unwrap();
    assert_abs_diff_eq!(d[0][0].get(&[]), 0.5 * 3.0, epsilon = 1e-14);
}

#[test]
fn spatial_christoffel_examples() {
    let ctx = build(polar_g(), 1, 2);
    let pt = point(&[0.2], &[3.0, -0.5], &[&[0.1], &[2.0]]);
    let gam = ctx.spatial_christoffel_generalized(&pt).unwrap();
    assert_abs_diff_eq!(gam.get(&[1, 1, 0]), 1.0 / 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(gam.get(&[1, 0, 1]), 1.0 / 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(gam.get(&[0, 1, 1]), -3.0, epsilon = 1e-14);
    assert_eq!(gam.get(&[0, 0, 0]), 0.0);
    let g = |x: &[f64]| vec![vec![1.0, 0.0], vec![0.0, x[0] * x[0]]];
    let oracle = christoffel(&g, &[3.0, -0.5]);
    for (ix, v) in gam.indices().iter().zip(gam.data()) {
        assert_abs_diff_eq!(*v, oracle[ix[0]][ix[1]][ix[2]], epsilon = 1e-9);
    }

    let n = ctx.spatial_nlc(&pt).unwrap();
    assert_abs_diff_eq!(n.get(&[1, 0, 0]), 2.0 / 3.0, epsilon = 1e-14);

    let exp = build(SpaceSpec::Quadratic { h: None, g: mat(&[&["exp(2*x[1])"]]), u: None, f: None }, 1, 1);
    let g1 = exp.spatial_christoffel_generalized(&point(&[0.0], &[0.3], &[&[1.0]])).unwrap();
    assert_abs_diff_eq!(g1.get(&[0, 0, 0]), 1.0, epsilon = 1e-14);
}

#[test]
fn generalized_christoffel_refuses_direction_dependent_metric() {
    let ctx = build(fixtures::optic_spec(2, 2), 2, 2);
    let pt = pts(&ctx, 1, 1).remove(0);
    assert!(matches!(ctx.spatial_christoffel_generalized(&pt), Err(GeometryError::Regularity(_))));
}

#[test]
fn canonical_connection_refused_for_direction_dependent_metric() {
    let spec = SpaceSpec::Custom {
        h: None,
        g: Some(mat(&[&["1 + xs[1][1]^2", "0"], &["0", "1"]])),
        lagrangian: None,
        nlc: NlcChoice::QuadraticCanonical,
    };
    assert!(spec.build(Dims::new(1, 2)).is_err());
}

#[test]
fn horizontal_derivative_of_a_direction_is_minus_n() {
    let ctx = build(fixtures::optic_spec(2, 2), 2, 2);
    for pt in pts(&ctx, 2, 4) {
        let n = ctx.spatial_nlc(&pt).unwrap();
        let d = ctx.adapted_deriv(&CoordField(Coord::Xs(0, 0)), &pt, Direction::Spatial).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(d[j][0].get(&[]), -n.get(&[0, 0, j]), epsilon = 1e-15);
        }
    }
}

#[test]
fn optic_with_flat_phi_has_no_spatial_connection() {
    let spec = SpaceSpec::Optic {
        h: None,
        phi: mat(&[&["1", "0"], &["0", "1"]]),
        index: "1.5 + 0.2*sin(x[1]) + 0.1*xs[1][1]^2".into(),
        dir: vec!["1".into(), "0.5".into()],
    };
    let ctx = build(spec, 2, 2);
    for pt in pts(&ctx, 5, 4) {
        assert_eq!(ctx.spatial_nlc(&pt).unwrap().max_abs(), 0.0);
    }
}

#[test]
fn optic_vertical_connection_matches_difference_oracle() {
    let spec = SpaceSpec::Optic {
        h: None,
        phi: mat(&[&["1", "0"], &["0", "1"]]),
        index: "1.5 + 0.2*sin(x[1]) + 0.1*xs[1][1]^2 + 0.05*xs[2][2]".into(),
        dir: vec!["1 + 0.1*t[1]".into(), "0.5".into()],
    };
    let ctx = build(spec, 2, 2);
    let pt = point(&[0.3, -0.2], &[0.4, 0.1], &[&[0.6, -0.3], &[0.2, 0.5]]);
    let d = Dims::new(2, 2);
    let g = |q: &JetPoint<f64>| ctx.eval_g(q).unwrap().data().to_vec();
    let gi = inv(&ctx.eval_g(&pt).unwrap().data().chunks(2).map(|r| r.to_vec()).collect());
    // dg[k][γ][i·n + j] = ∂g_ij/∂ẋ^k_γ
    let dg: Vec<Vec<Vec<f64>>> = (0..d.n).map(|k| (0..d.p).map(|ga| d_jet(&g, &pt, Coord::Xs(k, ga))).collect()).collect();
    let cc = ctx.coeffs(&pt).unwrap().cc;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for ga in 0..2 {
                    let want: f64 = (0..2)
                        .map(|m| 0.5 * gi[i][m] * (dg[k][ga][m * 2 + j] + dg[j][ga][m * 2 + k] - dg[m][ga][j * 2 + k]))
                        .sum();
                    assert_abs_diff_eq!(cc.get(&[i, j, k, ga]), want, epsilon = 1e-6);
                }
            }
        }
    }
    assert!(cc.max_abs() > 1e-3, "fixture should have a non-trivial vertical connection");
}

#[test]
fn direction_independent_metric_has_no_vertical_connection() {
    let ctx = build(fixtures::quadratic_spec(2, 2), 2, 2);
    for pt in pts(&ctx, 4, 3) {
        let c = ctx.curvature(&pt).unwrap();
        assert_eq!(c.coeffs.cc.max_abs(), 0.0);
        assert_eq!(c.curvature.s_vv.max_abs(), 0.0);
    }
}

#[test]
fn temporal_torsion_matches_difference_oracle() {
    let ctx = build(SpaceSpec::Quadratic { h: Some(mat(&[&["1", "0"], &["0", "t[1]^2"]])), g: mat(&[&["1 + 0.1*x[1]^2"]]), u: None, f: None }, 2, 1);
    let pt = point(&[1.7, 0.3], &[0.4], &[&[0.8, -1.2]]);
    let d = Dims::new(2, 1);
    let mf = |q: &JetPoint<f64>| ctx.temporal_christoffel_and_m(q).unwrap().1.data().to_vec();
    let m0 = mf(&pt);
    // δM_α/δt^β = ∂M/∂t^β − M^{(j)}_{(ν)β} ∂M/∂ẋ^j_ν, flat [m][μ][α]
    let dm_t: Vec<Vec<f64>> = (0..d.p).map(|b| d_jet(&mf, &pt, Coord::T(b))).collect();
    let dm_v: Vec<Vec<f64>> = (0..d.p).map(|nu| d_jet(&mf, &pt, Coord::Xs(0, nu))).collect();
    let at = |v: &[f64], mu: usize, al: usize| v[mu * 2 + al];
    let delta = |mu: usize, al: usize, b: usize| {
        at(&dm_t[b], mu, al) - (0..2).map(|nu| at(&m0, nu, b) * at(&dm_v[nu], mu, al)).sum::<f64>()
    };
    let tor = ctx.torsion_set(&pt).unwrap();
    for mu in 0..2 {
        for al in 0..2 {
            for b in 0..2 {
                let want = delta(mu, al, b) - delta(mu, b, al);
                assert_abs_diff_eq!(tor.r_tt.get(&[0, mu, al, b]), want, epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn temporal_curvature_matches_riemann_oracle() {
    let polar = build(polar_h(), 2, 1);
    let pt = point(&[2.0, 0.4], &[0.1], &[&[0.7, 3.0]]);
    let c = polar.curvature(&pt).unwrap();
    let h = |t: &[f64]| vec![vec![1.0, 0.0], vec![0.0, t[0] * t[0]]];
    assert!(max_dev(c.curvature.h.data(), &riemann(&h, &[2.0, 0.4])) < 1e-6);
    assert_abs_diff_eq!(c.scalars.h, scalar_curvature(&h, &[2.0, 0.4]), epsilon = 1e-6);

    for p in [2, 3] {
        let ctx = build(fixtures::curved_h_flat_g_spec(p, 2), p, 2);
        for q in pts(&ctx, 8, 3) {
            let c = ctx.curvature(&q).unwrap();
            let hf = curved_h_closure(p);
            let oracle = riemann(&hf, &q.t);
            assert!(oracle.iter().any(|v| v.abs() > 1e-3));
            assert!(max_dev(c.curvature.h.data(), &oracle) < 1e-6);
            assert_abs_diff_eq!(c.scalars.h, scalar_curvature(&hf, &q.t), epsilon = 1e-6);
        }
    }
}

#[test]
fn spatial_ricci_is_the_contraction_of_the_stored_block() {
    let ctx = build(fixtures::optic_spec(2, 3), 2, 3);
    for pt in pts(&ctx, 6, 2) {
        let c = ctx.curvature(&pt).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for m in 0..3 {
                    s += c.curvature.r_ss.get(&[m, i, j, m]);
                }
                assert_eq!(c.ricci.r_ss.get(&[i, j]), s);
            }
        }
    }
}

#[test]
fn vertical_metric_of_quadratic_lagrangians() {
    let plain = build(
        SpaceSpec::Custom { h: None, g: None, lagrangian: Some("xs[1][1]^2 + xs[1][2]^2 + xs[2][1]^2 + xs[2][2]^2".into()), nlc: NlcChoice::QuadraticCanonical },
        2,
        2,
    );
    let with_u = build(
        SpaceSpec::Custom {
            h: None,
            g: None,
            lagrangian: Some("xs[1][1]^2 + xs[1][2]^2 + xs[2][1]^2 + xs[2][2]^2 + x[1]*xs[1][2] - 3*t[2]*xs[2][1]".into()),
            nlc: NlcChoice::QuadraticCanonical,
        },
        2,
        2,
    );
    for pt in pts(&plain, 9, 3) {
        let (gv, g) = plain.vertical_metric_from_l(&pt).unwrap();
        let (gv2, g2) = with_u.vertical_metric_from_l(&pt).unwrap();
        for ix in gv.indices() {
            let want = if ix[0] == ix[2] && ix[1] == ix[3] { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(gv.get(&ix), want, epsilon = 1e-14);
        }
        assert!(max_dev(g.data(), &[1.0, 0.0, 0.0, 1.0]) < 1e-14);
        assert!(max_dev(gv.data(), gv2.data()) < 1e-14);
        assert!(max_dev(g.data(), g2.data()) < 1e-14);
    }
}

#[test]
fn vertical_metric_matches_hessian_oracle() {
    let src = "1.3*xs[1][1]^2 + 0.4*xs[1][1]*xs[2][2] - 0.7*xs[1][2]*xs[2][1] + (1 + 0.2*x[1]^2)*xs[2][2]^2 + xs[1][2]^2 + 0.9*xs[2][1]^2 + 0.3*xs[1][1]*xs[1][2]";
    let ctx = build(SpaceSpec::Custom { h: None, g: None, lagrangian: Some(src.into()), nlc: NlcChoice::QuadraticCanonical }, 2, 2);
    let ast = parse_field(src, Dims::new(2, 2)).unwrap();
    let pt = point(&[0.1, 0.2], &[0.5, -0.4], &[&[0.3, 0.9], &[-0.6, 0.2]]);
    let (gv, _) = ctx.vertical_metric_from_l(&pt).unwrap();
    let l = |q: &JetPoint<f64>| vec![ast.eval::<f64>(q).unwrap()];
    for ix in gv.indices() {
        let (a, b) = (Coord::Xs(ix[0], ix[1]), Coord::Xs(ix[2], ix[3]));
        let second = d_jet(&|q| d_jet(&l, q, b), &pt, a)[0];
        assert_abs_diff_eq!(gv.get(&ix), 0.5 * second, epsilon = 1e-6);
        assert_eq!(gv.get(&ix), gv.get(&[ix[2], ix[3], ix[0], ix[1]]));
    }
}

#[test]
fn energy_lagrangian_values() {
    let flat = make_flat(1, 1).unwrap();
    assert_eq!(flat.energy_lagrangian(&point(&[0.3], &[0.2], &[&[3.0]])).unwrap(), 9.0);
    assert_eq!(make_flat(2, 2).unwrap().energy_lagrangian(&JetPoint::zeros(Dims::new(2, 2))).unwrap(), 0.0);

    let ctx = build(fixtures::optic_spec(2, 3), 2, 3);
    for pt in pts(&ctx, 10, 3) {
        let hi = inv(&ctx.eval_h(&pt).unwrap().data().chunks(2).map(|r| r.to_vec()).collect());
        let g = ctx.eval_g(&pt).unwrap();
        let mut want = 0.0;
        for mu in 0..2 {
            for nu in 0..2 {
                for m in 0..3 {
                    for r in 0..3 {
                        want += hi[mu][nu] * g.get(&[m, r]) * pt.xs(m, mu) * pt.xs(r, nu);
                    }
                }
            }
        }
        assert_abs_diff_eq!(ctx.energy_lagrangian(&pt).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn kronecker_regularity_verdicts() {
    let ctx = build(fixtures::quadratic_spec(2, 2), 2, 2);
    let samples = pts(&ctx, 11, 10);
    let jetlag::geometry::MetricSource::FromLagrangian(l) = ctx.g_source() else { panic!("quadratic space is Lagrangian") };
    let verdict = ctx.kronecker_regularity_check(&LagrangianField { ctx: &ctx, lagrangian: l }, &samples, 1e-9).unwrap();
    assert!(verdict.regular, "max deviation {}", verdict.max_dev);
    let jetlag::spaces::SpaceSpec::Quadratic { g, .. } = fixtures::quadratic_spec(2, 2) else { unreachable!() };
    for (pt, gh) in samples.iter().zip(&verdict.g_hat) {
        for i in 0..2 {
            for j in 0..2 {
                let want = parse_field(&g[i][j], Dims::new(2, 2)).unwrap().eval::<f64>(pt).unwrap();
                assert_abs_diff_eq!(gh.get(&[i, j]), want, epsilon = 1e-9);
            }
        }
    }

    let e = ctx.kronecker_regularity_check(&EnergyField(&ctx), &pts(&ctx, 12, 5), 1e-9).unwrap();
    assert!(e.regular, "max deviation {}", e.max_dev);

    let flat = make_flat(2, 1).unwrap();
    let quartic = Lagrangian::Expr(parse_field("xs[1][1]^4", Dims::new(2, 1)).unwrap());
    let q = LagrangianField { ctx: &flat, lagrangian: &quartic };
    let v = flat.kronecker_regularity_check(&q, &pts(&flat, 13, 5), 1e-9).unwrap();
    assert!(!v.regular);
    let w = JetPoint::from_flat(Dims::new(2, 1), &v.witness.expect("witness"));
    assert!(w.xs(0, 0).abs() > 0.0);
}

#[test]
fn torsion_free_verdicts() {
    for spec in [fixtures::optic_spec(2, 2), fixtures::conformal_spec(2, 2, 1), fixtures::quadratic_spec(2, 2)] {
        let ctx = build(spec, 2, 2);
        let v = ctx.nlc_torsion_free_check(&pts(&ctx, 14, 5), 1e-9).unwrap();
        assert!(v.torsion_free, "violation {}", v.max_violation);
        assert!(v.witness.is_none());
    }
    // N^{(1)}_{(1)1} = ẋ²₁ x¹, N^{(1)}_{(1)2} = 0: ∂N_1/∂ẋ² ≠ ∂N_2/∂ẋ¹
    let spec = SpaceSpec::Custom {
        h: None,
        g: Some(mat(&[&["1", "0"], &["0", "1"]])),
        lagrangian: None,
        nlc: NlcChoice::UserGiven(vec![vec![vec!["xs[2][1]*x[1]".into(), "0".into()]], vec![vec!["0".into(), "0".into()]]]),
    };
    let ctx = build(spec, 1, 2);
    let v = ctx.nlc_torsion_free_check(&pts(&ctx, 15, 5), 1e-9).unwrap();
    assert!(!v.torsion_free);
    let w = JetPoint::from_flat(Dims::new(1, 2), &v.witness.expect("witness"));
    assert_abs_diff_eq!(v.max_violation, w.x[0].abs(), epsilon = 1e-12);
}

#[test]
fn jet_with_skipped_families_matches_full_seeding() {
    for (name, spec) in fixtures::all(2, 2) {
        let ctx = build(spec, 2, 2);
        let deps = ctx.coeff_deps();
        let pt = pts(&ctx, 16, 1).remove(0);
        let jet = ctx.coeff_jet(&pt).unwrap();
        for c in Dims::new(2, 2).coords() {
            let full = ctx.coeffs(&pt.seeded(c)).unwrap().map(|v| v.eps);
            assert_eq!(full, jet.d[c.flat(Dims::new(2, 2))], "{name} {c:?} (deps {deps})");
        }
    }
    assert_ne!(make_flat(2, 2).unwrap().coeff_deps(), Deps::ALL);
}

#[test]
fn coefficients_are_deterministic() {
    let ctx = build(fixtures::optic_spec(2, 2), 2, 2);
    for pt in pts(&ctx, 17, 3) {
        assert_eq!(ctx.coeffs(&pt).unwrap(), ctx.coeffs(&pt).unwrap());
    }
}

#[test]
fn single_precision_matches_double() {
    let ctx = build(fixtures::conformal_spec(2, 2, 2), 2, 2);
    for pt in pts(&ctx, 18, 3) {
        let lo = ctx.coeffs(&pt.map(|v| v as f32)).unwrap();
        let hi = ctx.coeffs(&pt).unwrap();
        for (a, b) in lo.cc.data().iter().zip(hi.cc.data()) {
            assert_abs_diff_eq!(*a as f64, *b, epsilon = 1e-4);
        }
    }
}

fn all_fixture_contexts() -> Vec<(&'static str, GeometryContext)> {
    fixtures::all(2, 2).into_iter().map(|(n, s)| (n, build(s, 2, 2))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metricity_holds(seed in any::<u64>(), which in 0usize..6) {
        let (name, ctx) = all_fixture_contexts().swap_remove(which);
        let pt = pts(&ctx, seed, 1).remove(0);
        let r = ctx.metricity(&pt).unwrap();
        prop_assert!(r.max() < 1e-8, "{name}: {r:?}");
    }

    #[test]
    fn coefficient_symmetries_hold(seed in any::<u64>(), which in 0usize..6) {
        let (name, ctx) = all_fixture_contexts().swap_remove(which);
        let pt = pts(&ctx, seed, 1).remove(0);
        let s = ctx.coefficient_symmetries(&pt).unwrap();
        prop_assert!(s.h.max(s.l).max(s.c) < 1e-10, "{name}: {s:?}");
    }

    #[test]
    fn curvature_antisymmetries_hold(seed in any::<u64>(), which in 0usize..4) {
        // the direction-dependent fixtures; the quadratic ones are cheaper but
        // slower to differentiate, and are covered in acceptance
        let (name, ctx) = all_fixture_contexts().swap_remove(which);
        let pt = pts(&ctx, seed, 1).remove(0);
        let c = ctx.curvature(&pt).unwrap();
        let a = c.curvature.antisymmetry(&c.coeffs);
        prop_assert!(a.max() < 1e-9, "{name}: {a:?}");
    }

    #[test]
    fn ricci_torsion_block_is_symmetric_for_torsion_free_connections(seed in any::<u64>()) {
        let ctx = build(fixtures::optic_spec(2, 2), 2, 2);
        let pt = pts(&ctx, seed, 1).remove(0);
        let t = ctx.torsion_set(&pt).unwrap();
        for ix in t.p_vs.indices() {
            let sw = [ix[0], ix[1], ix[3], ix[2], ix[4]];
            // P^{(m)(β)}_{(μ)i(j)} with i, j at positions 2, 3
            prop_assert!((t.p_vs.get(&ix) - t.p_vs.get(&sw)).abs() < 1e-10);
        }
    }
}
