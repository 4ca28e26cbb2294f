mod common;

use approx::assert_abs_diff_eq;
use common::*;
use jetlag::geometry::GeometryError;
use jetlag::jet::{Dims, JetPoint};
use jetlag::sampling::{sample_points, SampleBox};
use jetlag::spaces::{fixtures, make_flat, optic_inverse_closed, optic_inverse_rank_one, SigmaSpec, SpaceSpec, BUILTINS};
use jetlag::{linalg, GeometryContext};
use proptest::prelude::*;

fn pts(ctx: &GeometryContext, seed: u64, count: usize) -> Vec<JetPoint<f64>> {
    sample_points(ctx, seed, count, &SampleBox::default()).unwrap()
}

fn ident(n: usize) -> Vec<Vec<String>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { "1" } else { "0" }.to_string()).collect()).collect()
}

fn optic_example(index: &str) -> GeometryContext {
    build(SpaceSpec::Optic { h: None, phi: ident(2), index: index.into(), dir: vec!["1".into(), "0".into()] }, 2, 2)
}

#[test]
fn builtin_listing_covers_every_variant() {
    let names: Vec<_> = BUILTINS.iter().map(|b| b.name).collect();
    assert_eq!(names, ["flat", "quadratic", "conformal", "optic", "custom"]);
}

#[test]
fn trivial_quadratic_equals_flat() {
    let q = build(SpaceSpec::Quadratic { h: None, g: ident(2), u: None, f: None }, 2, 2);
    let f = make_flat(2, 2).unwrap();
    for pt in pts(&f, 1, 3) {
        assert_eq!(q.coeffs(&pt).unwrap(), f.coeffs(&pt).unwrap());
    }
}

#[test]
fn linear_and_potential_terms_do_not_change_the_geometry() {
    let base = fixtures::quadratic_spec(2, 2);
    let SpaceSpec::Quadratic { h, g, .. } = base.clone() else { unreachable!() };
    let bare = build(SpaceSpec::Quadratic { h, g, u: None, f: None }, 2, 2);
    let full = build(base, 2, 2);
    for pt in pts(&bare, 2, 2) {
        let (a, b) = (bare.curvature(&pt).unwrap(), full.curvature(&pt).unwrap());
        assert!(max_dev(a.coeffs.lc.data(), b.coeffs.lc.data()) < 1e-12);
        assert!(max_dev(a.curvature.r_ss.data(), b.curvature.r_ss.data()) < 1e-10);
    }
}

#[test]
fn optic_metric_example() {
    let ctx = optic_example("2");
    let pt = point(&[0.0, 0.0], &[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 0.0]]);
    let g = ctx.eval_g(&pt).unwrap();
    assert_eq!(g.data(), &[1.5, 0.0, 0.0, 1.0]);
    let numeric = ctx.g_inverse(&pt).unwrap();
    assert!(max_dev(numeric.data(), &[2.0 / 3.0, 0.0, 0.0, 1.0]) < 1e-15);
    let rank_one = optic_inverse_rank_one(&ctx, &pt).unwrap();
    assert!(max_dev(rank_one.data(), numeric.data()) < 1e-15);
    // the displayed closed form: φ^{11} + ½/(1 + ½) = 4/3
    let closed = optic_inverse_closed(&ctx, &pt).unwrap();
    assert_abs_diff_eq!(closed.get(&[0, 0]), 4.0 / 3.0, epsilon = 1e-15);
    assert_eq!(closed.get(&[0, 1]), 0.0);
    assert_eq!(closed.get(&[1, 0]), 0.0);
}

#[test]
fn optic_inverse_paths_on_the_fixture() {
    let ctx = build(fixtures::optic_spec(2, 3), 2, 3);
    for pt in pts(&ctx, 3, 20) {
        let numeric = ctx.g_inverse(&pt).unwrap();
        let rank_one = optic_inverse_rank_one(&ctx, &pt).unwrap();
        assert!(max_dev(rank_one.data(), numeric.data()) < 1e-12);
    }
}

#[test]
fn unit_index_gives_the_underlying_metric() {
    let phi = fixtures::curved_phi(2);
    let optic = build(SpaceSpec::Optic { h: None, phi: phi.clone(), index: "1".into(), dir: vec!["1".into(), "0.3".into()] }, 2, 2);
    let conf = build(SpaceSpec::Conformal { h: None, phi: phi.clone(), sigma: SigmaSpec::Zero }, 2, 2);
    let plain = build(SpaceSpec::Quadratic { h: None, g: phi, u: None, f: None }, 2, 2);
    for pt in pts(&plain, 4, 5) {
        let want = plain.eval_g(&pt).unwrap();
        assert_eq!(optic.eval_g(&pt).unwrap(), want);
        assert_eq!(conf.eval_g(&pt).unwrap(), want);
        assert!(max_dev(optic_inverse_closed(&optic, &pt).unwrap().data(), optic.g_inverse(&pt).unwrap().data()) < 1e-14);
    }
}

#[test]
fn zero_direction_gives_the_underlying_metric() {
    let optic = build(SpaceSpec::Optic { h: None, phi: fixtures::curved_phi(2), index: "2".into(), dir: vec!["0".into(), "0".into()] }, 2, 2);
    for pt in pts(&optic, 5, 3) {
        let y = optic.eval_g(&pt).unwrap();
        assert_abs_diff_eq!(y.get(&[0, 0]), 1.0 + 0.2 * pt.x[1] * pt.x[1], epsilon = 1e-15);
    }
}

#[test]
fn covector_conformal_example() {
    let spec = SpaceSpec::Conformal { h: None, phi: ident(2), sigma: SigmaSpec::Covector(vec!["1".into(), "0".into()]) };
    let ctx = build(spec, 2, 2);
    let pt = point(&[0.1, 0.2], &[0.3, 0.4], &[&[0.5, 0.0], &[0.7, -0.2]]);
    let g = ctx.eval_g(&pt).unwrap();
    let e = 0.5f64.exp();
    assert!(max_dev(g.data(), &[e, 0.0, 0.0, e]) < 1e-14);
}

#[test]
fn zero_linear_sigma_is_the_zero_case() {
    let zero_u = vec![vec!["0".to_string(); 2]; 2];
    let lin = build(SpaceSpec::Conformal { h: None, phi: fixtures::curved_phi(2), sigma: SigmaSpec::Linear(zero_u) }, 2, 2);
    let none = build(SpaceSpec::Conformal { h: None, phi: fixtures::curved_phi(2), sigma: SigmaSpec::Zero }, 2, 2);
    for pt in pts(&none, 6, 3) {
        assert_eq!(lin.eval_g(&pt).unwrap(), none.eval_g(&pt).unwrap());
    }
}

#[test]
fn refraction_index_below_one_is_a_domain_error() {
    let ctx = optic_example("0.5 + 0.1*x[1]");
    let pt = point(&[0.0, 0.0], &[0.2, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]]);
    match ctx.eval_g(&pt) {
        Err(GeometryError::Domain { point, .. }) => assert_eq!(point, pt.to_flat()),
        other => panic!("expected a domain error, got {other:?}"),
    }
}

#[test]
fn structural_constraints_are_validated() {
    // φ may depend only on x
    let bad = SpaceSpec::Conformal { h: None, phi: mat(&[&["1 + t[1]^2", "0"], &["0", "1"]]), sigma: SigmaSpec::Zero };
    assert!(bad.build(Dims::new(2, 2)).is_err());
    // quadratic g must not depend on directions
    let bad = SpaceSpec::Quadratic { h: None, g: mat(&[&["1 + xs[1][1]^2", "0"], &["0", "1"]]), u: None, f: None };
    assert!(bad.build(Dims::new(2, 2)).is_err());
    // refraction direction depends only on t
    let bad = SpaceSpec::Optic { h: None, phi: ident(2), index: "2".into(), dir: vec!["x[1]".into(), "0".into()] };
    assert!(bad.build(Dims::new(2, 2)).is_err());
    // index may depend on everything
    let ok = SpaceSpec::Optic { h: None, phi: ident(2), index: "1 + 0.5/(1+x[1]^2) + t[1]^2 + xs[1][1]^2".into(), dir: vec!["1".into(), "0".into()] };
    assert!(ok.build(Dims::new(2, 2)).is_ok());
}

#[test]
fn single_time_context_builds_without_special_handling() {
    let ctx = make_flat(1, 3).unwrap();
    let pt = pts(&ctx, 7, 1).remove(0);
    assert_eq!(ctx.curvature(&pt).unwrap().scalars.total(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optic_metric_is_positive_definite(seed in any::<u64>(), n in 2usize..4) {
        let ctx = fixtures::optic_spec(2, n).build(Dims::new(2, n)).unwrap();
        let pt = pts(&ctx, seed, 1).remove(0);
        let g = ctx.eval_g(&pt).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.get(&[i, j]), g.get(&[j, i]));
            }
        }
        prop_assert!(linalg::sym_eigenvalues(g.data(), n).iter().all(|&l| l > 0.0));
    }

    #[test]
    fn every_fixture_is_metric(seed in any::<u64>(), which in 0usize..6) {
        let (name, spec) = fixtures::all(2, 2).swap_remove(which);
        let ctx = spec.build(Dims::new(2, 2)).unwrap();
        let pt = pts(&ctx, seed, 1).remove(0);
        prop_assert!(ctx.metricity(&pt).unwrap().max() < 1e-8, "{}", name);
    }
}
