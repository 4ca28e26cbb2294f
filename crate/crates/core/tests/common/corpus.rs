//! Parser corpora and the source text of every built-in space expression.

use jetlag::jet::{Dims, JetPoint};
use jetlag::spaces::{fixtures, SigmaSpec, SpaceSpec};

/// t = (2, −1), x = (3, 0.5), ẋ = [[5, 0.25], [−2, 1]], at (p, n) = (2, 2).
pub fn reference_point() -> JetPoint<f64> {
    JetPoint::new(vec![2.0, -1.0], vec![3.0, 0.5], vec![vec![5.0, 0.25], vec![-2.0, 1.0]]).unwrap()
}

/// `(source, value at the reference point)`
pub const VALUES: &[(&str, f64)] = &[
    ("1 + 2*3", 7.0),
    ("(1 + 2)*3", 9.0),
    ("2^3^2", 512.0),
    ("(2^3)^2", 64.0),
    ("-2^2", -4.0),
    ("(-2)^2", 4.0),
    ("2^-1", 0.5),
    ("--3", 3.0),
    ("-(-3)", 3.0),
    ("8/4/2", 1.0),
    ("8 - 4 - 2", 2.0),
    ("2*3^2", 18.0),
    ("-2*3", -6.0),
    ("1 - -1", 2.0),
    ("2^-1^2", 0.5),
    ("1.5e2", 150.0),
    ("2.5E-1", 0.25),
    (".5 + 0.5", 1.0),
    ("x[1]^2", 9.0),
    ("t[1]*xs[1][1]", 10.0),
    ("xs[1][2] + xs[2][1]", -1.75),
    ("t[2]^2", 1.0),
    ("t[2]^3", -1.0),
    ("exp(0)", 1.0),
    ("log(exp(2))", 2.0),
    ("sin(0) + cos(0)", 1.0),
    ("sqrt(x[1]^2 + 16)", 5.0),
    ("tanh(0)", 0.0),
    ("abs(t[2])", 1.0),
    ("abs(-x[1])*2", 6.0),
    ("  1\t+\n2 ", 3.0),
    ("x[2]^0.5*x[2]^0.5", 0.5),
    ("1/(1 + x[1])", 0.25),
    ("exp(2*t[1]*x[1]) / exp(12)", 1.0),
];

/// `(source, byte offset of the error)`
pub const PARSE_ERRORS: &[(&str, usize)] = &[
    ("", 0),
    ("1 +", 3),
    ("(1 + 2", 6),
    ("1 + 2)", 5),
    ("2 ** 3", 3),
    ("xs[1][3]", 6),
    ("xs[3][1]", 3),
    ("t[0]", 2),
    ("t[3]", 2),
    ("x[", 2),
    ("x[1", 3),
    ("foo(1)", 0),
    ("sin 1", 4),
    ("1 2", 2),
    ("y[1]", 0),
    ("t", 1),
    ("1 $ 2", 2),
    ("exp()", 4),
];

pub const DOMAIN_ERRORS: &[&str] = &["log(0)", "log(t[2])", "sqrt(t[2])", "1/(x[1] - 3)", "t[2]^0.5", "(x[1] - 3)^-1"];

pub fn all_builtin_sources() -> Vec<(Dims, String)> {
    let mut out = Vec::new();
    for (p, n) in [(2, 2), (3, 3)] {
        let dims = Dims::new(p, n);
        for (_, spec) in fixtures::all(p, n) {
            let mut push = |m: &Vec<Vec<String>>| out.extend(m.iter().flatten().map(|s| (dims, s.clone())));
            match &spec {
                SpaceSpec::Quadratic { h, g, u, f } => {
                    h.iter().chain(u).for_each(&mut push);
                    push(g);
                    out.extend(f.iter().map(|s| (dims, s.clone())));
                }
                SpaceSpec::Conformal { h, phi, sigma } => {
                    h.iter().for_each(&mut push);
                    push(phi);
                    match sigma {
                        SigmaSpec::Linear(u) => push(u),
                        SigmaSpec::Covector(v) | SigmaSpec::Vector(v) => out.extend(v.iter().map(|s| (dims, s.clone()))),
                        SigmaSpec::Expr(e) => out.push((dims, e.clone())),
                        SigmaSpec::Zero => {}
                    }
                }
                SpaceSpec::Optic { h, phi, index, dir } => {
                    h.iter().for_each(&mut push);
                    push(phi);
                    out.push((dims, index.clone()));
                    out.extend(dir.iter().map(|s| (dims, s.clone())));
                }
                _ => {}
            }
        }
    }
    out
}

