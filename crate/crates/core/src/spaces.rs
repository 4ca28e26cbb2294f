//! Built-in example spaces: flat, quadratic (canonical), conformal and
//! relativistic geometric optic.

use crate::expr::{parse_field, ExprAst, ParseError};
use crate::geometry::{ev, inverse, GeometryContext, GeometryError, Lagrangian, MetricSource, NlcSpec, Sigma};
use crate::jet::{Dims, JetPoint};
use crate::scalar::Scalar;
use crate::tensor::{DTensor, Slot};

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("field {field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Spec(String),
}

pub type Matrix = Vec<Vec<String>>;

/// Conformal exponent choice, expressions as source text.
#[derive(Clone, Debug, PartialEq)]
pub enum SigmaSpec {
    Zero,
    Expr(String),
    /// `[α][i]`
    Linear(Matrix),
    Covector(Vec<String>),
    Vector(Vec<String>),
}

/// Spatial nonlinear connection choice for custom spaces.
#[derive(Clone, Debug, PartialEq)]
pub enum NlcChoice {
    QuadraticCanonical,
    ChristoffelOfPhi(Matrix),
    /// `[i][α][j]`
    UserGiven(Vec<Vec<Vec<String>>>),
}

/// A space described by source-text fields; `h` defaults to the identity.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSpec {
    Flat,
    Quadratic { h: Option<Matrix>, g: Matrix, u: Option<Matrix>, f: Option<String> },
    Conformal { h: Option<Matrix>, phi: Matrix, sigma: SigmaSpec },
    Optic { h: Option<Matrix>, phi: Matrix, index: String, dir: Vec<String> },
    Custom { h: Option<Matrix>, g: Option<Matrix>, lagrangian: Option<String>, nlc: NlcChoice },
}

/// One built-in space and its parameters, for listings.
#[derive(Clone, Debug)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [(&'static str, &'static str)],
}

pub const BUILTINS: &[BuiltinInfo] = &[
    BuiltinInfo { name: "flat", summary: "h = δ, g = δ, canonical connection; everything vanishes", params: &[] },
    BuiltinInfo {
        name: "quadratic",
        summary: "L = h^{αβ} g_ij(t,x) ẋ^i_α ẋ^j_β + U^{(α)}_{(i)} ẋ^i_α + F with its canonical connection",
        params: &[
            ("h", "p×p expressions in t (default identity)"),
            ("g", "n×n expressions in t, x"),
            ("U", "p×n expressions in t, x (default 0)"),
            ("F", "expression in t, x (default 0)"),
        ],
    },
    BuiltinInfo {
        name: "conformal",
        summary: "g = e^{2σ} φ(x), connection from the Christoffel symbols of φ",
        params: &[
            ("h", "p×p expressions in t (default identity)"),
            ("phi", "n×n expressions in x"),
            ("sigma", "\"zero\" | {\"expr\": e} | {\"linear\": U p×n in t,x} | {\"covector\": A n in x} | {\"vector\": X p in t}"),
        ],
    },
    BuiltinInfo {
        name: "optic",
        summary: "g = φ + (1 − 1/n) Y Y, Y_i = φ_im ẋ^m_μ X^μ, connection from φ",
        params: &[
            ("h", "p×p expressions in t (default identity)"),
            ("phi", "n×n expressions in x"),
            ("index", "refraction index expression (≥ 1 on samples)"),
            ("X", "p expressions in t"),
        ],
    },
    BuiltinInfo {
        name: "custom",
        summary: "explicit g or Lagrangian with a chosen spatial nonlinear connection",
        params: &[
            ("h", "p×p expressions in t (default identity)"),
            ("g", "n×n expressions (exclusive with lagrangian)"),
            ("lagrangian", "expression (exclusive with g)"),
            ("nlc", "\"quadratic\" | {\"christoffel_of_phi\": n×n in x} | {\"user\": n×p×n}"),
        ],
    },
];

fn parse(name: &str, src: &str, dims: Dims) -> Result<ExprAst, SpaceError> {
    parse_field(src, dims).map_err(|source| SpaceError::Parse { field: name.to_string(), source })
}

fn parse_matrix(name: &str, m: &Matrix, dims: Dims) -> Result<Vec<Vec<ExprAst>>, SpaceError> {
    m.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| parse(&format!("{name}[{}][{}]", i + 1, j + 1), s, dims))
                .collect()
        })
        .collect()
}

fn parse_vec(name: &str, v: &[String], dims: Dims) -> Result<Vec<ExprAst>, SpaceError> {
    v.iter().enumerate().map(|(i, s)| parse(&format!("{name}[{}]", i + 1), s, dims)).collect()
}

fn identity(k: usize, dims: Dims) -> Vec<Vec<ExprAst>> {
    (0..k)
        .map(|i| (0..k).map(|j| ExprAst::constant(if i == j { 1.0 } else { 0.0 }, dims)).collect())
        .collect()
}

fn zeros(r: usize, c: usize, dims: Dims) -> Vec<Vec<ExprAst>> {
    vec![vec![ExprAst::constant(0.0, dims); c]; r]
}

fn h_or_identity(h: &Option<Matrix>, dims: Dims) -> Result<Vec<Vec<ExprAst>>, SpaceError> {
    match h {
        Some(m) => parse_matrix("h", m, dims),
        None => Ok(identity(dims.p, dims)),
    }
}

/// `h = δ`, `g = δ`; every connection and curvature object vanishes.
pub fn make_flat(p: usize, n: usize) -> Result<GeometryContext, GeometryError> {
    let dims = Dims::new(p, n);
    GeometryContext::new(dims, identity(p, dims), MetricSource::Direct(identity(n, dims)), NlcSpec::QuadraticCanonical)
}

/// The canonical space of a Kronecker h-regular quadratic Lagrangian.
pub fn make_quadratic(
    dims: Dims,
    h: Vec<Vec<ExprAst>>,
    g: Vec<Vec<ExprAst>>,
    u: Option<Vec<Vec<ExprAst>>>,
    f: Option<ExprAst>,
) -> Result<GeometryContext, GeometryError> {
    let u = u.unwrap_or_else(|| zeros(dims.p, dims.n, dims));
    let f = f.unwrap_or_else(|| ExprAst::constant(0.0, dims));
    GeometryContext::new(
        dims,
        h,
        MetricSource::FromLagrangian(Lagrangian::Quadratic { g, u, f }),
        NlcSpec::QuadraticCanonical,
    )
}

/// `g = e^{2σ} φ` with the Christoffel connection of `φ`.
pub fn make_conformal(
    dims: Dims,
    h: Vec<Vec<ExprAst>>,
    phi: Vec<Vec<ExprAst>>,
    sigma: Sigma,
) -> Result<GeometryContext, GeometryError> {
    GeometryContext::new(
        dims,
        h,
        MetricSource::Conformal { phi: phi.clone(), sigma },
        NlcSpec::ChristoffelOfPhi(phi),
    )
}

/// The relativistic geometric optic space with the Christoffel connection of `φ`.
pub fn make_optic(
    dims: Dims,
    h: Vec<Vec<ExprAst>>,
    phi: Vec<Vec<ExprAst>>,
    index: ExprAst,
    dir: Vec<ExprAst>,
) -> Result<GeometryContext, GeometryError> {
    GeometryContext::new(
        dims,
        h,
        MetricSource::Optic { phi: phi.clone(), index, dir },
        NlcSpec::ChristoffelOfPhi(phi),
    )
}

impl SpaceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SpaceSpec::Flat => "flat",
            SpaceSpec::Quadratic { .. } => "quadratic",
            SpaceSpec::Conformal { .. } => "conformal",
            SpaceSpec::Optic { .. } => "optic",
            SpaceSpec::Custom { .. } => "custom",
        }
    }

    /// Parse every field and construct the context.
    pub fn build(&self, dims: Dims) -> Result<GeometryContext, SpaceError> {
        Ok(match self {
            SpaceSpec::Flat => make_flat(dims.p, dims.n)?,
            SpaceSpec::Quadratic { h, g, u, f } => make_quadratic(
                dims,
                h_or_identity(h, dims)?,
                parse_matrix("g", g, dims)?,
                u.as_ref().map(|u| parse_matrix("U", u, dims)).transpose()?,
                f.as_ref().map(|f| parse("F", f, dims)).transpose()?,
            )?,
            SpaceSpec::Conformal { h, phi, sigma } => {
                let sigma = match sigma {
                    SigmaSpec::Zero => Sigma::Zero,
                    SigmaSpec::Expr(e) => Sigma::Expr(parse("sigma", e, dims)?),
                    SigmaSpec::Linear(u) => Sigma::Linear(parse_matrix("U", u, dims)?),
                    SigmaSpec::Covector(a) => Sigma::Covector(parse_vec("A", a, dims)?),
                    SigmaSpec::Vector(x) => Sigma::Vector(parse_vec("X", x, dims)?),
                };
                make_conformal(dims, h_or_identity(h, dims)?, parse_matrix("phi", phi, dims)?, sigma)?
            }
            SpaceSpec::Optic { h, phi, index, dir } => make_optic(
                dims,
                h_or_identity(h, dims)?,
                parse_matrix("phi", phi, dims)?,
                parse("index", index, dims)?,
                parse_vec("X", dir, dims)?,
            )?,
            SpaceSpec::Custom { h, g, lagrangian, nlc } => {
                let source = match (g, lagrangian) {
                    (Some(g), None) => MetricSource::Direct(parse_matrix("g", g, dims)?),
                    (None, Some(l)) => MetricSource::FromLagrangian(Lagrangian::Expr(parse("lagrangian", l, dims)?)),
                    _ => return Err(SpaceError::Spec("custom space needs exactly one of g or lagrangian".into())),
                };
                let nlc = match nlc {
                    NlcChoice::QuadraticCanonical => NlcSpec::QuadraticCanonical,
                    NlcChoice::ChristoffelOfPhi(phi) => NlcSpec::ChristoffelOfPhi(parse_matrix("phi", phi, dims)?),
                    NlcChoice::UserGiven(nn) => NlcSpec::UserGiven(
                        nn.iter()
                            .enumerate()
                            .map(|(i, a)| {
                                a.iter()
                                    .enumerate()
                                    .map(|(al, row)| {
                                        row.iter()
                                            .enumerate()
                                            .map(|(j, s)| parse(&format!("N[{}][{}][{}]", i + 1, al + 1, j + 1), s, dims))
                                            .collect()
                                    })
                                    .collect()
                            })
                            .collect::<Result<_, _>>()?,
                    ),
                };
                GeometryContext::new(dims, h_or_identity(h, dims)?, source, nlc)?
            }
        })
    }
}

/// The closed-form `g^{ij}` displayed for the optic space, evaluated exactly
/// as printed: `φ^{ij} + [(1 − 1/n) / (1 + (1 − 1/n) Y²)] Y^i Y^j`.
///
/// The numeric inverse of `g` stays authoritative everywhere else; this is
/// only compared against it.
pub fn optic_inverse_closed<S: Scalar>(ctx: &GeometryContext, pt: &JetPoint<S>) -> Result<DTensor<S>, GeometryError> {
    optic_inverse_with_sign(ctx, pt, S::one())
}

/// The Sherman–Morrison inverse of the same rank-one update (coefficient
/// sign reversed relative to the displayed form), for diagnosing
/// disagreements of [`optic_inverse_closed`].
pub fn optic_inverse_rank_one<S: Scalar>(ctx: &GeometryContext, pt: &JetPoint<S>) -> Result<DTensor<S>, GeometryError> {
    optic_inverse_with_sign(ctx, pt, -S::one())
}

fn optic_inverse_with_sign<S: Scalar>(ctx: &GeometryContext, pt: &JetPoint<S>, sign: S) -> Result<DTensor<S>, GeometryError> {
    let MetricSource::Optic { phi, index, dir } = ctx.g_source() else {
        return Err(GeometryError::Precondition("not an optic space".into()));
    };
    let dims = ctx.dims();
    let n = dims.n;
    let mut phi_v = DTensor::zeros(&[Slot::SpatialDown, Slot::SpatialDown], dims);
    for i in 0..n {
        for j in 0..n {
            phi_v.set(&[i, j], ev("phi", &phi[i][j], pt)?);
        }
    }
    let phi_inv = inverse("phi", &phi_v, pt)?;
    let xv: Vec<S> = dir.iter().map(|e| ev("X", e, pt)).collect::<Result<_, _>>()?;
    let w: Vec<S> = (0..n).map(|m| (0..dims.p).map(|mu| pt.xs(m, mu) * xv[mu]).sum()).collect();
    let y_lo: Vec<S> = (0..n).map(|i| (0..n).map(|m| phi_v.get(&[i, m]) * w[m]).sum()).collect();
    let y_up: Vec<S> = (0..n).map(|i| (0..n).map(|r| phi_inv.get(&[i, r]) * y_lo[r]).sum()).collect();
    let y2: S = (0..n).map(|m| y_up[m] * y_lo[m]).sum();
    let nv = ev("index", index, pt)?;
    let f = S::one() - nv.recip();
    let c = sign * f / (S::one() + f * y2);
    Ok(DTensor::from_fn(&[Slot::SpatialUp, Slot::SpatialUp], dims, |ix| {
        phi_inv.get(ix) + c * y_up[ix[0]] * y_up[ix[1]]
    }))
}

/// Desk-scale fixtures with non-trivial fields on the default box
/// `[−1, 1]`: curved `h`, x-dependent `φ`, direction-dependent metrics.
pub mod fixtures {
    use super::*;

    fn idx(k: usize, n: usize) -> usize {
        k % n + 1
    }

    /// `h_αα = 1 + 0.25 (t^{α+1})²`, `h_12 = 0.1 sin t¹`.
    pub fn curved_h(p: usize) -> Matrix {
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        if a == b {
                            format!("1 + 0.25*t[{}]^2", idx(a + 1, p))
                        } else if p > 1 && a + b == 1 {
                            "0.1*sin(t[1])".to_string()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `φ_ii = 1 + 0.2 (x^{i+1})²`, `φ_12 = 0.1 x¹ x²` (n ≥ 2).
    pub fn curved_phi(n: usize) -> Matrix {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            format!("1 + 0.2*x[{}]^2", idx(i + 1, n))
                        } else if n > 1 && i + j == 1 {
                            "0.1*x[1]*x[2]".to_string()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn ident(k: usize) -> Matrix {
        (0..k).map(|i| (0..k).map(|j| if i == j { "1" } else { "0" }.to_string()).collect()).collect()
    }

    pub fn optic_spec(p: usize, n: usize) -> SpaceSpec {
        SpaceSpec::Optic {
            h: Some(curved_h(p)),
            phi: curved_phi(n),
            index: "1.5 + 0.3*sin(x[1]) + 0.1*t[1]*xs[1][1]^2".into(),
            dir: (0..p).map(|a| if a == 0 { "1 + 0.2*t[1]".to_string() } else { format!("0.5 - 0.1*t[{}]", a + 1) }).collect(),
        }
    }

    /// Conformal space with `σ` variant `i` (linear), `ii` (covector) or
    /// `iii` (vector); `variant` is 1, 2 or 3.
    pub fn conformal_spec(p: usize, n: usize, variant: u8) -> SpaceSpec {
        let sigma = match variant {
            1 => SigmaSpec::Linear(
                (0..p)
                    .map(|a| (0..n).map(|i| format!("0.2*sin(t[{}] + x[{}]) + 0.1", a + 1, i + 1)).collect())
                    .collect(),
            ),
            2 => SigmaSpec::Covector((0..n).map(|i| format!("0.3 + 0.1*x[{}]", idx(i + 1, n))).collect()),
            3 => SigmaSpec::Vector((0..p).map(|a| format!("0.3*cos(t[{}])", a + 1)).collect()),
            _ => panic!("conformal variants are 1, 2, 3"),
        };
        SpaceSpec::Conformal { h: Some(curved_h(p)), phi: curved_phi(n), sigma }
    }

    /// Quadratic Lagrangian with `t`- and `x`-dependent `g`, non-zero `U`, `F`.
    pub fn quadratic_spec(p: usize, n: usize) -> SpaceSpec {
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            format!("1 + 0.2*x[{}]^2 + 0.1*t[1]*x[{}]", idx(i + 1, n), i + 1)
                        } else if i + j == 1 {
                            "0.1*x[1]*x[2]*cos(t[1])".to_string()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        SpaceSpec::Quadratic {
            h: Some(curved_h(p)),
            g,
            u: Some((0..p).map(|a| (0..n).map(|i| format!("0.3*x[{}]*t[{}]", i + 1, a + 1)).collect()).collect()),
            f: Some("x[1]^2 + t[1]".into()),
        }
    }

    /// Curved `h`, `g = δ`.
    pub fn curved_h_flat_g_spec(p: usize, n: usize) -> SpaceSpec {
        SpaceSpec::Quadratic { h: Some(curved_h(p)), g: ident(n), u: None, f: None }
    }

    /// `(name, spec)` for every named fixture at `(p, n)`.
    pub fn all(p: usize, n: usize) -> Vec<(&'static str, SpaceSpec)> {
        vec![
            ("optic", optic_spec(p, n)),
            ("conformal-i", conformal_spec(p, n, 1)),
            ("conformal-ii", conformal_spec(p, n, 2)),
            ("conformal-iii", conformal_spec(p, n, 3)),
            ("quadratic", quadratic_spec(p, n)),
            ("curved-h-flat-g", curved_h_flat_g_spec(p, n)),
        ]
    }
}
