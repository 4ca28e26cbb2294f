//! Run configuration: JSON schema, loading and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use jetlag::jet::{Dims, JetPoint};
use jetlag::sampling::{sample_points, SampleBox, SamplingError};
use jetlag::spaces::{fixtures, Matrix, NlcChoice, SigmaSpec, SpaceError, SpaceSpec};
use jetlag::GeometryContext;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("space: {0}")]
    Space(#[from] SpaceError),
    #[error("points: {0}")]
    Sampling(#[from] SamplingError),
}

fn schema(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.to_string(), message: message.into() }
}

/// An expression field; JSON numbers are accepted as constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Expr(pub String);

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            N(f64),
        }
        match Raw::deserialize(d).map_err(|_| serde::de::Error::custom("expected an expression string or a number"))? {
            Raw::S(s) => Ok(Expr(s)),
            Raw::N(v) => Ok(Expr(format!("{v:?}"))),
        }
    }
}

type ExprMatrix = Vec<Vec<Expr>>;

fn strings(m: &[Vec<Expr>]) -> Matrix {
    m.iter().map(|r| r.iter().map(|e| e.0.clone()).collect()).collect()
}

fn strings1(v: &[Expr]) -> Vec<String> {
    v.iter().map(|e| e.0.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaCfg {
    Zero,
    Expr(Expr),
    Linear(ExprMatrix),
    Covector(Vec<Expr>),
    Vector(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlcCfg {
    Quadratic,
    ChristoffelOfPhi(ExprMatrix),
    User(Vec<Vec<Vec<Expr>>>),
}

/// Space section. A bare string names a ready-made fixture at the
/// configured dimensions; an object gives a built-in with explicit fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceCfg {
    Fixture {
        fixture: String,
    },
    Flat {},
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<ExprMatrix>,
        g: ExprMatrix,
        #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
        u: Option<ExprMatrix>,
        #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
        f: Option<Expr>,
    },
    Conformal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<ExprMatrix>,
        phi: ExprMatrix,
        sigma: SigmaCfg,
    },
    Optic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<ExprMatrix>,
        phi: ExprMatrix,
        index: Expr,
        #[serde(rename = "X")]
        dir: Vec<Expr>,
    },
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<ExprMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<ExprMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lagrangian: Option<Expr>,
        nlc: NlcCfg,
    },
}

impl SpaceCfg {
    fn to_spec(&self, dims: Dims) -> Result<SpaceSpec, ConfigError> {
        let h = |h: &Option<ExprMatrix>| h.as_deref().map(strings);
        Ok(match self {
            SpaceCfg::Fixture { fixture } => {
                if fixture == "flat" {
                    return Ok(SpaceSpec::Flat);
                }
                fixtures::all(dims.p, dims.n)
                    .into_iter()
                    .find(|(name, _)| name == fixture)
                    .map(|(_, s)| s)
                    .ok_or_else(|| schema("space", format!("unknown fixture {fixture:?}; see `jetlag spaces`")))?
            }
            SpaceCfg::Flat {} => SpaceSpec::Flat,
            SpaceCfg::Quadratic { h: hh, g, u, f } => SpaceSpec::Quadratic {
                h: h(hh),
                g: strings(g),
                u: u.as_deref().map(strings),
                f: f.as_ref().map(|f| f.0.clone()),
            },
            SpaceCfg::Conformal { h: hh, phi, sigma } => SpaceSpec::Conformal {
                h: h(hh),
                phi: strings(phi),
                sigma: match sigma {
                    SigmaCfg::Zero => SigmaSpec::Zero,
                    SigmaCfg::Expr(e) => SigmaSpec::Expr(e.0.clone()),
                    SigmaCfg::Linear(u) => SigmaSpec::Linear(strings(u)),
                    SigmaCfg::Covector(a) => SigmaSpec::Covector(strings1(a)),
                    SigmaCfg::Vector(x) => SigmaSpec::Vector(strings1(x)),
                },
            },
            SpaceCfg::Optic { h: hh, phi, index, dir } => {
                SpaceSpec::Optic { h: h(hh), phi: strings(phi), index: index.0.clone(), dir: strings1(dir) }
            }
            SpaceCfg::Custom { h: hh, g, lagrangian, nlc } => SpaceSpec::Custom {
                h: h(hh),
                g: g.as_deref().map(strings),
                lagrangian: lagrangian.as_ref().map(|l| l.0.clone()),
                nlc: match nlc {
                    NlcCfg::Quadratic => NlcChoice::QuadraticCanonical,
                    NlcCfg::ChristoffelOfPhi(phi) => NlcChoice::ChristoffelOfPhi(strings(phi)),
                    NlcCfg::User(nn) => {
                        NlcChoice::UserGiven(nn.iter().map(|a| a.iter().map(|r| strings1(r)).collect()).collect())
                    }
                },
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Metricity,
    Antisymmetry,
    Torsion,
    Curvature,
    Maxwell,
    Einstein,
    Conservation,
    NaturalForm,
    Regularity,
    GradCheck,
}

impl CheckKind {
    pub const ALL: [CheckKind; 10] = [
        CheckKind::Metricity,
        CheckKind::Antisymmetry,
        CheckKind::Torsion,
        CheckKind::Curvature,
        CheckKind::Maxwell,
        CheckKind::Einstein,
        CheckKind::Conservation,
        CheckKind::NaturalForm,
        CheckKind::Regularity,
        CheckKind::GradCheck,
    ];

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckKind::Metricity => 1e-8,
            CheckKind::Antisymmetry | CheckKind::Torsion | CheckKind::Regularity | CheckKind::NaturalForm => 1e-9,
            CheckKind::Curvature => 1e-10,
            CheckKind::Maxwell | CheckKind::Einstein => 1e-7,
            CheckKind::Conservation => 1e-6,
            CheckKind::GradCheck => 1e-5,
        }
    }
}

/// Component families that can be dumped per point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DumpFamily {
    Coeffs,
    Torsion,
    Curvature,
    Ricci,
    Scalars,
    Einstein,
    StressEnergy,
    Em,
}

fn kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.trim().to_string())).map_err(|_| format!("unknown name {:?}", s.trim()))
}

impl FromStr for DumpFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        kebab(s)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_value(self) {
            Ok(Value::String(s)) => f.write_str(&s),
            _ => unreachable!(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCfg {
    #[serde(default = "unit_range")]
    pub t: [f64; 2],
    #[serde(default = "unit_range")]
    pub x: [f64; 2],
    #[serde(default = "unit_range")]
    pub xs: [f64; 2],
}

fn unit_range() -> [f64; 2] {
    [-1.0, 1.0]
}

impl Default for BoxCfg {
    fn default() -> Self {
        BoxCfg { t: unit_range(), x: unit_range(), xs: unit_range() }
    }
}

impl BoxCfg {
    fn sample_box(&self) -> SampleBox {
        SampleBox { t: (self.t[0], self.t[1]), x: (self.x[0], self.x[1]), xs: (self.xs[0], self.xs[1]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPoint {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `[i][α]`
    pub xs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub count: usize,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bx: Option<BoxCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit: Vec<ExplicitPoint>,
}

/// The configuration file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub p: usize,
    pub n: usize,
    pub space: SpaceCfg,
    /// Gravitational constant 𝒦 of the Einstein equations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub points: PointsCfg,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<CheckKind, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dump: Vec<DumpFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dump: Vec<DumpFamily>,
}

/// A fully validated run: space built, points drawn.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// The configuration after overrides, echoed into the report.
    pub raw: RawConfig,
    pub dims: Dims,
    pub space_name: String,
    pub ctx: GeometryContext,
    pub checks: Vec<(CheckKind, f64)>,
    pub dump: Vec<DumpFamily>,
    pub points: Vec<JetPoint<f64>>,
    /// How many of `points` were sampled (they follow the explicit ones).
    pub sampled: usize,
}

pub fn load_config(path: &Path, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, ov)
}

pub fn parse_config(text: &str, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::Json { line: e.line(), column: e.column(), message: e.to_string() })?;
    // `"space": "optic"` is shorthand for the fixture of that name
    if let Some(space) = value.get_mut("space") {
        if let Value::String(s) = space {
            *space = serde_json::json!({ "name": "fixture", "fixture": s });
        }
    }
    let mut raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "config" } else { &path }, e.into_inner().to_string())
    })?;
    if let Some(seed) = ov.seed {
        raw.points.seed = Some(seed);
    }
    for &d in &ov.dump {
        if !raw.dump.contains(&d) {
            raw.dump.push(d);
        }
    }
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    if raw.p == 0 || raw.n == 0 {
        return Err(schema("p/n", "dimensions must be at least 1"));
    }
    let dims = Dims::new(raw.p, raw.n);

    let mut checks = Vec::new();
    for &c in &raw.checks {
        if !checks.iter().any(|&(k, _)| k == c) {
            checks.push((c, c.default_tolerance()));
        }
    }
    for (&k, &tol) in &raw.tolerances {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(schema(&format!("tolerances.{k}"), format!("tolerance must be positive and finite, got {tol}")));
        }
        if let Some(c) = checks.iter_mut().find(|(c, _)| *c == k) {
            c.1 = tol;
        }
    }
    if checks.iter().any(|&(c, _)| c == CheckKind::NaturalForm) && (raw.p <= 2 || raw.n <= 2) {
        return Err(schema(
            "checks",
            format!("natural-form needs p > 2 and n > 2 (the natural form is defined only then), got p = {}, n = {}", raw.p, raw.n),
        ));
    }
    if let Some(k) = raw.kappa {
        if !k.is_finite() || k == 0.0 {
            return Err(schema("kappa", format!("the gravitational constant must be finite and nonzero, got {k}")));
        }
    }

    let spec = raw.space.to_spec(dims)?;
    let mut ctx = spec.build(dims)?;
    if let Some(k) = raw.kappa {
        ctx = ctx.with_kappa(k);
    }

    let mut points = Vec::with_capacity(raw.points.explicit.len() + raw.points.count);
    for (k, e) in raw.points.explicit.iter().enumerate() {
        let path = format!("points.explicit[{k}]");
        if e.t.len() != raw.p || e.x.len() != raw.n || e.xs.len() != raw.n || e.xs.iter().any(|r| r.len() != raw.p) {
            return Err(schema(&path, format!("expected t[{p}], x[{n}], xs[{n}][{p}]", p = raw.p, n = raw.n)));
        }
        if e.t.iter().chain(&e.x).chain(e.xs.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(schema(&path, "coordinates must be finite"));
        }
        points.push(JetPoint::new(e.t.clone(), e.x.clone(), e.xs.clone()).map_err(|err| schema(&path, err.to_string()))?);
    }
    let mut sampled = 0;
    if raw.points.count > 0 {
        let seed = raw.points.seed.ok_or_else(|| schema("points.seed", "a seed is required to sample points"))?;
        let bx = raw.points.bx.clone().unwrap_or_default().sample_box();
        bx.validate().map_err(|m| schema("points.box", m))?;
        let drawn = sample_points(&ctx, seed, raw.points.count, &bx)?;
        sampled = drawn.len();
        points.extend(drawn);
    }
    if points.is_empty() {
        return Err(schema("points", "at least one point is required (explicit, or count with a seed)"));
    }

    Ok(RunConfig {
        space_name: match &raw.space {
            SpaceCfg::Fixture { fixture } => fixture.clone(),
            _ => spec.name().to_string(),
        },
        dump: raw.dump.clone(),
        raw,
        dims,
        ctx,
        checks,
        points,
        sampled,
    })
}
