//! JSON run configuration: parameters, domain, problem data, numerics, and
//! output routing. Unknown keys are rejected everywhere.

use fraclap::domain::Domain;
use fraclap::geom::{Ball, Point};
use fraclap::kernels::FracParams;
use fraclap::quadrature::{QuadConfig, ScalarField, Smoothness};
use fraclap::solver::WalkConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}
impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamSpec,
    pub domain: DomainSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub diagnostic_field: Option<FieldSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub n: usize,
    pub s: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball {
        c: Vec<f64>,
        r: f64,
    },
    Lens {
        outer: BallSpec,
        carve: BallSpec,
    },
    Intersection {
        parts: Vec<DomainSpec>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub c: Vec<f64>,
    pub r: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub f: Option<FieldSpec>,
    #[serde(default)]
    pub g: Option<FieldSpec>,
    #[serde(default)]
    pub c: Option<FieldSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// Indicator of a half-space `x_axis > threshold` or of a ball-shaped
    /// region.
    Indicator {
        region: RegionSpec,
    },
    /// The closed-form solution of unit source and zero exterior data on the
    /// domain ball.
    Torsion,
    /// The boundary-singular zero-data solution `(1-|x|²)^{s-1}` on the unit
    /// ball.
    NonuniquenessExample,
    /// Radial closed form in `r = |x|`, e.g. `"(1 - r*r)^0.5"`.
    Radial {
        expr: String,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum RegionSpec {
    Halfspace { axis: usize, threshold: f64 },
    Ball { c: Vec<f64>, r: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum GridSpec {
    /// Points along coordinate axis `axis` at radii `(i+1/2)/count · max_r`.
    Radial {
        count: usize,
        #[serde(default = "default_max_r_fraction")]
        max_r_fraction: f64,
        #[serde(default)]
        axis: usize,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
}

fn default_max_r_fraction() -> f64 {
    0.98
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    /// Geometric ladder `2^{-start} … 2^{-stop}` times the inradius.
    pub start_exp: u32,
    pub stop_exp: u32,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub samples: usize,
    pub include_lens_monte_carlo: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            samples: 1000,
            include_lens_monte_carlo: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "csv".into()
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.params.n == 0 || self.params.n > 3 {
            return err("params.n must be 1, 2 or 3 for field-level computations");
        }
        if !(self.params.s > 0.0 && self.params.s < 1.0) {
            return err("params.s must lie in (0,1)");
        }
        self.quadrature
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.walk.validate().map_err(|e| ConfigError(e.to_string()))?;
        if let Some(LadderSpec { start_exp, stop_exp }) = self.ladder {
            if stop_exp <= start_exp {
                return err("ladder.stop_exp must exceed ladder.start_exp");
            }
        }
        if let Some(out) = &self.output {
            if out.format != "csv" && out.format != "json" {
                return err("output.format must be \"csv\" or \"json\"");
            }
        }
        Ok(())
    }

    pub fn frac_params(&self) -> Result<FracParams, ConfigError> {
        FracParams::new(self.params.n, self.params.s).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_domain(&self) -> Result<Domain, ConfigError> {
        build_domain(&self.domain, self.params.n)
    }

    /// The configured domain when it is a plain ball.
    pub fn domain_ball(&self) -> Option<Ball> {
        match &self.domain {
            DomainSpec::Ball { c, r } => Some(Ball::new(Point::new(c), *r)),
            _ => None,
        }
    }

    pub fn build_field(&self, spec: &Option<FieldSpec>) -> Result<ScalarField, ConfigError> {
        match spec {
            None => Ok(ScalarField::constant(self.params.n, 0.0)),
            Some(s) => build_field(s, self.params.n, self.params.s, &self.domain),
        }
    }

    pub fn eps_ladder(&self, dom: &Domain) -> Vec<f64> {
        let (a, b) = match self.ladder {
            Some(l) => (l.start_exp, l.stop_exp),
            None => (3, 10),
        };
        (a..=b)
            .map(|k| dom.inradius() * 0.5f64.powi(k as i32))
            .collect()
    }
}

pub fn build_domain(spec: &DomainSpec, n: usize) -> Result<Domain, ConfigError> {
    let ball = |c: &Vec<f64>, r: f64| -> Result<Ball, ConfigError> {
        if c.len() != n {
            return err(format!("center has {} coords, expected {n}", c.len()));
        }
        if r <= 0.0 {
            return err("radius must be positive");
        }
        Ok(Ball::new(Point::new(c), r))
    };
    match spec {
        DomainSpec::Ball { c, r } => Ok(Domain::ball(ball(c, *r)?)),
        DomainSpec::Lens { outer, carve } => {
            Domain::lens(ball(&outer.c, outer.r)?, ball(&carve.c, carve.r)?)
                .map_err(|e| ConfigError(e.to_string()))
        }
        DomainSpec::Intersection { parts } => {
            let doms = parts
                .iter()
                .map(|p| build_domain(p, n))
                .collect::<Result<Vec<_>, _>>()?;
            Domain::intersection(&doms).map_err(|e| ConfigError(e.to_string()))
        }
    }
}

fn build_field(
    spec: &FieldSpec,
    n: usize,
    s: f64,
    domain: &DomainSpec,
) -> Result<ScalarField, ConfigError> {
    match spec {
        FieldSpec::Zero => Ok(ScalarField::constant(n, 0.0)),
        FieldSpec::Constant { value } => Ok(ScalarField::constant(n, *value)),
        FieldSpec::Indicator { region } => match region {
            RegionSpec::Halfspace { axis, threshold } => {
                if *axis >= n {
                    return err("indicator axis out of range");
                }
                let (axis, threshold) = (*axis, *threshold);
                Ok(
                    ScalarField::from_fn(n, move |x: &Point| {
                        if x.get(axis) > threshold {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .with_smoothness(Smoothness::Measurable)
                    .with_decay(0.0),
                )
            }
            RegionSpec::Ball { c, r } => {
                if c.len() != n {
                    return err("indicator ball center dimension mismatch");
                }
                let dom = Domain::ball(Ball::new(Point::new(c), *r));
                Ok(ScalarField::indicator(&dom))
            }
        },
        FieldSpec::Torsion => {
            let DomainSpec::Ball { c, r } = domain else {
                return err("torsion builtin needs a ball domain");
            };
            let params = FracParams::new(n, s).map_err(|e| ConfigError(e.to_string()))?;
            let coef = params.torsion_coef();
            let center = Point::new(c);
            let rad = *r;
            let dom = Domain::ball(Ball::new(center, rad));
            Ok(ScalarField::from_fn(n, move |x: &Point| {
                let m = rad * rad - x.sub(&center).norm_sq();
                if m > 0.0 {
                    coef * m.powf(s)
                } else {
                    0.0
                }
            })
            .with_support(dom))
        }
        FieldSpec::NonuniquenessExample => {
            let params = FracParams::new(n, s).map_err(|e| ConfigError(e.to_string()))?;
            Ok(fraclap::verify::nonuniqueness_field(&params))
        }
        FieldSpec::Radial { expr } => {
            let ast = RadialExpr::parse(expr)?;
            Ok(ScalarField::from_fn(n, move |x: &Point| ast.eval(x.norm())))
        }
    }
}

/// Tiny arithmetic grammar over the radius `r`: numbers, `+ - * / ^`,
/// `abs(...)`, parentheses.
#[derive(Clone, Debug)]
pub enum RadialExpr {
    Num(f64),
    R,
    Neg(Box<RadialExpr>),
    Abs(Box<RadialExpr>),
    Add(Box<RadialExpr>, Box<RadialExpr>),
    Sub(Box<RadialExpr>, Box<RadialExpr>),
    Mul(Box<RadialExpr>, Box<RadialExpr>),
    Div(Box<RadialExpr>, Box<RadialExpr>),
    Pow(Box<RadialExpr>, Box<RadialExpr>),
}

impl RadialExpr {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialExpr::Num(v) => *v,
            RadialExpr::R => r,
            RadialExpr::Neg(e) => -e.eval(r),
            RadialExpr::Abs(e) => e.eval(r).abs(),
            RadialExpr::Add(a, b) => a.eval(r) + b.eval(r),
            RadialExpr::Sub(a, b) => a.eval(r) - b.eval(r),
            RadialExpr::Mul(a, b) => a.eval(r) * b.eval(r),
            RadialExpr::Div(a, b) => a.eval(r) / b.eval(r),
            RadialExpr::Pow(a, b) => a.eval(r).powf(b.eval(r)),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let e = parse_sum(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return err(format!("trailing tokens in expression at {pos}"));
        }
        Ok(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    R,
    Abs,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, ConfigError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            'r' => {
                out.push(Tok::R);
                i += 1;
            }
            'a' => {
                if text[i..].starts_with("abs") {
                    out.push(Tok::Abs);
                    i += 3;
                } else {
                    return err(format!("unexpected token at byte {i}"));
                }
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let v: f64 = text[start..i]
                    .parse()
                    .map_err(|_| ConfigError(format!("bad number {:?}", &text[start..i])))?;
                out.push(Tok::Num(v));
            }
            _ => return err(format!("unexpected character {c:?} in expression")),
        }
    }
    Ok(out)
}

fn parse_sum(t: &[Tok], pos: &mut usize) -> Result<RadialExpr, ConfigError> {
    let mut lhs = parse_product(t, pos)?;
    while *pos < t.len() {
        match t[*pos] {
            Tok::Plus => {
                *pos += 1;
                lhs = RadialExpr::Add(Box::new(lhs), Box::new(parse_product(t, pos)?));
            }
            Tok::Minus => {
                *pos += 1;
                lhs = RadialExpr::Sub(Box::new(lhs), Box::new(parse_product(t, pos)?));
            }
            _ => break,
        }
    }
    Ok(lhs)
}

fn parse_product(t: &[Tok], pos: &mut usize) -> Result<RadialExpr, ConfigError> {
    let mut lhs = parse_power(t, pos)?;
    while *pos < t.len() {
        match t[*pos] {
            Tok::Star => {
                *pos += 1;
                lhs = RadialExpr::Mul(Box::new(lhs), Box::new(parse_power(t, pos)?));
            }
            Tok::Slash => {
                *pos += 1;
                lhs = RadialExpr::Div(Box::new(lhs), Box::new(parse_power(t, pos)?));
            }
            _ => break,
        }
    }
    Ok(lhs)
}

fn parse_power(t: &[Tok], pos: &mut usize) -> Result<RadialExpr, ConfigError> {
    let base = parse_atom(t, pos)?;
    if *pos < t.len() && t[*pos] == Tok::Caret {
        *pos += 1;
        let exp = parse_power(t, pos)?;
        return Ok(RadialExpr::Pow(Box::new(base), Box::new(exp)));
    }
    Ok(base)
}

fn parse_atom(t: &[Tok], pos: &mut usize) -> Result<RadialExpr, ConfigError> {
    if *pos >= t.len() {
        return err("unexpected end of expression");
    }
    let tok = t[*pos].clone();
    *pos += 1;
    match tok {
        Tok::Num(v) => Ok(RadialExpr::Num(v)),
        Tok::R => Ok(RadialExpr::R),
        Tok::Minus => Ok(RadialExpr::Neg(Box::new(parse_atom(t, pos)?))),
        Tok::LParen => {
            let e = parse_sum(t, pos)?;
            if *pos >= t.len() || t[*pos] != Tok::RParen {
                return err("missing closing parenthesis");
            }
            *pos += 1;
            Ok(e)
        }
        Tok::Abs => {
            if *pos >= t.len() || t[*pos] != Tok::LParen {
                return err("abs needs parentheses");
            }
            *pos += 1;
            let e = parse_sum(t, pos)?;
            if *pos >= t.len() || t[*pos] != Tok::RParen {
                return err("missing closing parenthesis after abs");
            }
            *pos += 1;
            Ok(RadialExpr::Abs(Box::new(e)))
        }
        other => err(format!("unexpected token {other:?}")),
    }
}
