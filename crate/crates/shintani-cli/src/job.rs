//! Job files, payloads and their execution.

use rug::{Float, Rational};
use serde::Deserialize;
use serde_json::{json, Value};
use shintani::adelic::regular;
use shintani::conical::cubic_fd_fan;
use shintani::fan_algebra::{dual_fan, Fan};
use shintani::hecke::{
    c_factor, default_fd_fan, default_units, direct_partial_l, excluded_primes, shintani_decomposition, HeckeError,
    HeckeFe, HeckeFunction, RegularizedDatum, SERIES_MIN_RE,
};
use shintani::mp::{digits_for_bits, Cx};
use shintani::numberfield::{make_field, FieldElement, TotallyRealField};
use shintani::presets::{self, ShintaniDataset};
use shintani::shintani_eval::{EvalConfig, EvalError, Mode, SignPattern};
use thiserror::Error;

pub const JOB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid job: {0}")]
    Validation(String),
    #[error("numeric regime: {0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

impl From<HeckeError> for CliError {
    fn from(e: HeckeError) -> Self {
        match &e {
            HeckeError::ReTooSmall { .. } | HeckeError::SearchExhausted => CliError::Numeric(e.to_string()),
            HeckeError::Eval(inner) => eval_error(inner, e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let msg = e.to_string();
        eval_error(&e, msg)
    }
}

fn eval_error(e: &EvalError, msg: String) -> CliError {
    match e {
        EvalError::ReTooSmall { .. }
        | EvalError::MixedRegime
        | EvalError::SingularNode
        | EvalError::NoCommonPeriod
        | EvalError::Gamma(_) => CliError::Numeric(msg),
        _ => CliError::Validation(msg),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    EvalLsigma,
    EvalHecke,
    FeCheck,
    DualFan,
    Regularity,
    ShintaniFormula,
    FdFan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EvalLsigma => "eval-lsigma",
            Command::EvalHecke => "eval-hecke",
            Command::FeCheck => "fe-check",
            Command::DualFan => "dual-fan",
            Command::Regularity => "regularity",
            Command::ShintaniFormula => "shintani-formula",
            Command::FdFan => "fd-fan",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub version: u32,
    pub command: Command,
    #[serde(default)]
    pub payload: Value,
}

/// A complex number: a decimal string, or `[re, im]` decimal strings.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexIn {
    Real(String),
    Pair([String; 2]),
}

/// One cone of a fan: integer coefficient and generators in power-basis coordinates.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermIn {
    #[serde(default = "one")]
    pub coefficient: i64,
    pub generators: Vec<Vec<String>>,
}

fn one() -> i64 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalPayload {
    pub preset: Option<String>,
    #[serde(default)]
    pub s: Vec<ComplexIn>,
    pub sigma: Option<Vec<u8>>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub completed: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanPayload {
    pub preset: Option<String>,
    /// Minimal polynomial coefficients, constant term first.
    pub field: Option<Vec<i64>>,
    #[serde(default)]
    pub fan: Vec<TermIn>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdPayload {
    pub preset: Option<String>,
    pub field: Option<Vec<i64>>,
    pub x: Option<Vec<String>>,
    pub units: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityPayload {
    pub preset: Option<String>,
    pub p: Option<Vec<String>>,
    pub q: Option<Vec<String>>,
    #[serde(default)]
    pub fan: Vec<TermIn>,
}

/// Command-line values that override the payload.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub s: Vec<String>,
}

pub struct Job {
    pub command: Command,
    pub payload: Value,
    pub bits: u32,
}

fn parse_payload<T: for<'de> Deserialize<'de> + Default>(v: &Value) -> Result<T, CliError> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| invalid(format!("payload: {e}")))
}

fn parse_float(s: &str, bits: u32) -> Result<Float, CliError> {
    Float::parse(s.trim()).map(|p| Float::with_val(bits, p)).map_err(|_| invalid(format!("not a decimal: {s:?}")))
}

fn parse_complex(c: &ComplexIn, bits: u32) -> Result<Cx, CliError> {
    match c {
        ComplexIn::Real(a) => Ok(Cx::new(parse_float(a, bits)?, Float::new(bits))),
        ComplexIn::Pair([a, b]) => Ok(Cx::new(parse_float(a, bits)?, parse_float(b, bits)?)),
    }
}

fn parse_point(s: &[ComplexIn], n: usize, bits: u32) -> Result<Vec<Cx>, CliError> {
    let v: Vec<Cx> = s.iter().map(|c| parse_complex(c, bits)).collect::<Result<_, _>>()?;
    match v.len() {
        0 => Err(invalid("missing evaluation point s")),
        1 => Ok(vec![v[0].clone(); n]),
        m if m == n => Ok(v),
        m => Err(invalid(format!("s has {m} coordinates, the field has degree {n}"))),
    }
}

fn parse_element(k: &TotallyRealField, c: &[String]) -> Result<FieldElement, CliError> {
    if c.len() != k.degree() {
        return Err(invalid(format!("element {c:?} needs {} coordinates", k.degree())));
    }
    let coords = c
        .iter()
        .map(|x| x.trim().parse::<Rational>().map_err(|_| invalid(format!("not a rational: {x:?}"))))
        .collect::<Result<_, _>>()?;
    Ok(FieldElement::new(coords))
}

fn parse_fan(k: &TotallyRealField, terms: &[TermIn]) -> Result<Fan, CliError> {
    let mut f = Fan::zero();
    for t in terms {
        let g = t.generators.iter().map(|c| parse_element(k, c)).collect::<Result<Vec<_>, _>>()?;
        f = f.add(&Fan::from_generators(g).scale(t.coefficient));
    }
    Ok(f)
}

fn parse_field(c: &Option<Vec<i64>>) -> Result<TotallyRealField, CliError> {
    match c {
        None => Ok(presets::q_sqrt2()),
        Some(c) => make_field(c).map_err(|e| invalid(format!("field: {e}"))),
    }
}

fn pick_preset(cli: &Option<String>, payload: &Option<String>) -> Result<String, CliError> {
    let name = cli.clone().or(payload.clone()).ok_or_else(|| invalid("a preset is required"))?;
    if presets::find(&name).is_none() {
        return Err(invalid(format!("unknown preset {name:?}")));
    }
    Ok(name)
}

fn hecke_preset(name: &str) -> Result<(RegularizedDatum, Fan), CliError> {
    let k = presets::q_sqrt2();
    Ok(match name {
        "q-sqrt2-example" => (presets::direct_const_datum(&k)?, presets::direct_const_fan(&k)),
        "q-sqrt2-trivial" | "q-sqrt2-regularized-zeta" => presets::regularized_zeta(&k)?,
        "rationals-riemann-zeta" => presets::riemann_zeta()?,
        _ => return Err(invalid(format!("preset {name:?} carries no Hecke datum"))),
    })
}

fn shintani_preset(name: &str) -> Result<ShintaniDataset, CliError> {
    let k = presets::q_sqrt2();
    Ok(match name {
        "q-sqrt2-example" => presets::direct_const_dataset(&k)?,
        "q-sqrt2-synthetic-a" => presets::synthetic_a(&k)?,
        "q-sqrt2-synthetic-b" => presets::synthetic_b(&k)?,
        _ => return Err(invalid(format!("preset {name:?} carries no Shintani dataset"))),
    })
}

/// Rendering of numbers at a fixed number of significant digits.
struct Render {
    digits: usize,
}

impl Render {
    fn cx(&self, z: &Cx) -> Value {
        let (re, im) = z.to_decimal(self.digits);
        json!({ "re": re, "im": im })
    }

    fn err(&self, e: f64) -> Value {
        Value::String(format!("{e:.3e}"))
    }

    fn element(&self, x: &FieldElement) -> Value {
        json!({
            "coords": x.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "display": x.to_string(),
        })
    }

    fn fan(&self, f: &Fan) -> Value {
        let terms: Vec<Value> = f
            .terms()
            .map(|(c, v)| {
                json!({
                    "coefficient": v,
                    "generators": c.generators.iter().map(|g| self.element(g)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "terms": terms, "display": f.to_string() })
    }
}

fn point_value(s: &[Cx], r: &Render) -> Value {
    Value::Array(s.iter().map(|z| r.cx(z)).collect())
}

fn s_override(o: &Overrides, s: &mut Vec<ComplexIn>) {
    if !o.s.is_empty() {
        *s = o.s.iter().map(|x| ComplexIn::Real(x.clone())).collect();
    }
}

fn eval_lsigma(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let mut p: EvalPayload = parse_payload(&job.payload)?;
    s_override(o, &mut p.s);
    let name = pick_preset(&o.preset, &p.preset)?;
    let d = shintani_preset(&name)?;
    let cfg = EvalConfig::with_bits(job.bits);
    let s = parse_point(&p.s, d.field.degree(), job.bits)?;
    let sigma = match &p.sigma {
        Some(v) => SignPattern::new(v.clone())?,
        None => d.sigma.clone(),
    };
    let sf = shintani::shintani_eval::ShintaniFunction::new(&d.field, d.phi.clone(), d.fan.clone());
    let (value, error, route) = if p.completed {
        let e = sf.l_sigma_completed(&sigma, &s, &cfg)?;
        (e.value, e.error, Value::Null)
    } else {
        let e = sf.l_sigma(&sigma, &s, p.mode, &cfg)?;
        (e.value, e.error, serde_json::to_value(e.route).expect("route serializes"))
    };
    Ok(json!({
        "preset": name,
        "s": point_value(&s, r),
        "sigma": sigma.as_slice(),
        "completed": p.completed,
        "value": r.cx(&value),
        "error_estimate": r.err(error),
        "route": route,
    }))
}

/// `c(f, s)·L(s, χ)` by direct enumeration on the diagonal, when the series converges.
fn diagonal_oracle(datum: &RegularizedDatum, s: &[Cx], bits: u32) -> Result<Option<(Cx, f64)>, CliError> {
    let first = &s[0];
    let on_diagonal = s.iter().all(|z| z.sub(first).abs_f64() == 0.0);
    if !on_diagonal || first.to_f64().0 < SERIES_MIN_RE || datum.chi.h().iter().any(|&h| h != 0.0) {
        return Ok(None);
    }
    let k = datum.field();
    let z = direct_partial_l(&datum.chi, &Cx::from_f64(64, first.to_f64().0, first.to_f64().1), 2e6)?;
    let c = c_factor(k, &datum.f, &first.with_prec(bits + 32));
    Ok(Some((z.value.with_prec(bits + 32).mul(&c), z.tail_bound * c.abs_f64())))
}

fn eval_hecke(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let mut p: EvalPayload = parse_payload(&job.payload)?;
    s_override(o, &mut p.s);
    if p.sigma.is_some() || p.completed {
        return Err(invalid("sigma and completed are not accepted by eval-hecke"));
    }
    let name = pick_preset(&o.preset, &p.preset)?;
    let (datum, fan) = hecke_preset(&name)?;
    let cfg = EvalConfig::with_bits(job.bits);
    let s = parse_point(&p.s, datum.field().degree(), job.bits)?;
    let hf = HeckeFunction::new(&datum, &fan)?;
    let e = hf.eval(&s, p.mode, &cfg)?;
    let oracle = diagonal_oracle(&datum, &s, job.bits)?.map(|(v, tail)| {
        json!({
            "value": r.cx(&v),
            "tail_bound": r.err(tail),
            "relative_difference": r.err(e.value.sub(&v).abs_f64() / v.abs_f64()),
        })
    });
    let orthants: Vec<Value> =
        e.orthants.iter().map(|(g, route)| json!({ "orthant": g, "route": route })).collect();
    Ok(json!({
        "preset": name,
        "s": point_value(&s, r),
        "sigma": e.metadata.sigma,
        "fan": e.metadata.fan_id,
        "value": r.cx(&e.value),
        "error_estimate": r.err(e.error_estimate),
        "route": e.route,
        "orthants": orthants,
        "oracle": oracle,
    }))
}

fn fe_check(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let mut p: EvalPayload = parse_payload(&job.payload)?;
    s_override(o, &mut p.s);
    if p.sigma.is_some() || p.completed || p.mode != Mode::Auto {
        return Err(invalid("fe-check accepts only preset and s"));
    }
    let name = pick_preset(&o.preset, &p.preset)?;
    let (datum, fan) = hecke_preset(&name)?;
    let cfg = EvalConfig::with_bits(job.bits);
    let s = parse_point(&p.s, datum.field().degree(), job.bits)?;
    let c = HeckeFe::new(&datum, &fan)?.check(&s, &cfg)?;
    Ok(json!({
        "preset": name,
        "s": point_value(&s, r),
        "lhs": r.cx(&c.lhs),
        "rhs": r.cx(&c.rhs),
        "residual": r.err(c.residual),
        "error_estimate": r.err(c.error_estimate),
        "root_number": r.cx(&c.root_number),
        "l_value": c.l_value.as_ref().map(|v| r.cx(v)),
    }))
}

fn dual_fan_cmd(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let p: FanPayload = parse_payload(&job.payload)?;
    let preset = o.preset.clone().or(p.preset.clone());
    let (k, fan) = match preset {
        Some(name) => {
            if !p.fan.is_empty() || p.field.is_some() {
                return Err(invalid("give either a preset or an explicit fan"));
            }
            let k = presets::q_sqrt2();
            let fan = match name.as_str() {
                "q-sqrt2-fd" => presets::example_fd_fan(&k),
                "q-sqrt2-example" => presets::direct_const_fan(&k),
                "q-sqrt2-trivial" | "q-sqrt2-regularized-zeta" => default_fd_fan(&k)?,
                _ => return Err(invalid(format!("preset {name:?} carries no fan"))),
            };
            (k, fan)
        }
        None => {
            let k = parse_field(&p.field)?;
            let fan = parse_fan(&k, &p.fan)?;
            (k, fan)
        }
    };
    Ok(json!({ "fan": r.fan(&fan), "dual": r.fan(&dual_fan(&k, &fan)) }))
}

fn fd_fan(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let p: FdPayload = parse_payload(&job.payload)?;
    let preset = o.preset.clone().or(p.preset.clone());
    if preset.is_some() && (p.field.is_some() || p.x.is_some() || p.units.is_some()) {
        return Err(invalid("give either a preset or explicit field data"));
    }
    let (k, x, units) = match preset.as_deref() {
        Some("q-sqrt2-fd") => {
            let k = presets::q_sqrt2();
            let (x, u) = (k.one(), k.elem_i(&[3, -2]));
            (k, x, vec![u])
        }
        Some("rationals-riemann-zeta") => {
            let k = presets::rationals();
            (k.clone(), k.one(), vec![])
        }
        Some(name) => return Err(invalid(format!("preset {name:?} carries no fundamental domain"))),
        None => {
            let k = parse_field(&p.field)?;
            let x = match &p.x {
                Some(c) => parse_element(&k, c)?,
                None => k.one(),
            };
            let units = match &p.units {
                Some(us) => us.iter().map(|c| parse_element(&k, c)).collect::<Result<Vec<_>, _>>()?,
                None => default_units(&k)?
                    .totally_positive_generators
                    .into_iter()
                    .map(|e| if k.embed_float(&e, k.degree() - 1, 64) > 1 { Ok(e) } else { k.inv(&e) })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid(e.to_string()))?,
            };
            (k, x, units)
        }
    };
    let fan = cubic_fd_fan(&k, &x, &units);
    Ok(json!({
        "x": r.element(&x),
        "units": units.iter().map(|u| r.element(u)).collect::<Vec<_>>(),
        "fan": r.fan(&fan),
        "dual": r.fan(&dual_fan(&k, &fan)),
    }))
}

fn regularity_cmd(job: &Job, o: &Overrides, _r: &Render) -> Result<Value, CliError> {
    let p: RegularityPayload = parse_payload(&job.payload)?;
    let name = pick_preset(&o.preset, &p.preset)?;
    let (datum, default_fan) = hecke_preset(&name)?;
    let k = datum.field().clone();
    let fan = if p.fan.is_empty() { default_fan } else { parse_fan(&k, &p.fan)? };
    let datum = match (&p.p, &p.q) {
        (None, None) => datum,
        (Some(a), Some(b)) => {
            RegularizedDatum::with_primes(&datum.chi, &datum.base_ideal, &parse_element(&k, a)?, &parse_element(&k, b)?)?
        }
        _ => return Err(invalid("give both p and q or neither")),
    };
    let excluded = excluded_primes(&datum.chi, &datum.base_ideal, &[&fan])?;
    let dual = dual_fan(&k, &fan);
    let dual_phi = datum.dual_phi()?;
    let gens = |g: &Option<FieldElement>| g.as_ref().map(|x| x.to_string());
    Ok(json!({
        "preset": name,
        "fan": fan.to_string(),
        "p": gens(&datum.p_gen),
        "q": gens(&datum.q_gen),
        "excluded_primes": excluded,
        "regular": regular(&k, &datum.phi(), &fan),
        "dual_regular": regular(&k, &dual_phi, &dual),
    }))
}

fn shintani_formula(job: &Job, o: &Overrides, r: &Render) -> Result<Value, CliError> {
    let mut p: EvalPayload = parse_payload(&job.payload)?;
    s_override(o, &mut p.s);
    if p.sigma.is_some() || p.completed || p.mode != Mode::Auto {
        return Err(invalid("shintani-formula accepts only preset and s"));
    }
    let name = pick_preset(&o.preset, &p.preset)?;
    let (datum, fan) = hecke_preset(&name)?;
    let cfg = EvalConfig::with_bits(job.bits);
    let at = if p.s.is_empty() { Cx::zero(job.bits) } else { parse_point(&p.s, 1, job.bits)?.remove(0) };
    let f = shintani_decomposition(&datum, &fan, &at, &cfg)?;
    Ok(json!({
        "preset": name,
        "at": r.cx(&at),
        "diagonal_derivative": r.cx(&f.c),
        "partials": f.partials.iter().map(|v| r.cx(v)).collect::<Vec<_>>(),
        "residual": r.err(f.residual),
        "error_estimate": r.err(f.error_estimate),
    }))
}

/// Runs one job and returns the result document.
pub fn run(job: &Job, o: &Overrides) -> Result<Value, CliError> {
    let r = Render { digits: digits_for_bits(job.bits) };
    let result = match job.command {
        Command::EvalLsigma => eval_lsigma(job, o, &r)?,
        Command::EvalHecke => eval_hecke(job, o, &r)?,
        Command::FeCheck => fe_check(job, o, &r)?,
        Command::DualFan => dual_fan_cmd(job, o, &r)?,
        Command::Regularity => regularity_cmd(job, o, &r)?,
        Command::ShintaniFormula => shintani_formula(job, o, &r)?,
        Command::FdFan => fd_fan(job, o, &r)?,
    };
    Ok(json!({
        "version": JOB_VERSION,
        "command": job.command.name(),
        "bits": job.bits,
        "result": result,
    }))
}

pub fn list_presets() -> Value {
    let items: Vec<Value> =
        presets::PRESETS.iter().map(|p| json!({ "name": p.name, "description": p.description })).collect();
    json!({ "version": JOB_VERSION, "presets": items })
}
