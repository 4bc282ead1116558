//! The analytic engine: closed rational-exponential form of `F(Φ,𝔅)`,
//! Mellin quadrature over orthants, the normalized Shintani L-functions
//! `L_σ`, their completion and continuation through the functional equation,
//! and numerical derivatives.

use crate::adelic::{AdelicError, LatticeFunction};
use crate::fan_algebra::{dual_fan, is_simple, orientation, Cone, Fan};
use crate::mp::{self, Cx, GammaError};
use crate::numberfield::{linalg, FieldElement, FieldError, QLattice, TotallyRealField};
use rug::float::Constant;
use rug::{Assign, Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no common period multiplier along a cone generator")]
    NoCommonPeriod,
    #[error("a denominator factor vanishes at the evaluation point")]
    SingularNode,
    #[error("Re(s) = {re} is below the direct-quadrature threshold {min}")]
    ReTooSmall { re: f64, min: f64 },
    #[error("s lies in neither the direct nor the reflected regime")]
    MixedRegime,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid sign pattern")]
    BadSignPattern,
    #[error(transparent)]
    Adelic(#[from] AdelicError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// `σ: {1..n} → {0,1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct SignPattern(Vec<u8>);

impl SignPattern {
    pub fn new(v: Vec<u8>) -> Result<Self, EvalError> {
        if v.iter().any(|&x| x > 1) {
            return Err(EvalError::BadSignPattern);
        }
        Ok(SignPattern(v))
    }

    pub fn zeros(n: usize) -> Self {
        SignPattern(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        SignPattern(vec![1; n])
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `1 − σ`.
    pub fn complement(&self) -> Self {
        SignPattern(self.0.iter().map(|x| 1 - x).collect())
    }
}

impl TryFrom<Vec<u8>> for SignPattern {
    type Error = EvalError;
    fn try_from(v: Vec<u8>) -> Result<Self, EvalError> {
        SignPattern::new(v)
    }
}

impl From<SignPattern> for Vec<u8> {
    fn from(s: SignPattern) -> Vec<u8> {
        s.0
    }
}

/// Quadrature and precision settings.
///
/// `step` is the trapezoid step in the double-exponential variable `u` of
/// `log t = u − e^{−u}`; `window`, when given, overrides the automatic
/// `[−X_neg, X_pos]` range for `log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub bits: u32,
    pub step: f64,
    pub window: Option<[f64; 2]>,
    pub min_re: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { bits: 128, step: 0.1, window: None, min_re: 0.1 }
    }
}

impl EvalConfig {
    pub fn with_bits(bits: u32) -> Self {
        EvalConfig { bits, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.bits < 32 {
            return Err(EvalError::InvalidConfig("bits must be at least 32".into()));
        }
        if !(self.step > 0.0 && self.step < 1.0) {
            return Err(EvalError::InvalidConfig("step must lie in (0, 1)".into()));
        }
        if !(self.min_re > 0.0 && self.min_re < 0.5) {
            return Err(EvalError::InvalidConfig("min_re must lie in (0, 1/2)".into()));
        }
        if let Some([a, b]) = self.window {
            if !(a > 0.0 && b > 0.0) {
                return Err(EvalError::InvalidConfig("window bounds must be positive".into()));
            }
        }
        Ok(())
    }

    /// Precision used for sums over quadrature nodes.
    pub fn sum_prec(&self) -> u32 {
        self.bits + 32
    }

    /// Absolute accuracy requested from each `F` evaluation at a node.
    fn node_bits(&self) -> u32 {
        self.bits / 2 + 16
    }

    fn tail_bits(&self) -> f64 {
        (self.bits as f64 / 2.0).clamp(40.0, 96.0)
    }
}

/// One simple cone of the fan: `Σ_v c_v e^{−2π⟨t,v⟩} / ∏_j (1 − e^{−2π m_j⟨t,u_j⟩})`,
/// with `u_j` the primitive period vector on the `j`-th ray.
#[derive(Clone, Debug)]
pub struct FormBlock {
    pub cone: Cone,
    /// Fan coefficient times orientation; already folded into `c_v`.
    pub sign: i64,
    pub numerator: Vec<(Cx, FieldElement)>,
    pub denominator: Vec<(Integer, FieldElement)>,
    /// `v = Σ_j (a_j / D_j) m_j u_j` with `0 < a_j ≤ D_j`.
    exps: Vec<Vec<u32>>,
    dens: Vec<u32>,
    log2_coeff_sum: f64,
}

impl FormBlock {
    /// Numerator exponent vector of term `i` as fractions `τ_j`.
    pub fn tau(&self, i: usize) -> Vec<Rational> {
        self.exps[i].iter().zip(&self.dens).map(|(&a, &d)| Rational::from((a, d))).collect()
    }
}

struct Tier {
    /// `E[j][μ] = 2π m_j ρ_μ(u_j)`, sign-twisted.
    emb: Vec<Vec<Vec<Float>>>,
    coeffs: Vec<Vec<(Float, Option<Float>)>>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct GridKey {
    g: Vec<i8>,
    bits: u32,
    step: u64,
    window: (u64, u64),
}

struct Grid {
    /// Per axis: nodes `x_k = log t_k` and weights.
    x: Vec<Vec<Float>>,
    w: Vec<Vec<Float>>,
    /// Row-major `F(g e^{x})`; `None` outside the truncated region.
    values: Vec<Option<Cx>>,
}

/// `F(Φ,𝔅)` as a sum of rational-exponential blocks.
pub struct RExpForm {
    field: TotallyRealField,
    blocks: Vec<FormBlock>,
    /// Embedding sign twist `ρ_g = ρ·diag(g)`.
    twist: Vec<i8>,
    tiers: Mutex<HashMap<u32, Arc<Tier>>>,
    grids: Mutex<HashMap<GridKey, Arc<Grid>>>,
}

impl Clone for RExpForm {
    fn clone(&self) -> Self {
        RExpForm::from_blocks(self.field.clone(), self.blocks.clone(), self.twist.clone())
    }
}

impl std::fmt::Debug for RExpForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RExpForm").field("blocks", &self.blocks).field("twist", &self.twist).finish()
    }
}

fn lcm_denominators(q: &[Rational]) -> Integer {
    let mut m = Integer::from(1);
    for x in q {
        m.lcm_mut(x.denom());
    }
    m
}

/// The positive rational `q` with `q·c` a primitive integer vector.
fn primitive_multiple(c: &[Rational]) -> Rational {
    let l = lcm_denominators(c);
    let mut g = Integer::new();
    for x in c {
        let v = Integer::from(x.numer() * &l) / x.denom();
        g.gcd_mut(&v);
    }
    Rational::from((l, g))
}

/// Multiply a rational vector by an integer and express the result as a field element.
fn scaled(u: &FieldElement, m: &Integer) -> FieldElement {
    u.scale(&Rational::from(m.clone()))
}

/// Build `F(Φ, 𝔅)`; non-simple cones contribute nothing.
pub fn build_form(k: &TotallyRealField, phi: &LatticeFunction, fan: &Fan) -> Result<RExpForm, EvalError> {
    build_form_with_multiplier(k, phi, fan, 1)
}

/// As [`build_form`], with every period multiplier `m_j` multiplied by `mult`.
pub fn build_form_with_multiplier(
    k: &TotallyRealField,
    phi: &LatticeFunction,
    fan: &Fan,
    mult: u32,
) -> Result<RExpForm, EvalError> {
    let n = k.degree();
    if phi.dim() != n {
        return Err(EvalError::DimensionMismatch { expected: n, got: phi.dim() });
    }
    let per = phi.per();
    let mut blocks = Vec::new();
    for (cone, coef) in fan.terms() {
        if cone.dim() != n || !is_simple(k, cone) {
            continue;
        }
        let sign = coef * orientation(k, cone) as i64;
        let mut ms = Vec::with_capacity(n);
        let mut prims = Vec::with_capacity(n);
        let mut gens = Vec::with_capacity(n);
        for u in &cone.generators {
            let c = linalg::solve_left(per.basis(), &u.coords).ok_or(EvalError::NoCommonPeriod)?;
            let p = primitive_multiple(&c);
            let prim = u.scale(&p);
            let m = Integer::from(mult);
            gens.push(scaled(&prim, &m));
            prims.push(prim);
            ms.push(m);
        }
        let nlat = QLattice::from_elements(&gens)?;
        let reps = per.quotient_reps(&nlat)?;
        let gen_coords: Vec<Vec<Rational>> = gens.iter().map(|g| g.coords.clone()).collect();
        let mut raw: Vec<(Cx, FieldElement, Vec<Rational>)> = Vec::new();
        for (x0, val) in phi.entries() {
            let c = val.scale_q(&Rational::from(sign));
            for r in &reps {
                let v = x0.add(r);
                let tau = linalg::solve_left(&gen_coords, &v.coords).expect("simple cone");
                let tau: Vec<Rational> = tau
                    .into_iter()
                    .map(|t| {
                        let c = t.clone().ceil();
                        t - c + 1u32
                    })
                    .collect();
                let mut w = FieldElement::zero(n);
                for (t, g) in tau.iter().zip(&gens) {
                    w = w.add(&g.scale(t));
                }
                raw.push((c.clone(), w, tau));
            }
        }
        let mut dens = vec![1u32; n];
        for (_, _, tau) in &raw {
            for (d, t) in dens.iter_mut().zip(tau) {
                let l = Integer::from(*d).lcm(t.denom());
                *d = l.to_u32().ok_or(EvalError::NoCommonPeriod)?;
            }
        }
        let mut numerator = Vec::with_capacity(raw.len());
        let mut exps = Vec::with_capacity(raw.len());
        let mut csum = 0.0f64;
        for (c, v, tau) in raw {
            let a: Vec<u32> = tau
                .iter()
                .zip(&dens)
                .map(|(t, &d)| (t.clone() * d).numer().to_u32().expect("0 < τ ≤ 1"))
                .collect();
            csum += c.abs_f64();
            numerator.push((c, v));
            exps.push(a);
        }
        let denominator = ms.into_iter().zip(prims).collect();
        blocks.push(FormBlock {
            cone: cone.clone(),
            sign,
            numerator,
            denominator,
            exps,
            dens,
            log2_coeff_sum: csum.max(1.0).log2(),
        });
    }
    Ok(RExpForm::from_blocks(k.clone(), blocks, vec![1; n]))
}

/// Solve `x = u − e^{−u}` for `u`.
fn de_inverse(x: f64) -> f64 {
    let mut u = if x > 0.0 { x } else { -(1.0 - x).ln() };
    for _ in 0..200 {
        let e = (-u).exp();
        let f = u - e - x;
        let step = f / (1.0 + e);
        u -= step;
        if step.abs() < 1e-15 * (1.0 + u.abs()) {
            break;
        }
    }
    u
}

fn inverse_frobenius(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        if d == 0.0 {
            return f64::INFINITY;
        }
        for x in m[c].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                for (x, y) in m[r].iter_mut().zip(pivot) {
                    *x -= f * y;
                }
            }
        }
    }
    m.iter().flat_map(|r| r[n..].iter()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Lower bound on `−log2 |y|` for a nonzero Float (0 if `|y| ≥ 1`).
fn neg_log2(y: &Float) -> u32 {
    match y.get_exp() {
        Some(e) if e <= 0 => (1 - e) as u32,
        _ => 0,
    }
}

impl RExpForm {
    fn from_blocks(field: TotallyRealField, blocks: Vec<FormBlock>, twist: Vec<i8>) -> Self {
        RExpForm { field, blocks, twist, tiers: Mutex::new(HashMap::new()), grids: Mutex::new(HashMap::new()) }
    }

    pub fn field(&self) -> &TotallyRealField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.degree()
    }

    pub fn blocks(&self) -> &[FormBlock] {
        &self.blocks
    }

    pub fn num_terms(&self) -> usize {
        self.blocks.iter().map(|b| b.numerator.len()).sum()
    }

    /// The same function for the twisted embedding `ρ_g(x) = ρ(x)·diag(g)`.
    pub fn twisted(&self, g: &[i8]) -> RExpForm {
        let tw = self.twist.iter().zip(g).map(|(a, b)| a * b).collect();
        RExpForm::from_blocks(self.field.clone(), self.blocks.clone(), tw)
    }

    fn tier(&self, prec: u32) -> Arc<Tier> {
        let key = prec.div_ceil(64) * 64;
        if let Some(t) = self.tiers.lock().unwrap().get(&key) {
            return t.clone();
        }
        let hp = key + 32;
        let two_pi = Float::with_val(hp, Constant::Pi) * 2u32;
        let n = self.dim();
        let mut emb = Vec::with_capacity(self.blocks.len());
        let mut coeffs = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let rows = b
                .denominator
                .iter()
                .map(|(m, u)| {
                    (0..n)
                        .map(|mu| {
                            let e = self.field.embed_float(u, mu, hp);
                            let mut v = Float::with_val(key, &e * &two_pi);
                            v *= m;
                            if self.twist[mu] < 0 {
                                v = -v;
                            }
                            v
                        })
                        .collect()
                })
                .collect();
            emb.push(rows);
            coeffs.push(
                b.numerator
                    .iter()
                    .map(|(c, _)| {
                        let re = Float::with_val(key, &c.re);
                        let im = if c.im.is_zero() { None } else { Some(Float::with_val(key, &c.im)) };
                        (re, im)
                    })
                    .collect(),
            );
        }
        let t = Arc::new(Tier { emb, coeffs });
        self.tiers.lock().unwrap().insert(key, t.clone());
        t
    }

    fn pairings(tier: &Tier, bi: usize, t: &[Float], prec: u32) -> (Vec<Float>, Vec<Float>) {
        let rows = &tier.emb[bi];
        let mut y = Vec::with_capacity(rows.len());
        let mut mag = Vec::with_capacity(rows.len());
        for r in rows {
            let mut acc = Float::new(prec);
            let mut m = Float::new(prec);
            for (e, tm) in r.iter().zip(t) {
                let prod = Float::with_val(prec, e * tm);
                m += prod.clone().abs();
                acc += prod;
            }
            y.push(acc);
            mag.push(m);
        }
        (y, mag)
    }

    /// One block at a point, to absolute accuracy about `2^{−bits}`.
    fn eval_block(&self, bi: usize, t_at: &dyn Fn(u32) -> Vec<Float>, bits: u32) -> Result<Cx, EvalError> {
        let b = &self.blocks[bi];
        let n = self.dim();
        let mut p = bits + 64;
        let (mut y, loss) = loop {
            let tier = self.tier(p);
            let t = t_at(p);
            let (y, mag) = Self::pairings(&tier, bi, &t, p);
            let ok = y.iter().zip(&mag).all(|(yj, mj)| {
                if yj.is_zero() {
                    return false;
                }
                let ey = yj.get_exp().unwrap_or(i32::MIN);
                let em = mj.get_exp().unwrap_or(i32::MIN);
                ey - em > -(p as i32) + 24
            });
            if ok {
                let loss: u32 = y.iter().map(neg_log2).sum();
                break (y, loss);
            }
            if p > 1 << 15 {
                return Err(EvalError::SingularNode);
            }
            p *= 2;
        };
        let dmax = b.dens.iter().copied().max().unwrap_or(1) as f64;
        let wp = bits
            + 16
            + b.log2_coeff_sum.ceil() as u32
            + loss
            + dmax.log2().ceil() as u32
            + (b.numerator.len().max(1) as f64).log2().ceil() as u32
            + 8;
        let tier = self.tier(wp);
        if wp > p {
            let t = t_at(wp);
            y = Self::pairings(&tier, bi, &t, wp).0;
        }
        let mut neg = false;
        let mut denom = Float::with_val(wp, 1);
        let mut tables: Vec<Vec<Float>> = Vec::with_capacity(n);
        let mut flip = Vec::with_capacity(n);
        for (yj, &d) in y.iter().zip(&b.dens) {
            let ay = Float::with_val(wp, yj.abs_ref());
            let negative = yj.is_sign_negative();
            neg ^= negative;
            flip.push(negative);
            let e = Float::with_val(wp, -&ay).exp_m1();
            denom *= -e;
            let w = (-Float::with_val(wp, &ay / d)).exp();
            let mut tab = Vec::with_capacity(d as usize + 1);
            tab.push(Float::with_val(wp, 1));
            for a in 1..=d as usize {
                let next = Float::with_val(wp, &tab[a - 1] * &w);
                tab.push(next);
            }
            tables.push(tab);
        }
        let coeffs = &tier.coeffs[bi];
        let mut re = Float::new(wp);
        let mut im = Float::new(wp);
        let mut prod = Float::new(wp);
        for (ex, (cr, ci)) in b.exps.iter().zip(coeffs) {
            let idx = |j: usize| if flip[j] { (b.dens[j] - ex[j]) as usize } else { ex[j] as usize };
            prod.assign(&tables[0][idx(0)]);
            for (j, tab) in tables.iter().enumerate().skip(1) {
                prod *= &tab[idx(j)];
            }
            re += cr * &prod;
            if let Some(ci) = ci {
                im += ci * &prod;
            }
        }
        if neg {
            re = -re;
            im = -im;
        }
        re /= &denom;
        im /= &denom;
        let out = bits + 16;
        Ok(Cx::new(Float::with_val(out, &re), Float::with_val(out, &im)))
    }

    fn eval_with(&self, t_at: &dyn Fn(u32) -> Vec<Float>, bits: u32) -> Result<Cx, EvalError> {
        let mut acc = Cx::zero(bits + 24);
        for bi in 0..self.blocks.len() {
            acc = acc.add(&self.eval_block(bi, t_at, bits + 8)?);
        }
        Ok(acc)
    }

    /// `F(Φ,𝔅)(t)` with `⟨t,v⟩ = Σ_μ t_μ ρ_μ(v)`; absolute error about `2^{−bits}`.
    pub fn eval(&self, t: &[Float], bits: u32) -> Result<Cx, EvalError> {
        if t.len() != self.dim() {
            return Err(EvalError::DimensionMismatch { expected: self.dim(), got: t.len() });
        }
        let t_at = |p: u32| t.iter().map(|x| Float::with_val(p, x)).collect::<Vec<_>>();
        self.eval_with(&t_at, bits)
    }

    pub fn eval_f64(&self, t: &[f64], bits: u32) -> Result<Cx, EvalError> {
        let tf: Vec<Float> = t.iter().map(|&x| Float::with_val(64, x)).collect();
        self.eval(&tf, bits)
    }

    /// `Σ |c_v|` over all blocks.
    fn coeff_bound(&self) -> f64 {
        self.blocks.iter().map(|b| b.log2_coeff_sum.exp2()).sum()
    }

    /// Smallest singular-value bound of `t ↦ (2π m_j ⟨t,u_j⟩ / D_j)_j` over blocks.
    fn decay_rate(&self) -> f64 {
        let n = self.dim();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut best = f64::INFINITY;
        for b in &self.blocks {
            let a: Vec<Vec<f64>> = b
                .denominator
                .iter()
                .zip(&b.dens)
                .map(|((m, u), &d)| {
                    let e = self.field.embed_f64(u);
                    (0..n).map(|mu| two_pi * m.to_f64() * e[mu] / d as f64).collect()
                })
                .collect();
            best = best.min(1.0 / inverse_frobenius(&a));
        }
        if best.is_finite() {
            best
        } else {
            1.0
        }
    }

    fn window(&self, cfg: &EvalConfig) -> (f64, f64) {
        if let Some([a, b]) = cfg.window {
            return (a, b);
        }
        let tol = cfg.tail_bits() * std::f64::consts::LN_2;
        let lc = (self.coeff_bound() + 1.0).ln();
        let xneg = (tol + lc + 4.0) / cfg.min_re;
        let xpos = ((tol + 50.0 + lc) / self.decay_rate()).ln().max(1.0);
        (xneg, xpos)
    }

    fn grid(&self, g: &[i8], cfg: &EvalConfig) -> Result<Arc<Grid>, EvalError> {
        let (xneg, xpos) = self.window(cfg);
        let key = GridKey {
            g: g.to_vec(),
            bits: cfg.bits,
            step: cfg.step.to_bits(),
            window: (xneg.to_bits(), xpos.to_bits()),
        };
        if let Some(gr) = self.grids.lock().unwrap().get(&key) {
            return Ok(gr.clone());
        }
        let n = self.dim();
        let ps = cfg.sum_prec();
        let h = cfg.step;
        let (ulo, uhi) = (de_inverse(-xneg), de_inverse(xpos));
        let mut us: Vec<Vec<f64>> = Vec::with_capacity(n);
        for mu in 0..n {
            let theta = (0.0123 + 0.381_966_011_250_105 * mu as f64).fract();
            let start = ulo - h;
            let count = ((uhi - start) / h).ceil() as usize + 1;
            us.push((0..count).map(|k| start + (k as f64 + theta) * h).collect());
        }
        let x_of = |u: f64, p: u32| {
            let uf = Float::with_val(p, u);
            let e = Float::with_val(p, -&uf).exp();
            (Float::with_val(p, &uf - &e), e)
        };
        let mut xs = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for axis in &us {
            let mut xa = Vec::with_capacity(axis.len());
            let mut wa = Vec::with_capacity(axis.len());
            for &u in axis {
                let (x, e) = x_of(u, ps);
                xa.push(x);
                wa.push(Float::with_val(ps, (e + 1u32) * h));
            }
            xs.push(xa);
            ws.push(wa);
        }
        let dims: Vec<usize> = us.iter().map(|a| a.len()).collect();
        let total: usize = dims.iter().product();
        let tol = cfg.tail_bits() * std::f64::consts::LN_2 + (self.coeff_bound() + 1.0).ln() + 4.0;
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let bits = cfg.node_bits();
        for _ in 0..total {
            let xf: Vec<f64> = (0..n).map(|mu| xs[mu][idx[mu]].to_f64()).collect();
            let negsum: f64 = xf.iter().filter(|&&x| x < 0.0).sum();
            if negsum * cfg.min_re < -tol {
                values.push(None);
            } else {
                let uv: Vec<f64> = (0..n).map(|mu| us[mu][idx[mu]]).collect();
                let t_at = |p: u32| {
                    uv.iter()
                        .zip(g)
                        .map(|(&u, &gm)| {
                            let (x, _) = x_of(u, p);
                            let t = x.exp();
                            if gm < 0 {
                                -t
                            } else {
                                t
                            }
                        })
                        .collect::<Vec<Float>>()
                };
                values.push(Some(self.eval_with(&t_at, bits)?.with_prec(ps)));
            }
            for mu in (0..n).rev() {
                idx[mu] += 1;
                if idx[mu] < dims[mu] {
                    break;
                }
                idx[mu] = 0;
            }
        }
        let gr = Arc::new(Grid { x: xs, w: ws, values });
        self.grids.lock().unwrap().insert(key, gr.clone());
        Ok(gr)
    }
}

impl Grid {
    /// `(Σ F ∏ w e^{s x}, same on the even sub-grid with doubled weights)`.
    fn integrate(&self, s: &[Cx], prec: u32) -> (Cx, Cx) {
        let n = s.len();
        let mut a_full: Vec<Vec<Cx>> = Vec::with_capacity(n);
        let mut a_half: Vec<Vec<Cx>> = Vec::with_capacity(n);
        for mu in 0..n {
            let sm = s[mu].with_prec(prec);
            let mut f = Vec::with_capacity(self.x[mu].len());
            let mut hh = Vec::with_capacity(self.x[mu].len());
            for (k, (x, w)) in self.x[mu].iter().zip(&self.w[mu]).enumerate() {
                let v = sm.scale(x).exp().scale(w);
                hh.push(if k % 2 == 0 { v.scale(&Float::with_val(prec, 2)) } else { Cx::zero(prec) });
                f.push(v);
            }
            a_full.push(f);
            a_half.push(hh);
        }
        let zero = Cx::zero(prec);
        let base: Vec<Cx> = self.values.iter().map(|v| v.clone().unwrap_or_else(|| zero.clone())).collect();
        (contract(base.clone(), &a_full), contract(base, &a_half))
    }
}

/// Contract a row-major tensor against one vector per axis.
fn contract(mut t: Vec<Cx>, vecs: &[Vec<Cx>]) -> Cx {
    for a in vecs.iter().rev() {
        let len = a.len();
        let mut next = Vec::with_capacity(t.len() / len);
        for chunk in t.chunks(len) {
            let mut acc = Cx::zero(a[0].prec());
            for (x, y) in chunk.iter().zip(a) {
                if !x.is_zero() {
                    acc = acc.add(&x.mul(y));
                }
            }
            next.push(acc);
        }
        t = next;
    }
    t.into_iter().next().expect("nonempty")
}

/// `F(form)(t)` at `t` (exact reals), absolute error about `2^{−bits/2}`.
pub fn eval_f(form: &RExpForm, t: &[Float], bits: u32) -> Result<Cx, EvalError> {
    form.eval(t, bits / 2 + 16)
}

/// Γ_σ(s), i_σ and the per-coordinate Γ_ℝ, Γ_ℂ values.
#[derive(Clone, Debug)]
pub struct SpecialFactors {
    pub gamma_sigma: Cx,
    pub i_sigma: Cx,
    pub gamma_r: Vec<Cx>,
    pub gamma_c: Vec<Cx>,
}

pub fn special_factors(sigma: &SignPattern, s: &[Cx]) -> Result<SpecialFactors, EvalError> {
    let p = s.first().map(|x| x.prec()).unwrap_or(128);
    let shifted: Vec<Cx> = s.iter().zip(sigma.as_slice()).map(|(x, &sg)| {
        let mut y = x.clone();
        y.re += sg as u32;
        y
    }).collect();
    Ok(SpecialFactors {
        gamma_sigma: mp::gamma_sigma(sigma.as_slice(), s)?,
        i_sigma: mp::i_sigma(sigma.as_slice(), p),
        gamma_r: shifted.iter().map(mp::gamma_r).collect::<Result<_, _>>()?,
        gamma_c: s.iter().map(mp::gamma_c).collect::<Result<_, _>>()?,
    })
}

/// A value together with an error estimate.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub value: Cx,
    pub error: f64,
}

fn check_direct(s: &[Cx], n: usize, cfg: &EvalConfig) -> Result<(), EvalError> {
    cfg.validate()?;
    if s.len() != n {
        return Err(EvalError::DimensionMismatch { expected: n, got: s.len() });
    }
    for x in s {
        let re = x.re.to_f64();
        if re < cfg.min_re {
            return Err(EvalError::ReTooSmall { re, min: cfg.min_re });
        }
    }
    Ok(())
}

/// `L(g, s, F, ρ) = (∏ g_μ)·(2^n/∏Γ_ℂ(s_μ)) ∫_{ℝ_{>0}^n} F(g t) ∏ t_μ^{s_μ} d^×t`.
pub fn l_orthant(g: &[i8], s: &[Cx], form: &RExpForm, cfg: &EvalConfig) -> Result<Estimate, EvalError> {
    let n = form.dim();
    check_direct(s, n, cfg)?;
    if g.len() != n || g.iter().any(|&x| x != 1 && x != -1) {
        return Err(EvalError::BadSignPattern);
    }
    let ps = cfg.sum_prec();
    let grid = form.grid(g, cfg)?;
    let (full, half) = grid.integrate(s, ps);
    let mut pre = Cx::from_real(Float::with_val(ps, Float::i_exp(1, n as i32)));
    for x in s {
        pre = pre.mul(&mp::rgamma_c(&x.with_prec(ps)));
    }
    if g.iter().filter(|&&x| x < 0).count() % 2 == 1 {
        pre = pre.neg();
    }
    let value = full.mul(&pre);
    let error = half.sub(&full).mul(&pre).abs_f64();
    Ok(Estimate { value, error })
}

/// Sign vectors `g ∈ {±1}^n`, the identity first.
pub fn orthants(n: usize) -> Vec<Vec<i8>> {
    (0..1u32 << n).map(|m| (0..n).map(|mu| if m >> mu & 1 == 1 { -1 } else { 1 }).collect()).collect()
}

/// `L_σ(s) = Σ_g L(g, s)·∏ g_μ^{σ_μ}`.
pub fn l_sigma(sigma: &SignPattern, s: &[Cx], form: &RExpForm, cfg: &EvalConfig) -> Result<Estimate, EvalError> {
    let n = form.dim();
    if sigma.len() != n {
        return Err(EvalError::DimensionMismatch { expected: n, got: sigma.len() });
    }
    let ps = cfg.sum_prec();
    let mut value = Cx::zero(ps);
    let mut error = 0.0;
    for g in orthants(n) {
        let e = l_orthant(&g, s, form, cfg)?;
        let flips = g.iter().zip(sigma.as_slice()).filter(|(&gm, &sg)| gm < 0 && sg == 1).count();
        value = if flips % 2 == 1 { value.sub(&e.value) } else { value.add(&e.value) };
        error += e.error;
    }
    Ok(Estimate { value, error })
}

/// `L̂_σ(s) = Γ_σ(s)·L_σ(s)`.
pub fn l_sigma_completed(sigma: &SignPattern, s: &[Cx], form: &RExpForm, cfg: &EvalConfig) -> Result<Estimate, EvalError> {
    let l = l_sigma(sigma, s, form, cfg)?;
    let ps = cfg.sum_prec();
    let sp: Vec<Cx> = s.iter().map(|x| x.with_prec(ps)).collect();
    let gs = mp::gamma_sigma(sigma.as_slice(), &sp)?;
    Ok(Estimate { error: l.error * gs.abs_f64(), value: l.value.mul(&gs) })
}

/// Which constant relates `L̂_σ(s, Φ, 𝔅)` and `L̂_σ(1−s, Φ̂, φ𝔅)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeConstant {
    ISigma,
    ISigmaInv,
    IOneMinusSigma,
}

impl FeConstant {
    pub const ALL: [FeConstant; 3] = [FeConstant::ISigma, FeConstant::ISigmaInv, FeConstant::IOneMinusSigma];

    pub fn value(self, sigma: &SignPattern, prec: u32) -> Cx {
        let k = sigma.as_slice().iter().map(|&x| x as i64).sum::<i64>();
        let n = sigma.len() as i64;
        match self {
            FeConstant::ISigma => mp::i_power(k, prec),
            FeConstant::ISigmaInv => mp::i_power(-k, prec),
            FeConstant::IOneMinusSigma => mp::i_power(n - k, prec),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeConstant::ISigma => "i_sigma",
            FeConstant::ISigmaInv => "i_sigma^-1",
            FeConstant::IOneMinusSigma => "i_(1-sigma)",
        }
    }
}

/// The constant fixed by the functional-equation regression runs.
pub const FE_CONSTANT: FeConstant = FeConstant::ISigmaInv;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    Fe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Fe,
    #[default]
    Auto,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: Cx,
    pub error: f64,
    pub route: Route,
}

/// `(Φ, 𝔅)` with lazily built forms for both sides of the functional equation.
pub struct ShintaniFunction {
    field: TotallyRealField,
    phi: LatticeFunction,
    fan: Fan,
    form: OnceLock<Result<RExpForm, EvalError>>,
    dual: OnceLock<Result<RExpForm, EvalError>>,
}

impl ShintaniFunction {
    pub fn new(k: &TotallyRealField, phi: LatticeFunction, fan: Fan) -> Self {
        ShintaniFunction { field: k.clone(), phi, fan, form: OnceLock::new(), dual: OnceLock::new() }
    }

    pub fn field(&self) -> &TotallyRealField {
        &self.field
    }

    pub fn phi(&self) -> &LatticeFunction {
        &self.phi
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn form(&self) -> Result<&RExpForm, EvalError> {
        self.form
            .get_or_init(|| build_form(&self.field, &self.phi, &self.fan))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Form of `(Φ̂, φ(𝔅))`.
    pub fn dual_form(&self) -> Result<&RExpForm, EvalError> {
        self.dual
            .get_or_init(|| {
                let phi_hat = self.phi.fourier(&self.field);
                build_form(&self.field, &phi_hat, &dual_fan(&self.field, &self.fan))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn route(&self, s: &[Cx], mode: Mode, cfg: &EvalConfig) -> Result<Route, EvalError> {
        let n = self.field.degree();
        if s.len() != n {
            return Err(EvalError::DimensionMismatch { expected: n, got: s.len() });
        }
        let direct = s.iter().all(|x| x.re.to_f64() >= cfg.min_re);
        let fe = s.iter().all(|x| 1.0 - x.re.to_f64() >= cfg.min_re);
        match mode {
            Mode::Direct if direct => Ok(Route::Direct),
            Mode::Fe if fe => Ok(Route::Fe),
            Mode::Auto if direct => Ok(Route::Direct),
            Mode::Auto if fe => Ok(Route::Fe),
            _ => Err(EvalError::MixedRegime),
        }
    }

    /// `L_σ(s, Φ, 𝔅)` for any `s` in the direct or the reflected regime.
    pub fn l_sigma(&self, sigma: &SignPattern, s: &[Cx], mode: Mode, cfg: &EvalConfig) -> Result<Evaluation, EvalError> {
        cfg.validate()?;
        let route = self.route(s, mode, cfg)?;
        match route {
            Route::Direct => {
                let e = l_sigma(sigma, s, self.form()?, cfg)?;
                Ok(Evaluation { value: e.value, error: e.error, route })
            }
            Route::Fe => {
                let ps = cfg.sum_prec();
                let sp: Vec<Cx> = s.iter().map(|x| x.with_prec(ps)).collect();
                let r: Vec<Cx> = sp.iter().map(|x| Cx::one(ps).sub(x)).collect();
                let e = l_sigma(sigma, &r, self.dual_form()?, cfg)?;
                let factor = FE_CONSTANT
                    .value(sigma, ps)
                    .mul(&mp::gamma_sigma(sigma.as_slice(), &r)?)
                    .mul(&mp::rgamma_sigma(sigma.as_slice(), &sp));
                Ok(Evaluation { value: e.value.mul(&factor), error: e.error * factor.abs_f64(), route })
            }
        }
    }

    /// `L̂_σ(s) = Γ_σ(s) L_σ(s)` on the direct regime.
    pub fn l_sigma_completed(&self, sigma: &SignPattern, s: &[Cx], cfg: &EvalConfig) -> Result<Estimate, EvalError> {
        l_sigma_completed(sigma, s, self.form()?, cfg)
    }

    /// `L̂_σ(1−s, Φ̂, φ𝔅)` on the direct regime of the reflected point.
    pub fn dual_completed(&self, sigma: &SignPattern, s: &[Cx], cfg: &EvalConfig) -> Result<Estimate, EvalError> {
        let ps = cfg.sum_prec();
        let r: Vec<Cx> = s.iter().map(|x| Cx::one(ps).sub(&x.with_prec(ps))).collect();
        l_sigma_completed(sigma, &r, self.dual_form()?, cfg)
    }
}

/// One-shot continuation; see [`ShintaniFunction::l_sigma`].
pub fn l_sigma_continued(
    k: &TotallyRealField,
    sigma: &SignPattern,
    s: &[Cx],
    phi: &LatticeFunction,
    fan: &Fan,
    cfg: &EvalConfig,
) -> Result<Evaluation, EvalError> {
    ShintaniFunction::new(k, phi.clone(), fan.clone()).l_sigma(sigma, s, Mode::Auto, cfg)
}

/// Direction of differentiation.
#[derive(Clone, Debug, PartialEq)]
pub enum Direction {
    Axis(usize),
    Vector(Vec<f64>),
}

/// Central differences with step `2^{−bits/4}` and one Richardson level;
/// order 1 or 2. The error estimate is the Richardson correction.
pub fn partial_derivative<E>(
    f: &dyn Fn(&[Cx]) -> Result<Cx, E>,
    point: &[Cx],
    direction: &Direction,
    order: u32,
    bits: u32,
) -> Result<Estimate, E> {
    let p = bits + 64;
    let n = point.len();
    let dir: Vec<f64> = match direction {
        Direction::Axis(mu) => (0..n).map(|i| if i == *mu { 1.0 } else { 0.0 }).collect(),
        Direction::Vector(v) => v.clone(),
    };
    let at = |h: &Float| -> Vec<Cx> {
        point
            .iter()
            .zip(&dir)
            .map(|(x, &d)| {
                let mut y = x.with_prec(p);
                y.re += Float::with_val(p, h * d);
                y
            })
            .collect()
    };
    let diff = |h: &Float| -> Result<Cx, E> {
        let fp = f(&at(h))?.with_prec(p);
        let fm = f(&at(&Float::with_val(p, -h)))?.with_prec(p);
        if order == 1 {
            Ok(fp.sub(&fm).scale(&Float::with_val(p, 2 * h).recip()))
        } else {
            let f0 = f(point)?.with_prec(p);
            let num = fp.add(&fm).sub(&f0.scale(&Float::with_val(p, 2)));
            Ok(num.scale(&Float::with_val(p, h * h).recip()))
        }
    };
    let h = Float::with_val(p, Float::i_exp(1, -((bits / 4) as i32)));
    let d1 = diff(&h)?;
    let d2 = diff(&Float::with_val(p, &h / 2u32))?;
    let rich = d2.scale(&Float::with_val(p, 4)).sub(&d1).scale(&Float::with_val(p, 3).recip());
    let error = rich.sub(&d2).abs_f64();
    Ok(Estimate { value: rich, error })
}
