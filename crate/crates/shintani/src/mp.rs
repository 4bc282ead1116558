//! Multiprecision complex numbers and the Gamma factors.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GammaError {
    #[error("Gamma has a pole at this argument")]
    PoleHit,
}

/// Complex number as a pair of MPFR floats sharing one precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Cx {
    pub re: Float,
    pub im: Float,
}

impl Cx {
    pub fn new(re: Float, im: Float) -> Self {
        Cx { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Cx::new(Float::new(prec), Float::new(prec))
    }

    pub fn one(prec: u32) -> Self {
        Cx::from_real(Float::with_val(prec, 1))
    }

    pub fn i(prec: u32) -> Self {
        Cx::new(Float::new(prec), Float::with_val(prec, 1))
    }

    pub fn from_real(re: Float) -> Self {
        let p = re.prec();
        Cx::new(re, Float::new(p))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Cx::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn from_rational(prec: u32, q: &Rational) -> Self {
        Cx::from_real(Float::with_val(prec, q))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Cx {
        Cx::new(Float::with_val(prec, &self.re), Float::with_val(prec, &self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, o: &Cx) -> Cx {
        let p = self.prec().max(o.prec());
        Cx::new(Float::with_val(p, &self.re + &o.re), Float::with_val(p, &self.im + &o.im))
    }

    pub fn sub(&self, o: &Cx) -> Cx {
        let p = self.prec().max(o.prec());
        Cx::new(Float::with_val(p, &self.re - &o.re), Float::with_val(p, &self.im - &o.im))
    }

    pub fn neg(&self) -> Cx {
        Cx::new(-self.re.clone(), -self.im.clone())
    }

    pub fn conj(&self) -> Cx {
        Cx::new(self.re.clone(), -self.im.clone())
    }

    pub fn mul(&self, o: &Cx) -> Cx {
        let p = self.prec().max(o.prec());
        if self.is_real() && o.is_real() {
            return Cx::from_real(Float::with_val(p, &self.re * &o.re));
        }
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cx::new(re, im)
    }

    pub fn scale(&self, x: &Float) -> Cx {
        let p = self.prec().max(x.prec());
        Cx::new(Float::with_val(p, &self.re * x), Float::with_val(p, &self.im * x))
    }

    pub fn scale_q(&self, q: &Rational) -> Cx {
        let p = self.prec();
        Cx::new(Float::with_val(p, &self.re * q), Float::with_val(p, &self.im * q))
    }

    pub fn mul_i(&self) -> Cx {
        Cx::new(-self.im.clone(), self.re.clone())
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square() + self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn inv(&self) -> Cx {
        let n = self.norm_sqr();
        Cx::new(Float::with_val(self.prec(), &self.re / &n), -Float::with_val(self.prec(), &self.im / &n))
    }

    pub fn div(&self, o: &Cx) -> Cx {
        self.mul(&o.inv())
    }

    pub fn exp(&self) -> Cx {
        let p = self.prec();
        let r = Float::with_val(p, self.re.exp_ref());
        if self.im.is_zero() {
            return Cx::from_real(r);
        }
        let (s, c) = self.im.clone().sin_cos(Float::new(p));
        Cx::new(Float::with_val(p, &r * &c), Float::with_val(p, &r * &s))
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Cx {
        let p = self.prec();
        Cx::new(Float::with_val(p, self.abs().ln()), Float::with_val(p, self.im.atan2_ref(&self.re)))
    }

    /// `base^s` for a positive real base.
    pub fn pow_real_base(base: &Float, s: &Cx) -> Cx {
        let p = s.prec().max(base.prec());
        let l = Float::with_val(p, base.ln_ref());
        s.scale(&l).exp()
    }

    /// `e(q) = exp(2πi q)` for rational `q`, reduced mod 1 first.
    pub fn e_rational(prec: u32, q: &Rational) -> Cx {
        let (frac, _) = q.clone().fract_floor(Integer::new());
        let ang = Float::with_val(prec, Constant::Pi) * 2u32 * Float::with_val(prec, &frac);
        let (s, c) = ang.sin_cos(Float::new(prec));
        Cx::new(c, s)
    }

    /// `ζ_k^j = e(j/k)`.
    pub fn root_of_unity(prec: u32, k: u64, j: i64) -> Cx {
        Cx::e_rational(prec, &Rational::from((j, k)))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Decimal strings with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (float_decimal(&self.re, digits), float_decimal(&self.im, digits))
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_f64();
        write!(f, "{:.12e}{:+.12e}i", a, b)
    }
}

/// Fixed-format decimal rendering, deterministic for a given value.
pub fn float_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}

/// Bits needed for `digits` decimal digits.
pub fn digits_for_bits(bits: u32) -> usize {
    ((bits as f64) * std::f64::consts::LOG10_2).floor().max(1.0) as usize
}

fn bernoulli_table() -> &'static [Rational] {
    static TABLE: OnceLock<Vec<Rational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Akiyama–Tanigawa, B_0..B_N with B_1 = +1/2.
        let n = 200usize;
        let mut a: Vec<Rational> = vec![Rational::new(); n + 1];
        let mut b = Vec::with_capacity(n + 1);
        for m in 0..=n {
            a[m] = Rational::from((1, m as u64 + 1));
            for j in (1..=m).rev() {
                let d = Rational::from(&a[j - 1] - &a[j]);
                a[j - 1] = d * j as u64;
            }
            b.push(a[0].clone());
        }
        b
    })
}

/// B_{2k}.
fn bernoulli_even(k: usize) -> &'static Rational {
    &bernoulli_table()[2 * k]
}

fn is_nonpositive_integer(z: &Cx) -> bool {
    z.im.is_zero() && z.re.is_integer() && z.re <= 0
}

/// Stirling series for ln Γ(w), valid for large |w| in the right half plane.
fn ln_gamma_stirling(w: &Cx) -> Cx {
    let p = w.prec();
    let half = Float::with_val(p, 0.5);
    let ln_w = w.ln();
    let mut r = Cx::new(Float::with_val(p, &w.re - &half), w.im.clone()).mul(&ln_w).sub(w);
    let ln2pi = Float::with_val(p, Float::with_val(p, Constant::Pi) * 2u32).ln() / 2u32;
    r.re += ln2pi;
    let w2inv = w.mul(w).inv();
    let mut pow = w.inv();
    let eps = Float::with_val(p, Float::i_exp(1, -(p as i32) - 8));
    for k in 1..=100usize {
        let coef = Rational::from(bernoulli_even(k) / Rational::from((2 * k * (2 * k - 1)) as u64));
        let term = pow.scale_q(&coef);
        let small = term.abs() < Float::with_val(p, &eps * r.abs().max(&Float::with_val(p, 1)));
        r = r.add(&term);
        if small {
            break;
        }
        pow = pow.mul(&w2inv);
    }
    r
}

/// Shift `z` right until Stirling is accurate: returns `(z + N, ∏_{k<N} (z+k))`.
fn stirling_shift(z: &Cx) -> (Cx, Cx) {
    let p = z.prec();
    let target = 0.2 * p as f64 + 12.0;
    let mut w = z.clone();
    let mut prod = Cx::one(p);
    while w.abs_f64() < target || w.re.to_f64() < target * 0.5 {
        prod = prod.mul(&w);
        w.re += 1u32;
    }
    (w, prod)
}

/// Γ(z) at the precision of `z`.
pub fn gamma(z: &Cx) -> Result<Cx, GammaError> {
    if is_nonpositive_integer(z) {
        return Err(GammaError::PoleHit);
    }
    let p = z.prec();
    if z.is_real() {
        return Ok(Cx::from_real(Float::with_val(p, z.re.gamma_ref())));
    }
    if z.re < 0.5 {
        // Γ(z) = π / (sin(πz) Γ(1−z))
        let wp = p + 16;
        let zz = z.with_prec(wp);
        let one_minus = Cx::one(wp).sub(&zz);
        let g = gamma(&one_minus)?;
        let s = sin_pi(&zz);
        let pi = Cx::from_real(Float::with_val(wp, Constant::Pi));
        return Ok(pi.div(&s.mul(&g)).with_prec(p));
    }
    let wp = p + 32;
    let (w, prod) = stirling_shift(&z.with_prec(wp));
    Ok(ln_gamma_stirling(&w).exp().div(&prod).with_prec(p))
}

/// 1/Γ(z), entire; exactly zero at the poles of Γ.
pub fn rgamma(z: &Cx) -> Cx {
    let p = z.prec();
    if is_nonpositive_integer(z) {
        return Cx::zero(p);
    }
    if z.is_real() {
        return Cx::from_real(Float::with_val(p, z.re.gamma_ref()).recip());
    }
    if z.re < 0.5 {
        let wp = p + 16;
        let zz = z.with_prec(wp);
        let g = gamma(&Cx::one(wp).sub(&zz)).expect("Re(1−z) > 1/2");
        let s = sin_pi(&zz);
        let pi = Float::with_val(wp, Constant::Pi);
        return s.mul(&g).scale(&pi.recip()).with_prec(p);
    }
    gamma(z).expect("not a pole").inv()
}

/// sin(πz).
fn sin_pi(z: &Cx) -> Cx {
    let p = z.prec();
    let pi = Float::with_val(p, Constant::Pi);
    let x = Float::with_val(p, &z.re * &pi);
    let y = Float::with_val(p, &z.im * &pi);
    let (s, c) = x.sin_cos(Float::new(p));
    let ch = Float::with_val(p, y.cosh_ref());
    let sh = Float::with_val(p, y.sinh_ref());
    Cx::new(s * ch, c * sh)
}

/// Γ_ℝ(s) = π^{−s/2} Γ(s/2).
pub fn gamma_r(s: &Cx) -> Result<Cx, GammaError> {
    let p = s.prec();
    let half = s.scale_q(&Rational::from((1, 2)));
    let pi = Float::with_val(p, Constant::Pi);
    Ok(Cx::pow_real_base(&pi, &half.neg()).mul(&gamma(&half)?))
}

/// 1/Γ_ℝ(s).
pub fn rgamma_r(s: &Cx) -> Cx {
    let p = s.prec();
    let half = s.scale_q(&Rational::from((1, 2)));
    let pi = Float::with_val(p, Constant::Pi);
    Cx::pow_real_base(&pi, &half).mul(&rgamma(&half))
}

/// Γ_ℂ(s) = 2 (2π)^{−s} Γ(s).
pub fn gamma_c(s: &Cx) -> Result<Cx, GammaError> {
    let p = s.prec();
    let tp = Float::with_val(p, Constant::Pi) * 2u32;
    Ok(Cx::pow_real_base(&tp, &s.neg()).mul(&gamma(s)?).scale(&Float::with_val(p, 2)))
}

/// 1/Γ_ℂ(s).
pub fn rgamma_c(s: &Cx) -> Cx {
    let p = s.prec();
    let tp = Float::with_val(p, Constant::Pi) * 2u32;
    Cx::pow_real_base(&tp, s).mul(&rgamma(s)).scale(&Float::with_val(p, 0.5))
}

/// Γ_σ(s) = ∏ Γ_ℝ(s_μ + σ_μ).
pub fn gamma_sigma(sigma: &[u8], s: &[Cx]) -> Result<Cx, GammaError> {
    let p = s[0].prec();
    let mut r = Cx::one(p);
    for (sg, x) in sigma.iter().zip(s) {
        let mut y = x.clone();
        y.re += *sg as u32;
        r = r.mul(&gamma_r(&y)?);
    }
    Ok(r)
}

/// 1/Γ_σ(s), entire.
pub fn rgamma_sigma(sigma: &[u8], s: &[Cx]) -> Cx {
    let p = s[0].prec();
    let mut r = Cx::one(p);
    for (sg, x) in sigma.iter().zip(s) {
        let mut y = x.clone();
        y.re += *sg as u32;
        r = r.mul(&rgamma_r(&y));
    }
    r
}

/// i_σ = ∏ i^{σ_μ}.
pub fn i_sigma(sigma: &[u8], prec: u32) -> Cx {
    let k = sigma.iter().map(|&x| x as u32).sum::<u32>() % 4;
    i_power(k as i64, prec)
}

/// i^k.
pub fn i_power(k: i64, prec: u32) -> Cx {
    match k.rem_euclid(4) {
        0 => Cx::from_f64(prec, 1.0, 0.0),
        1 => Cx::from_f64(prec, 0.0, 1.0),
        2 => Cx::from_f64(prec, -1.0, 0.0),
        _ => Cx::from_f64(prec, 0.0, -1.0),
    }
}

/// Real digamma ψ(x) (used for closed-form derivative references).
pub fn digamma_real(x: &Float) -> Float {
    Float::with_val(x.prec(), x.digamma_ref())
}

/// ζ(s) for real s > 1.
pub fn zeta_real(prec: u32, s: u32) -> Float {
    Float::with_val(prec, Float::with_val(prec, s).zeta())
}

/// `n^{-s}` for a positive integer `n`.
pub fn int_pow_neg(n: &Integer, s: &Cx) -> Cx {
    let p = s.prec();
    let b = Float::with_val(p, n);
    Cx::pow_real_base(&b, &s.neg())
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// x^k for a Float and a small integer exponent.
pub fn powi(x: &Float, k: i32) -> Float {
    Float::with_val(x.prec(), x.pow(k))
}
