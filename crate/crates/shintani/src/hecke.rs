//! Hecke L-functions assembled from the Shintani engine, together with an
//! independent direct-series oracle.

use crate::adelic::{
    gauss_constant, md_ideal, regular, twisted_function, AdelicError, GroupRingElement, HeckeCharacter, LatticeFunction,
    PrincipalIdeal, VALUE_BITS,
};
use crate::conical::{cubic_fd_fan, fundamental_domain_fan, ConicalError};
use crate::fan_algebra::{dual_fan, Cone, Fan};
use crate::mp::{self, Cx};
use crate::numberfield::poly::{divisors, factor};
use crate::numberfield::{
    find_principal_degree_one_primes, linalg, order, quadratic_units, FieldElement, FieldError, QLattice,
    TotallyRealField, UnitData,
};
use crate::shintani_eval::{
    build_form, l_orthant, orthants, partial_derivative, Direction, EvalConfig, EvalError, Mode, RExpForm, Route,
    SignPattern, FE_CONSTANT,
};
use rug::{Float, Integer, Rational};
use serde::Serialize;
use std::collections::BTreeSet;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeckeError {
    #[error("Φ_(χ,f) is not regular with respect to the fan")]
    NotRegular,
    #[error("no admissible pair of degree-one primes below the search limit")]
    SearchExhausted,
    #[error("Re(s) = {re} is below the series threshold {min}")]
    ReTooSmall { re: f64, min: f64 },
    #[error("the direct series needs a finite-order character")]
    NotFiniteOrder,
    #[error("degree {0} needs explicitly supplied units and fans")]
    NeedUnits(usize),
    #[error("the cone base must be totally positive")]
    NotTotallyPositive,
    #[error("norm bound must be at least 1")]
    BadNormBound,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Adelic(#[from] AdelicError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Conical(#[from] ConicalError),
}

/// Smallest real part accepted by [`direct_partial_l`].
pub const SERIES_MIN_RE: f64 = 1.5;

/// Unit data computed for `ℚ` and real quadratic fields.
pub fn default_units(k: &TotallyRealField) -> Result<UnitData, HeckeError> {
    match k.degree() {
        1 => Ok(UnitData::rationals()),
        2 => Ok(quadratic_units(k)?),
        n => Err(HeckeError::NeedUnits(n)),
    }
}

/// The fundamental domain fan for the default units.
pub fn default_fd_fan(k: &TotallyRealField) -> Result<Fan, HeckeError> {
    Ok(fundamental_domain_fan(k, &default_units(k)?)?)
}

/// Which quotient of `K^×` the enumeration runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Quotient {
    /// One generator per principal ideal.
    Ideals,
    /// `K^× / E_K`.
    TotallyPositive,
}

/// Lattice points `x ≠ 0` with `|N(x)| ≤ bound`, one per class of the quotient,
/// visited with their coordinates and embeddings.
struct Enumerator {
    n: usize,
    emb: Vec<Vec<f64>>,
    period: f64,
    quotient: Quotient,
}

impl Enumerator {
    fn new(k: &TotallyRealField, basis: &[FieldElement], units: &UnitData, quotient: Quotient) -> Result<Self, HeckeError> {
        let n = k.degree();
        if n > 2 {
            return Err(HeckeError::NeedUnits(n));
        }
        let emb: Vec<Vec<f64>> = (0..n).map(|mu| basis.iter().map(|b| k.embed_f64(b)[mu]).collect()).collect();
        let period = if n == 2 {
            let u = match quotient {
                Quotient::Ideals => units.fundamental_unit.clone().ok_or(HeckeError::NeedUnits(n))?,
                Quotient::TotallyPositive => units.totally_positive_generators[0].clone(),
            };
            let e = k.embed_f64(&u);
            (e[1] / e[0]).abs().ln().abs()
        } else {
            0.0
        };
        Ok(Enumerator { n, emb, period, quotient })
    }

    fn visit(&self, bound: f64, mut f: impl FnMut(&[i64], &[f64])) {
        if self.n == 1 {
            let b = self.emb[0][0];
            let cmax = (bound / b.abs()).floor() as i64;
            for c in 1..=cmax {
                for sgn in [1i64, -1] {
                    let x = (sgn * c) as f64 * b;
                    if self.quotient == Quotient::Ideals && x < 0.0 {
                        continue;
                    }
                    f(&[sgn * c], &[x]);
                }
            }
            return;
        }
        // log|ρ₂/ρ₁| ∈ [a, a + period) with an irrational offset
        let a = 0.371_966_5 * self.period;
        let x1 = (bound * (-a).exp()).sqrt();
        let x2 = (bound * (a + self.period).exp()).sqrt();
        let m = &self.emb;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let c1max = ((m[1][1] / det).abs() * x1 + (m[0][1] / det).abs() * x2).ceil() as i64 + 1;
        for c1 in -c1max..=c1max {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (mu, xb) in [(0, x1), (1, x2)] {
                let (p, q) = (m[mu][0] * c1 as f64, m[mu][1]);
                let (l, h) = ((-xb - p) / q, (xb - p) / q);
                lo = lo.max(l.min(h));
                hi = hi.min(l.max(h));
            }
            if lo > hi {
                continue;
            }
            for c2 in (lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1) {
                if c1 == 0 && c2 == 0 {
                    continue;
                }
                let r = [m[0][0] * c1 as f64 + m[0][1] * c2 as f64, m[1][0] * c1 as f64 + m[1][1] * c2 as f64];
                if self.quotient == Quotient::Ideals && r[0] <= 0.0 {
                    continue;
                }
                if (r[0] * r[1]).abs() > bound {
                    continue;
                }
                let lr = (r[1] / r[0]).abs().ln() - a;
                if !(0.0..self.period).contains(&lr) {
                    continue;
                }
                f(&[c1, c2], &r);
            }
        }
    }
}

/// Neumaier-compensated complex sum.
#[derive(Default)]
struct Sum {
    s: [f64; 2],
    c: [f64; 2],
}

impl Sum {
    fn add(&mut self, x: [f64; 2]) {
        for i in 0..2 {
            let t = self.s[i] + x[i];
            if self.s[i].abs() >= x[i].abs() {
                self.c[i] += (self.s[i] - t) + x[i];
            } else {
                self.c[i] += (x[i] - t) + self.s[i];
            }
            self.s[i] = t;
        }
    }

    fn get(&self) -> [f64; 2] {
        [self.s[0] + self.c[0], self.s[1] + self.c[1]]
    }
}

/// `N^{−s}` as a complex pair.
fn norm_power(nm: f64, s: (f64, f64)) -> [f64; 2] {
    let l = nm.ln();
    let r = (-s.0 * l).exp();
    [r * (s.1 * l).cos(), -r * (s.1 * l).sin()]
}

/// Function values at `Σ c_i b_i` indexed by `c mod e`.
struct CosetTable {
    e: i64,
    n: usize,
    values: Vec<[f64; 2]>,
}

impl CosetTable {
    fn build(basis: &[FieldElement], e: i64, mut f: impl FnMut(&FieldElement) -> [f64; 2]) -> Self {
        let n = basis.len();
        let size = (e as usize).pow(n as u32);
        let mut values = Vec::with_capacity(size);
        for idx in 0..size {
            let mut x = FieldElement::zero(n);
            let mut r = idx;
            for b in basis {
                let c = (r % e as usize) as i64;
                r /= e as usize;
                x = x.add(&b.scale(&Rational::from(c)));
            }
            values.push(f(&x));
        }
        CosetTable { e, n, values }
    }

    fn get(&self, c: &[i64]) -> [f64; 2] {
        let mut idx = 0usize;
        for i in (0..self.n).rev() {
            idx = idx * self.e as usize + c[i].rem_euclid(self.e) as usize;
        }
        self.values[idx]
    }
}

/// Least `e > 0` with `e·L ⊆ M`.
fn exponent(l: &QLattice, m: &QLattice) -> Result<i64, HeckeError> {
    let mut e = Integer::from(1);
    for b in l.basis_elements() {
        let c = linalg::solve_left(m.basis(), &b.coords).ok_or(FieldError::NotSublattice)?;
        for q in c {
            e.lcm_mut(q.denom());
        }
    }
    e.to_i64().ok_or(HeckeError::BadNormBound)
}

fn sign_factor(r: &[f64], sigma: &[u8]) -> f64 {
    r.iter().zip(sigma).filter(|(x, &s)| s == 1 && **x < 0.0).count().rem_euclid(2) as f64 * -2.0 + 1.0
}

/// Result of the direct series.
#[derive(Clone, Debug)]
pub struct PartialL {
    /// Partial sum plus the tail estimate when one is available.
    pub value: Cx,
    pub partial_sum: Cx,
    /// Rigorous bound on `|Σ_{N(𝔞) > B} χ_I(𝔞)N(𝔞)^{−s}|`.
    pub tail_bound: f64,
    /// `κ B^{1−s}/(s−1)` for the trivial character.
    pub tail_estimate: Option<Cx>,
    pub terms: u64,
}

/// `σ ∫_B^∞ x^{−σ}(1 + log x)^m dx`, which majorizes the tail of
/// `Σ d_n(N) N^{−σ}` since `Σ_{N ≤ x} d_n(N) ≤ x(1 + log x)^{n−1}`.
pub fn divisor_tail_bound(n: usize, sigma: f64, bound: f64) -> f64 {
    let m = n - 1;
    let lb = 1.0 + bound.ln();
    let mut acc = 0.0;
    let mut fall = 1.0;
    for j in 0..=m {
        if j > 0 {
            fall *= (m - j + 1) as f64;
        }
        acc += fall * lb.powi((m - j) as i32) / (sigma - 1.0).powi(j as i32 + 1);
    }
    sigma * acc * bound.powf(1.0 - sigma)
}

/// Residue of the principal-class partial zeta function at `s = 1`.
pub fn principal_residue(k: &TotallyRealField, units: &UnitData) -> Result<f64, HeckeError> {
    let n = k.degree();
    let reg = match n {
        1 => 1.0,
        2 => {
            let e = units.fundamental_unit.as_ref().ok_or(HeckeError::NeedUnits(n))?;
            k.embed_f64(e)[0].abs().ln().abs()
        }
        _ => return Err(HeckeError::NeedUnits(n)),
    };
    let d = order::order_discriminant(k, k.ring_of_integers()).to_f64().abs();
    Ok(2f64.powi(n as i32) * reg / (2.0 * d.sqrt()))
}

/// `L(s, χ, C)` for the principal class by summing `χ_I(𝔞)N(𝔞)^{−s}` over
/// principal ideals of norm at most `bound`.
pub fn direct_partial_l(chi: &HeckeCharacter, s: &Cx, bound: f64) -> Result<PartialL, HeckeError> {
    let k = chi.field();
    let (sr, si) = s.to_f64();
    if sr < SERIES_MIN_RE {
        return Err(HeckeError::ReTooSmall { re: sr, min: SERIES_MIN_RE });
    }
    if !chi.is_finite_order() {
        return Err(HeckeError::NotFiniteOrder);
    }
    if bound < 1.0 {
        return Err(HeckeError::BadNormBound);
    }
    let units = default_units(k)?;
    let o = k.ring_of_integers();
    let basis = o.basis_elements();
    let e = exponent(o, chi.modulus())?;
    let table = CosetTable::build(&basis, e, |x| match chi.finite(x) {
        None => [0.0, 0.0],
        Some(t) => {
            let (re, im) = t.inv().to_cx(64).to_f64();
            [re, im]
        }
    });
    let en = Enumerator::new(k, &basis, &units, Quotient::Ideals)?;
    let sigma = chi.sigma().to_vec();
    let mut sum = Sum::default();
    let mut terms = 0u64;
    en.visit(bound, |c, r| {
        let t = table.get(c);
        if t == [0.0, 0.0] {
            return;
        }
        let sg = sign_factor(r, &sigma);
        let p = norm_power(r.iter().product::<f64>().abs(), (sr, si));
        sum.add([sg * (t[0] * p[0] - t[1] * p[1]), sg * (t[0] * p[1] + t[1] * p[0])]);
        terms += 1;
    });
    let [re, im] = sum.get();
    let partial_sum = Cx::from_f64(64, re, im);
    let trivial = chi.values().all(|(_, v)| v.is_one()) && chi.sigma().iter().all(|&x| x == 0);
    let tail_estimate = if trivial {
        let kappa = principal_residue(k, &units)?;
        let one_minus = Cx::one(64).sub(s);
        let b = Float::with_val(64, bound);
        Some(Cx::pow_real_base(&b, &one_minus).scale(&Float::with_val(64, kappa)).div(&one_minus.neg()))
    } else {
        None
    };
    let value = match &tail_estimate {
        Some(t) => partial_sum.add(t),
        None => partial_sum.clone(),
    };
    Ok(PartialL { value, partial_sum, tail_bound: divisor_tail_bound(k.degree(), sr, bound), tail_estimate, terms })
}

/// `H(s, λ) = Σ_{x ∈ K^×/E_K} Φ(x)·∏ sgn(ρ_μ x)^{σ_μ}·|N(x)|^{−s}`, truncated to
/// orbits with `|N(x)| ≤ bound·covol(supp Φ)/covol(O)`. Returns the sum and
/// the number of nonzero terms.
pub fn orbit_sum(
    k: &TotallyRealField,
    phi: &LatticeFunction,
    sigma: &SignPattern,
    s: &Cx,
    bound: f64,
) -> Result<(Cx, u64), HeckeError> {
    let (sr, si) = s.to_f64();
    if sr < SERIES_MIN_RE {
        return Err(HeckeError::ReTooSmall { re: sr, min: SERIES_MIN_RE });
    }
    let units = default_units(k)?;
    let supp = phi.supp();
    let basis = supp.basis_elements();
    let e = exponent(supp, phi.per())?;
    let table = CosetTable::build(&basis, e, |x| {
        let (re, im) = phi.eval(x).to_f64();
        [re, im]
    });
    let scale = (supp.covolume() / k.ring_of_integers().covolume()).to_f64();
    let en = Enumerator::new(k, &basis, &units, Quotient::TotallyPositive)?;
    let mut sum = Sum::default();
    let mut terms = 0u64;
    en.visit(bound * scale, |c, r| {
        let t = table.get(c);
        if t == [0.0, 0.0] {
            return;
        }
        let sg = sign_factor(r, sigma.as_slice());
        let p = norm_power(r.iter().product::<f64>().abs(), (sr, si));
        sum.add([sg * (t[0] * p[0] - t[1] * p[1]), sg * (t[0] * p[1] + t[1] * p[0])]);
        terms += 1;
    });
    let [re, im] = sum.get();
    Ok((Cx::from_f64(64, re, im), terms))
}

/// `Σ_{v ∈ C} Φ(v)·N(v)^{−s}` over the open cone `C = Λ(u, ε₊u)` for
/// totally positive `u`, by enumerating `K_{≫0}/E₊` and moving each orbit
/// representative into `C`; truncated at `N(v) ≤ bound·covol(supp)/covol(O)`.
/// Needs `supp Φ` stable under `ε₊`. Returns the sum and the term count.
pub fn cone_series(
    k: &TotallyRealField,
    phi: &LatticeFunction,
    u: &FieldElement,
    s: &Cx,
    bound: f64,
) -> Result<(Cx, u64), HeckeError> {
    let (sr, si) = s.to_f64();
    if sr < SERIES_MIN_RE {
        return Err(HeckeError::ReTooSmall { re: sr, min: SERIES_MIN_RE });
    }
    if k.degree() != 2 {
        return Err(HeckeError::NeedUnits(k.degree()));
    }
    let units = default_units(k)?;
    let eps = transport_unit(k, &units).ok_or(HeckeError::NeedUnits(2))?;
    let supp = phi.supp();
    let basis = supp.basis_elements();
    let mat = |x: &FieldElement| -> Result<Vec<Vec<i64>>, HeckeError> {
        let mut rows = Vec::with_capacity(basis.len());
        for b in &basis {
            let c = linalg::solve_left(supp.basis(), &k.mul(x, b).coords).ok_or(FieldError::NotSublattice)?;
            let mut row = Vec::with_capacity(c.len());
            for q in c {
                if *q.denom() != 1 {
                    return Err(FieldError::NotSublattice.into());
                }
                row.push(q.numer().to_i64().ok_or(HeckeError::BadNormBound)?);
            }
            rows.push(row);
        }
        Ok(rows)
    };
    let up = mat(&eps)?;
    let down = mat(&k.inv(&eps)?)?;
    let e = exponent(supp, phi.per())?;
    let table = CosetTable::build(&basis, e, |x| {
        let (re, im) = phi.eval(x).to_f64();
        [re, im]
    });
    let ue = k.embed_f64(u);
    if ue.iter().any(|&x| x <= 0.0) {
        return Err(HeckeError::NotTotallyPositive);
    }
    let l0 = (ue[1] / ue[0]).ln();
    let ee = k.embed_f64(&eps);
    let period = (ee[1] / ee[0]).ln();
    let scale = (supp.covolume() / k.ring_of_integers().covolume()).to_f64();
    let en = Enumerator::new(k, &basis, &units, Quotient::TotallyPositive)?;
    let apply = |m: &[Vec<i64>], c: &[i64]| -> Vec<i64> {
        (0..c.len()).map(|j| (0..c.len()).map(|i| c[i] * m[i][j]).sum()).collect()
    };
    let mut sum = Sum::default();
    let mut terms = 0u64;
    en.visit(bound * scale, |c, r| {
        if r[0] <= 0.0 || r[1] <= 0.0 {
            return;
        }
        let t = ((l0 - (r[1] / r[0]).ln()) / period).ceil();
        let offset = (r[1] / r[0]).ln() + t * period - l0;
        if offset.abs() < 1e-12 || (offset - period).abs() < 1e-12 {
            return;
        }
        let mut cc = c.to_vec();
        for _ in 0..(t.abs() as i64) {
            cc = apply(if t > 0.0 { &up } else { &down }, &cc);
        }
        let v = table.get(&cc);
        if v == [0.0, 0.0] {
            return;
        }
        let p = norm_power(r[0] * r[1], (sr, si));
        sum.add([v[0] * p[0] - v[1] * p[1], v[0] * p[1] + v[1] * p[0]]);
        terms += 1;
    });
    let [re, im] = sum.get();
    Ok((Cx::from_f64(64, re, im), terms))
}

/// Rational primes below the prime divisors of a fractional ideal.
fn ideal_primes(k: &TotallyRealField, a: &QLattice) -> Result<BTreeSet<u64>, HeckeError> {
    let o = k.ring_of_integers();
    let mut out = BTreeSet::new();
    for part in [a.intersect(o), a.ideal_inverse(k)?.intersect(o)] {
        let nm = part.ideal_norm(k);
        for (p, _) in factor(nm.numer()) {
            out.insert(p.to_u64().expect("small prime"));
        }
    }
    Ok(out)
}

/// `d·x` for the least positive integer `d` making it integral.
fn integral_multiple(k: &TotallyRealField, x: &FieldElement) -> FieldElement {
    let d0 = x.coords.iter().fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
    for d in divisors(&d0) {
        let y = x.scale(&Rational::from(d));
        if k.is_integral(&y) {
            return y;
        }
    }
    x.scale(&Rational::from(d0))
}

fn element_primes(k: &TotallyRealField, x: &FieldElement) -> BTreeSet<u64> {
    let y = integral_multiple(k, x);
    factor(k.norm(&y).numer()).into_iter().map(|(p, _)| p.to_u64().expect("small prime")).collect()
}

/// The excluded set `Z`: primes under `𝔟`, `𝔪`, `𝔡`, and under integral
/// rescalings of the generators `u_j` and of the trace-orthogonal `w_j` of
/// every cone in the test fans.
pub fn excluded_primes(chi: &HeckeCharacter, base: &PrincipalIdeal, fans: &[&Fan]) -> Result<BTreeSet<u64>, HeckeError> {
    let k = chi.field();
    let mut z = ideal_primes(k, &base.lattice)?;
    z.extend(ideal_primes(k, chi.modulus())?);
    let d = order::order_discriminant(k, k.ring_of_integers());
    z.extend(factor(&d).into_iter().map(|(p, _)| p.to_u64().expect("small prime")));
    for fan in fans {
        for (cone, _) in fan.terms() {
            if !k.is_linearly_independent(&cone.generators) || cone.dim() != k.degree() {
                continue;
            }
            for u in &cone.generators {
                z.extend(element_primes(k, u));
            }
            for w in k.dual_basis(&cone.generators)? {
                z.extend(element_primes(k, &w));
            }
        }
    }
    Ok(z)
}

/// Data of the regularized function `Φ_{χ,f}` with `f = γ·𝔟`.
#[derive(Clone, Debug)]
pub struct RegularizedDatum {
    pub chi: HeckeCharacter,
    pub base_ideal: PrincipalIdeal,
    /// `None` for data used without regularization.
    pub p_gen: Option<FieldElement>,
    pub q_gen: Option<FieldElement>,
    pub gamma: GroupRingElement,
    pub f: GroupRingElement,
    pub units: UnitData,
}

impl RegularizedDatum {
    /// `γ = (1 − N(𝔭)χ_I(𝔭)𝔭⁻¹)(1 − χ_I(𝔮)⁻¹𝔮)` for given generators.
    pub fn with_primes(
        chi: &HeckeCharacter,
        base: &PrincipalIdeal,
        p_gen: &FieldElement,
        q_gen: &FieldElement,
    ) -> Result<Self, HeckeError> {
        let k = chi.field();
        let prec = VALUE_BITS;
        let p = PrincipalIdeal::new(k, p_gen.clone())?;
        let q = PrincipalIdeal::new(k, q_gen.clone())?;
        let np = Cx::from_rational(prec, &p.norm(k));
        let g1 = GroupRingElement::one_plus(k, np.mul(&chi.chi_ideal(p_gen, prec)).neg(), p.inverse(k));
        let g2 = GroupRingElement::one_plus(k, chi.chi_ideal(q_gen, prec).inv().neg(), q);
        let gamma = g1.mul(k, &g2);
        let f = gamma.mul_ideal(k, base);
        Ok(RegularizedDatum {
            chi: chi.clone(),
            base_ideal: base.clone(),
            p_gen: Some(p_gen.clone()),
            q_gen: Some(q_gen.clone()),
            gamma,
            f,
            units: default_units(k)?,
        })
    }

    /// `γ = 1`, for characters whose `Φ_{χ,𝔟}` is already regular.
    pub fn unregularized(chi: &HeckeCharacter, base: &PrincipalIdeal) -> Result<Self, HeckeError> {
        let k = chi.field();
        let gamma = GroupRingElement::unit(k, VALUE_BITS);
        Ok(RegularizedDatum {
            chi: chi.clone(),
            base_ideal: base.clone(),
            p_gen: None,
            q_gen: None,
            f: gamma.mul_ideal(k, base),
            gamma,
            units: default_units(k)?,
        })
    }

    pub fn field(&self) -> &TotallyRealField {
        self.chi.field()
    }

    /// `Φ_{χ,f}`.
    pub fn phi(&self) -> LatticeFunction {
        twisted_function(&self.chi, &self.f, VALUE_BITS)
    }

    /// `𝔪𝔡f̂`.
    pub fn dual_f(&self) -> Result<GroupRingElement, HeckeError> {
        let k = self.field();
        Ok(self.f.hat(k).mul_ideal(k, &md_ideal(&self.chi)?))
    }

    /// `Φ_{χ⁻¹,𝔪𝔡f̂}`.
    pub fn dual_phi(&self) -> Result<LatticeFunction, HeckeError> {
        Ok(twisted_function(&self.chi.inverse(), &self.dual_f()?, VALUE_BITS))
    }

    /// `#(O_K^× / E_K)`.
    pub fn unit_index(&self) -> u64 {
        self.units.unit_group_index
    }
}

/// Pick the smallest admissible degree-one principal primes outside the
/// excluded set for the test fans, their dual fans, the transport cones of
/// both and `avoid_extra`, then build `γ` and `f`.
/// The regularity of `Φ_{χ,f}` is checked against every test fan.
pub fn make_regularized(
    chi: &HeckeCharacter,
    base: &PrincipalIdeal,
    fans: &[&Fan],
    avoid_extra: &BTreeSet<u64>,
) -> Result<RegularizedDatum, HeckeError> {
    let k = chi.field();
    let units = default_units(k)?;
    let mut extended: Vec<Fan> = Vec::new();
    for fan in fans {
        extended.extend(transport_fans(k, fan, &units));
        let df = dual_fan(k, fan);
        extended.extend(transport_fans(k, &df, &units));
        extended.push(df);
    }
    let mut all: Vec<&Fan> = fans.to_vec();
    all.extend(extended.iter());
    let mut avoid = excluded_primes(chi, base, &all)?;
    avoid.extend(avoid_extra);
    let primes = find_principal_degree_one_primes(k, &avoid, k.degree() + 1).map_err(|e| match e {
        FieldError::SearchExhausted => HeckeError::SearchExhausted,
        e => e.into(),
    })?;
    let p = &primes[0];
    let q = primes.iter().find(|q| q.p != p.p).ok_or(HeckeError::SearchExhausted)?;
    let datum = RegularizedDatum::with_primes(chi, base, &p.generator, &q.generator)?;
    let phi = datum.phi();
    if fans.iter().any(|fan| !regular(k, &phi, fan)) {
        return Err(HeckeError::NotRegular);
    }
    Ok(datum)
}

/// `c(z, s) = Σ n_j N(𝔟_j)^s`.
pub fn c_factor(k: &TotallyRealField, z: &GroupRingElement, s: &Cx) -> Cx {
    z.c_factor(k, s)
}

#[derive(Clone, Debug, Serialize)]
pub struct LJobMetadata {
    pub s: Vec<(f64, f64)>,
    pub sigma: Vec<u8>,
    pub h: Vec<f64>,
    pub fan_id: String,
}

#[derive(Clone, Debug)]
pub struct LJobResult {
    pub value: Cx,
    pub route: Route,
    pub error_estimate: f64,
    pub orthants: Vec<(Vec<i8>, OrthantRoute)>,
    pub metadata: LJobMetadata,
}

/// How `L(g, s, Φ, 𝔻)` is obtained on one orthant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthantRoute {
    /// Quadrature of the form of `𝔻` itself.
    Literal,
    /// Generators sign-flipped into `K_g`.
    Flipped,
    /// `F(w; ε₊)` with `w ∈ K_g`, on points of `X(λ)`.
    Transported,
}

/// Unit generator used for transport, oriented with `ρ_n(ε₊) > 1`.
fn transport_unit(k: &TotallyRealField, units: &UnitData) -> Option<FieldElement> {
    if k.degree() != 2 {
        return None;
    }
    let e = units.totally_positive_generators.first()?;
    if k.embed_float(e, 1, 64) > 1 {
        Some(e.clone())
    } else {
        k.inv(e).ok()
    }
}

fn sign_vector(k: &TotallyRealField, x: &FieldElement) -> Vec<i8> {
    (0..k.degree()).map(|mu| if k.embed_sign(x, mu) == std::cmp::Ordering::Less { -1 } else { 1 }).collect()
}

/// A small integral element with sign pattern `g`.
pub fn orthant_representative(k: &TotallyRealField, g: &[i8]) -> FieldElement {
    let n = k.degree();
    for r in 1i64.. {
        let mut c = vec![-r; n];
        loop {
            if c.iter().map(|x| x.abs()).max() == Some(r) {
                let x = k.elem_i(&c);
                if !x.is_zero() && sign_vector(k, &x) == g {
                    return x;
                }
            }
            let mut i = 0;
            while i < n && c[i] == r {
                c[i] = -r;
                i += 1;
            }
            if i == n {
                break;
            }
            c[i] += 1;
        }
    }
    unreachable!()
}

/// `fan` with every generator moved into `K_g` by a sign, if possible.
fn flipped_fan(k: &TotallyRealField, fan: &Fan, g: &[i8]) -> Option<Fan> {
    let mut out = Fan::zero();
    for (c, coef) in fan.terms() {
        let mut gens = Vec::with_capacity(c.dim());
        for u in &c.generators {
            let sv = sign_vector(k, u);
            if sv.as_slice() == g {
                gens.push(u.clone());
            } else if sv.iter().zip(g).all(|(a, b)| a == &-b) {
                gens.push(u.neg());
            } else {
                return None;
            }
        }
        out.add_term(coef, Cone::new(gens));
    }
    Some(out)
}

/// Candidate bases `w ∈ K_g` for transport: signed multiples of the first
/// generator of `fan` by `1, θ, η, ηθ` (`η` the fundamental unit), then a
/// small integral element.
fn transport_candidates(k: &TotallyRealField, fan: &Fan, g: &[i8], units: &UnitData) -> Vec<FieldElement> {
    let mut out = Vec::new();
    if let Some(x) = fan.terms().next().and_then(|(c, _)| c.generators.first().cloned()) {
        let mut mults = vec![k.one(), k.theta()];
        if let Some(eta) = &units.fundamental_unit {
            mults.push(eta.clone());
            mults.push(k.mul(eta, &k.theta()));
        }
        for m in &mults {
            let y = k.mul(&x, m);
            for y in [y.clone(), y.neg()] {
                if sign_vector(k, &y) == g && !out.contains(&y) {
                    out.push(y);
                }
            }
        }
    }
    let r = orthant_representative(k, g);
    if !out.contains(&r) {
        out.push(r);
    }
    out
}

/// Cones entering the transport of the fundamental domain fan `fan` into
/// each orthant it does not flip into: `F(w; ε₊)`, `Λ(x, w)` and
/// `Λ(ε₊x, ε₊w)` for every candidate `w` and the first generator `x`.
pub fn transport_fans(k: &TotallyRealField, fan: &Fan, units: &UnitData) -> Vec<Fan> {
    let Some(eps) = transport_unit(k, units) else { return vec![] };
    let Some(x) = fan.terms().next().and_then(|(c, _)| c.generators.first().cloned()) else { return vec![] };
    let mut out = Vec::new();
    for g in orthants(k.degree()) {
        if flipped_fan(k, fan, &g).is_some() {
            continue;
        }
        for w in transport_candidates(k, fan, &g, units) {
            out.extend(transport_link(k, &x, &w, &eps));
        }
    }
    out
}

fn transport_link(k: &TotallyRealField, x: &FieldElement, w: &FieldElement, eps: &FieldElement) -> [Fan; 3] {
    [
        cubic_fd_fan(k, w, std::slice::from_ref(eps)),
        Fan::from_generators(vec![x.clone(), w.clone()]),
        Fan::from_generators(vec![k.mul(eps, x), k.mul(eps, w)]),
    ]
}

/// Which orthant routes an evaluation may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthantStrategy {
    /// Flipped, else transported on `X(λ)`, else literal.
    #[default]
    Adapted,
    /// Flipped, else literal; the same routes at every `s`.
    NoTransport,
}

struct OrthantPlan {
    g: Vec<i8>,
    route: OrthantRoute,
    form: Option<RExpForm>,
}

/// Result of an orthant-adapted evaluation.
#[derive(Clone, Debug)]
pub struct AdaptedEvaluation {
    pub value: Cx,
    pub error: f64,
    pub route: Route,
    pub orthants: Vec<(Vec<i8>, OrthantRoute)>,
}

/// `L_σ(s, Φ, 𝔻)` for a fundamental domain fan `𝔻`, each orthant evaluated
/// on a cone inside it when one is available.
pub struct AdaptedShintani {
    field: TotallyRealField,
    phi: LatticeFunction,
    fan: Fan,
    eps_log: Option<Vec<f64>>,
    plans: Vec<OrthantPlan>,
    literal: OnceLock<Result<RExpForm, EvalError>>,
}

impl AdaptedShintani {
    pub fn new(
        k: &TotallyRealField,
        phi: LatticeFunction,
        fan: &Fan,
        units: &UnitData,
        strategy: OrthantStrategy,
    ) -> Result<Self, HeckeError> {
        let eps = transport_unit(k, units).filter(|_| strategy == OrthantStrategy::Adapted);
        let invariant = match &eps {
            Some(e) => phi.scale_argument(k, e)?.distance(&phi) < 1e-30,
            None => false,
        };
        let x = fan.terms().next().and_then(|(c, _)| c.generators.first().cloned());
        let mut plans = Vec::new();
        for g in orthants(k.degree()) {
            if let Some(f) = flipped_fan(k, fan, &g) {
                let form = build_form(k, &phi, &f)?;
                plans.push(OrthantPlan { g, route: OrthantRoute::Flipped, form: Some(form) });
                continue;
            }
            if let (true, Some(e), Some(x)) = (invariant, &eps, &x) {
                let mut best: Option<RExpForm> = None;
                for w in transport_candidates(k, fan, &g, units) {
                    let [t, l1, l2] = transport_link(k, x, &w, e);
                    if !(regular(k, &phi, &t) && regular(k, &phi, &l1) && regular(k, &phi, &l2)) {
                        continue;
                    }
                    let form = build_form(k, &phi, &t)?;
                    if best.as_ref().map_or(true, |b| form.num_terms() < b.num_terms()) {
                        best = Some(form);
                    }
                }
                if let Some(form) = best {
                    plans.push(OrthantPlan { g, route: OrthantRoute::Transported, form: Some(form) });
                    continue;
                }
            }
            plans.push(OrthantPlan { g, route: OrthantRoute::Literal, form: None });
        }
        let eps_log = if invariant { eps.map(|e| k.embed_f64(&e).iter().map(|r| r.ln()).collect()) } else { None };
        Ok(AdaptedShintani { field: k.clone(), phi, fan: fan.clone(), eps_log, plans, literal: OnceLock::new() })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    /// Orthant routes used for points of `X(λ)`, with the form sizes.
    pub fn routes(&self) -> Vec<(Vec<i8>, OrthantRoute, usize)> {
        self.plans.iter().map(|p| (p.g.clone(), p.route, p.form.as_ref().map_or(0, RExpForm::num_terms))).collect()
    }

    fn literal(&self) -> Result<&RExpForm, EvalError> {
        self.literal
            .get_or_init(|| build_form(&self.field, &self.phi, &self.fan))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `Σ_μ s_μ log ρ_μ(ε₊) ∈ 2πiℤ`.
    pub fn in_x_lambda(&self, s: &[Cx]) -> bool {
        let Some(l) = &self.eps_log else { return false };
        let (mut re, mut im) = (0.0, 0.0);
        for (x, lm) in s.iter().zip(l) {
            let (a, b) = x.to_f64();
            re += a * lm;
            im += b * lm;
        }
        let tau = 2.0 * std::f64::consts::PI;
        re.abs() < 1e-12 && (im / tau - (im / tau).round()).abs() < 1e-12
    }

    /// Direct-regime `L_σ(s)`.
    pub fn l_sigma(&self, sigma: &SignPattern, s: &[Cx], cfg: &EvalConfig) -> Result<AdaptedEvaluation, HeckeError> {
        let n = self.field.degree();
        if sigma.len() != n || s.len() != n {
            return Err(EvalError::DimensionMismatch { expected: n, got: s.len().min(sigma.len()) }.into());
        }
        let diag = self.in_x_lambda(s);
        let ps = cfg.sum_prec();
        let mut value = Cx::zero(ps);
        let mut error = 0.0;
        let mut used = Vec::with_capacity(self.plans.len());
        for p in &self.plans {
            let (form, route) = match (&p.form, p.route) {
                (Some(f), OrthantRoute::Flipped) => (f, OrthantRoute::Flipped),
                (Some(f), OrthantRoute::Transported) if diag => (f, OrthantRoute::Transported),
                _ => (self.literal()?, OrthantRoute::Literal),
            };
            let e = l_orthant(&p.g, s, form, cfg)?;
            let flips = p.g.iter().zip(sigma.as_slice()).filter(|(&gm, &sg)| gm < 0 && sg == 1).count();
            value = if flips % 2 == 1 { value.sub(&e.value) } else { value.add(&e.value) };
            error += e.error;
            used.push((p.g.clone(), route));
        }
        Ok(AdaptedEvaluation { value, error, route: Route::Direct, orthants: used })
    }
}

/// `F_{χ,f,𝔻}` with its orthant forms cached across evaluations.
pub struct HeckeFunction {
    chi: HeckeCharacter,
    units: UnitData,
    fan: Fan,
    sigma: SignPattern,
    side: AdaptedShintani,
    strategy: OrthantStrategy,
    dual: OnceLock<Result<AdaptedShintani, HeckeError>>,
}

impl HeckeFunction {
    /// Checks that `Φ_{χ,f}` is regular with respect to `fan`.
    pub fn new(datum: &RegularizedDatum, fan: &Fan) -> Result<Self, HeckeError> {
        Self::with_strategy(datum, fan, OrthantStrategy::Adapted)
    }

    pub fn with_strategy(datum: &RegularizedDatum, fan: &Fan, strategy: OrthantStrategy) -> Result<Self, HeckeError> {
        Self::from_function(&datum.chi, &datum.units, fan, datum.phi(), strategy)
    }

    /// `L_σ(s + h, Φ, 𝔻)/index` for a supplied `Φ`, checked regular.
    pub fn from_function(
        chi: &HeckeCharacter,
        units: &UnitData,
        fan: &Fan,
        phi: LatticeFunction,
        strategy: OrthantStrategy,
    ) -> Result<Self, HeckeError> {
        let k = chi.field();
        if !regular(k, &phi, fan) {
            return Err(HeckeError::NotRegular);
        }
        Ok(HeckeFunction {
            chi: chi.clone(),
            units: units.clone(),
            fan: fan.clone(),
            sigma: SignPattern::new(chi.sigma().to_vec())?,
            side: AdaptedShintani::new(k, phi, fan, units, strategy)?,
            strategy,
            dual: OnceLock::new(),
        })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn sigma(&self) -> &SignPattern {
        &self.sigma
    }

    pub fn routes(&self) -> Vec<(Vec<i8>, OrthantRoute, usize)> {
        self.side.routes()
    }

    fn dual_side(&self) -> Result<&AdaptedShintani, HeckeError> {
        self.dual
            .get_or_init(|| {
                let k = self.chi.field();
                let phi_hat = self.side.phi.fourier(k);
                AdaptedShintani::new(k, phi_hat, &dual_fan(k, &self.fan), &self.units, self.strategy)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn shifted(&self, s: &[Cx], ps: u32) -> Vec<Cx> {
        s.iter().zip(self.chi.h()).map(|(x, &hm)| x.with_prec(ps).add(&Cx::from_f64(ps, hm, 0.0))).collect()
    }

    fn l_sigma(&self, s: &[Cx], mode: Mode, cfg: &EvalConfig) -> Result<AdaptedEvaluation, HeckeError> {
        cfg.validate()?;
        let n = self.chi.field().degree();
        if s.len() != n {
            return Err(EvalError::DimensionMismatch { expected: n, got: s.len() }.into());
        }
        let direct = s.iter().all(|x| x.re.to_f64() >= cfg.min_re);
        let fe = s.iter().all(|x| 1.0 - x.re.to_f64() >= cfg.min_re);
        let route = match mode {
            Mode::Direct | Mode::Auto if direct => Route::Direct,
            Mode::Fe | Mode::Auto if fe => Route::Fe,
            _ => return Err(EvalError::MixedRegime.into()),
        };
        if route == Route::Direct {
            return self.side.l_sigma(&self.sigma, s, cfg);
        }
        let ps = cfg.sum_prec();
        let sp: Vec<Cx> = s.iter().map(|x| x.with_prec(ps)).collect();
        let r: Vec<Cx> = sp.iter().map(|x| Cx::one(ps).sub(x)).collect();
        let e = self.dual_side()?.l_sigma(&self.sigma, &r, cfg)?;
        let sg = self.sigma.as_slice();
        let factor = FE_CONSTANT
            .value(&self.sigma, ps)
            .mul(&mp::gamma_sigma(sg, &r).map_err(EvalError::from)?)
            .mul(&mp::rgamma_sigma(sg, &sp));
        Ok(AdaptedEvaluation { value: e.value.mul(&factor), error: e.error * factor.abs_f64(), route, orthants: e.orthants })
    }

    /// `F(s) = L_σ((s_μ + h_μ), Φ_{χ,f}, 𝔻) / #(O_K^×/E_K)`.
    pub fn eval(&self, s: &[Cx], mode: Mode, cfg: &EvalConfig) -> Result<LJobResult, HeckeError> {
        let ps = cfg.bits + 32;
        let e = self.l_sigma(&self.shifted(s, ps), mode, cfg)?;
        let idx = Float::with_val(ps, self.units.unit_group_index);
        Ok(LJobResult {
            value: e.value.scale(&idx.clone().recip()),
            route: e.route,
            error_estimate: e.error / idx.to_f64(),
            orthants: e.orthants,
            metadata: LJobMetadata {
                s: s.iter().map(Cx::to_f64).collect(),
                sigma: self.sigma.as_slice().to_vec(),
                h: self.chi.h().to_vec(),
                fan_id: self.fan.to_string(),
            },
        })
    }

    /// `Γ_σ(s + h)·F(s)` on the direct regime.
    pub fn completed(&self, s: &[Cx], cfg: &EvalConfig) -> Result<(Cx, f64), HeckeError> {
        let ps = cfg.bits + 32;
        let r = self.eval(s, Mode::Direct, cfg)?;
        let g = mp::gamma_sigma(self.sigma.as_slice(), &self.shifted(s, ps)).map_err(EvalError::from)?;
        Ok((r.value.mul(&g), r.error_estimate * g.abs_f64()))
    }
}

/// One-shot `F_{χ,f,𝔻}(s)`.
pub fn f_chi(datum: &RegularizedDatum, fan: &Fan, s: &[Cx], cfg: &EvalConfig) -> Result<LJobResult, HeckeError> {
    HeckeFunction::new(datum, fan)?.eval(s, Mode::Auto, cfg)
}

/// `W_χ = i_χ·k(χ)·√N(𝔪𝔡)` with `i_χ` the functional-equation constant.
pub fn root_number(chi: &HeckeCharacter, prec: u32) -> Result<Cx, HeckeError> {
    let k = chi.field();
    let sigma = SignPattern::new(chi.sigma().to_vec())?;
    let kc = gauss_constant(chi, prec)?;
    let nmd = Float::with_val(prec, &md_ideal(chi)?.norm(k)).sqrt();
    Ok(FE_CONSTANT.value(&sigma, prec).mul(&kc).scale(&nmd))
}

/// Both sides of the Hecke functional equation.
#[derive(Clone, Debug)]
pub struct HeckeFeCheck {
    /// `Γ_σ(s+h) F_{χ,f,𝔻}(s)`.
    pub lhs: Cx,
    /// `i_χ k(χ) Γ_σ(1−s−h) F_{χ⁻¹,𝔪𝔡f̂,𝔻'}(1−s)`.
    pub rhs: Cx,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`.
    pub residual: f64,
    pub error_estimate: f64,
    pub root_number: Cx,
    /// On the diagonal: `L(s, χ, C) = F(s,…,s)/c(f, s)`.
    pub l_value: Option<Cx>,
}

/// Both sides of the Hecke functional equation with their forms cached.
pub struct HeckeFe {
    datum: RegularizedDatum,
    left: HeckeFunction,
    right: HeckeFunction,
}

impl HeckeFe {
    /// The right side on the dual fan `φ𝔻`.
    pub fn new(datum: &RegularizedDatum, fan: &Fan) -> Result<Self, HeckeError> {
        Self::with_dual(datum, fan, &dual_fan(datum.field(), fan))
    }

    /// The right side on an explicitly supplied fundamental domain fan.
    pub fn with_dual(datum: &RegularizedDatum, fan: &Fan, dual: &Fan) -> Result<Self, HeckeError> {
        let left = HeckeFunction::new(datum, fan)?;
        let right = HeckeFunction::from_function(
            &datum.chi.inverse(),
            &datum.units,
            dual,
            datum.dual_phi()?,
            OrthantStrategy::Adapted,
        )?;
        Ok(HeckeFe { datum: datum.clone(), left, right })
    }

    pub fn left(&self) -> &HeckeFunction {
        &self.left
    }

    pub fn right(&self) -> &HeckeFunction {
        &self.right
    }

    pub fn check(&self, s: &[Cx], cfg: &EvalConfig) -> Result<HeckeFeCheck, HeckeError> {
        let k = self.datum.field();
        let ps = cfg.bits + 32;
        let (lhs, le) = self.left.completed(s, cfg)?;
        let r: Vec<Cx> = s.iter().map(|x| Cx::one(ps).sub(&x.with_prec(ps))).collect();
        let (rc, re) = self.right.completed(&r, cfg)?;
        let kc = gauss_constant(&self.datum.chi, ps)?;
        let factor = FE_CONSTANT.value(self.left.sigma(), ps).mul(&kc);
        let rhs = rc.mul(&factor);
        let scale = lhs.abs_f64().max(rhs.abs_f64());
        let residual = if scale > 0.0 { lhs.sub(&rhs).abs_f64() / scale } else { 0.0 };
        let diagonal = s.windows(2).all(|w| w[0].sub(&w[1]).is_zero());
        let l_value = if diagonal && !s.is_empty() {
            let f = self.left.eval(s, Mode::Direct, cfg)?;
            Some(f.value.div(&c_factor(k, &self.datum.f, &s[0].with_prec(ps))))
        } else {
            None
        };
        Ok(HeckeFeCheck {
            lhs,
            rhs,
            residual,
            error_estimate: (le + re * factor.abs_f64()) / scale.max(f64::MIN_POSITIVE),
            root_number: root_number(&self.datum.chi, ps)?,
            l_value,
        })
    }
}

/// One-shot check with the right side on the dual fan `φ𝔻`.
pub fn hecke_fe_check(datum: &RegularizedDatum, fan: &Fan, s: &[Cx], cfg: &EvalConfig) -> Result<HeckeFeCheck, HeckeError> {
    HeckeFe::new(datum, fan)?.check(s, cfg)
}

/// As [`hecke_fe_check`] with an explicitly supplied fan on the dual side.
pub fn hecke_fe_check_with_dual(
    datum: &RegularizedDatum,
    fan: &Fan,
    dual: &Fan,
    s: &[Cx],
    cfg: &EvalConfig,
) -> Result<HeckeFeCheck, HeckeError> {
    HeckeFe::with_dual(datum, fan, dual)?.check(s, cfg)
}

/// `c = d/ds F(s,…,s)` against its single-axis parts `c^{(μ)} = ∂_μ F`.
#[derive(Clone, Debug)]
pub struct ShintaniFormula {
    pub c: Cx,
    pub partials: Vec<Cx>,
    pub residual: f64,
    pub error_estimate: f64,
}

/// Diagonal derivative and partial derivatives of any function of `n` variables.
pub fn diagonal_decomposition<E>(
    f: &dyn Fn(&[Cx]) -> Result<Cx, E>,
    at: &Cx,
    n: usize,
    bits: u32,
) -> Result<ShintaniFormula, E> {
    let point = vec![at.clone(); n];
    let c = partial_derivative(f, &point, &Direction::Vector(vec![1.0; n]), 1, bits)?;
    let mut partials = Vec::with_capacity(n);
    let mut err = c.error;
    let mut sum = Cx::zero(c.value.prec());
    for mu in 0..n {
        let d = partial_derivative(f, &point, &Direction::Axis(mu), 1, bits)?;
        err += d.error;
        sum = sum.add(&d.value);
        partials.push(d.value);
    }
    let residual = c.value.sub(&sum).abs_f64();
    Ok(ShintaniFormula { c: c.value, partials, residual, error_estimate: err })
}

/// The Shintani formula at a diagonal point where `F` is holomorphic.
/// Nearby off-diagonal values are needed, so transport is not used.
pub fn shintani_decomposition(
    datum: &RegularizedDatum,
    fan: &Fan,
    at: &Cx,
    cfg: &EvalConfig,
) -> Result<ShintaniFormula, HeckeError> {
    let hf = HeckeFunction::with_strategy(datum, fan, OrthantStrategy::NoTransport)?;
    let n = datum.field().degree();
    let f = |s: &[Cx]| -> Result<Cx, HeckeError> { Ok(hf.eval(s, Mode::Auto, cfg)?.value) };
    diagonal_decomposition(&f, at, n, cfg.bits)
}
