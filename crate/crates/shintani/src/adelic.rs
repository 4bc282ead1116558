//! Schwartz–Bruhat functions on the finite adeles as lattice-coset tables,
//! their Fourier transform, the regularity conditions P1/P2 and Hecke
//! standard functions.

use crate::fan_algebra::{Cone, Fan};
use crate::mp::Cx;
use crate::numberfield::{linalg, quadratic_units, FieldElement, FieldError, QLattice, TotallyRealField};
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Default precision for stored function values. Evaluation escalates the
/// working precision far beyond the requested bits near `t = 0`, so the
/// coefficients must be known to more bits than any node uses.
pub const VALUE_BITS: u32 = 1536;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdelicError {
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("cone is not simple of full dimension")]
    NotSimple,
    #[error("inconsistent character: {0}")]
    InconsistentCharacter(String),
    #[error("no point where the comparison function is nonzero")]
    NoNonzeroPoint,
    #[error("ideal is not principal (no generator found)")]
    NotPrincipal,
    #[error("Gauss constant depends on the evaluation point (spread {0:e})")]
    GaussNotConstant(f64),
    #[error("cannot parse character value '{0}'")]
    BadValue(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `x ↦ Σ_c table(c)·1_{c+M}(x)` on `L = supp`, `M = per`.
#[derive(Clone, Debug)]
pub struct LatticeFunction {
    supp: QLattice,
    per: QLattice,
    table: BTreeMap<FieldElement, Cx>,
    prec: u32,
}

fn threshold(prec: u32) -> Float {
    Float::with_val(64, Float::i_exp(1, -((prec * 3 / 4) as i32)))
}

impl LatticeFunction {
    /// Build from coset values; representatives must lie in `supp`.
    pub fn new(
        supp: QLattice,
        per: QLattice,
        entries: impl IntoIterator<Item = (FieldElement, Cx)>,
        prec: u32,
    ) -> Result<Self, AdelicError> {
        if !supp.contains_lattice(&per) {
            return Err(FieldError::NotSublattice.into());
        }
        let mut table: BTreeMap<FieldElement, Cx> = BTreeMap::new();
        for (x, v) in entries {
            if !supp.contains(&x) {
                return Err(FieldError::NotSublattice.into());
            }
            let r = per.reduce(&x);
            let v = v.with_prec(prec);
            match table.get_mut(&r) {
                Some(e) => *e = e.add(&v),
                None => {
                    table.insert(r, v);
                }
            }
        }
        let mut f = LatticeFunction { supp, per, table, prec };
        f.prune();
        Ok(f)
    }

    /// Tabulate `f` on a transversal of `supp/per`.
    pub fn from_fn(
        supp: QLattice,
        per: QLattice,
        prec: u32,
        mut f: impl FnMut(&FieldElement) -> Cx,
    ) -> Result<Self, AdelicError> {
        let reps = supp.quotient_reps(&per)?;
        let entries: Vec<_> = reps.into_iter().map(|r| {
            let v = f(&r);
            (r, v)
        }).collect();
        Self::new(supp, per, entries, prec)
    }

    pub fn indicator(l: &QLattice, prec: u32) -> Self {
        let n = l.dim();
        Self::new(l.clone(), l.clone(), [(FieldElement::zero(n), Cx::one(prec))], prec).expect("L ⊆ L")
    }

    /// Drop values that are zero to within the stored precision.
    fn prune(&mut self) {
        let thr = threshold(self.prec);
        self.table.retain(|_, v| v.abs() > thr);
    }

    /// The same table rounded to `prec` bits.
    pub fn with_precision(&self, prec: u32) -> LatticeFunction {
        let table = self.table.iter().map(|(x, v)| (x.clone(), v.with_prec(prec))).collect();
        let mut f = LatticeFunction { supp: self.supp.clone(), per: self.per.clone(), table, prec };
        f.prune();
        f
    }

    pub fn supp(&self) -> &QLattice {
        &self.supp
    }

    pub fn per(&self) -> &QLattice {
        &self.per
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn dim(&self) -> usize {
        self.supp.dim()
    }

    /// Nonzero cosets with their values.
    pub fn entries(&self) -> impl Iterator<Item = (&FieldElement, &Cx)> {
        self.table.iter()
    }

    pub fn num_nonzero(&self) -> usize {
        self.table.len()
    }

    pub fn eval(&self, x: &FieldElement) -> Cx {
        if !self.supp.contains(x) {
            return Cx::zero(self.prec);
        }
        self.table.get(&self.per.reduce(x)).cloned().unwrap_or_else(|| Cx::zero(self.prec))
    }

    /// `Σ a_i Φ_i` on the common lattices `Σ supp_i ⊇ ∩ per_i`.
    pub fn combine(terms: &[(Cx, &LatticeFunction)]) -> LatticeFunction {
        assert!(!terms.is_empty(), "combine needs at least one term");
        let mut supp = terms[0].1.supp.clone();
        let mut per = terms[0].1.per.clone();
        let mut prec = terms[0].1.prec;
        for (_, f) in &terms[1..] {
            supp = supp.sum(&f.supp);
            per = per.intersect(&f.per);
            prec = prec.max(f.prec);
        }
        Self::from_fn(supp, per, prec, |x| {
            let mut acc = Cx::zero(prec);
            for (a, f) in terms {
                let v = f.eval(x);
                if !v.is_zero() {
                    acc = acc.add(&a.mul(&v));
                }
            }
            acc
        })
        .expect("per ⊆ supp")
    }

    pub fn add(&self, o: &LatticeFunction) -> LatticeFunction {
        let one = Cx::one(self.prec.max(o.prec));
        Self::combine(&[(one.clone(), self), (one, o)])
    }

    pub fn sub(&self, o: &LatticeFunction) -> LatticeFunction {
        let one = Cx::one(self.prec.max(o.prec));
        Self::combine(&[(one.clone(), self), (one.neg(), o)])
    }

    pub fn scale(&self, a: &Cx) -> LatticeFunction {
        let entries: Vec<_> = self.table.iter().map(|(k, v)| (k.clone(), v.mul(a))).collect();
        Self::new(self.supp.clone(), self.per.clone(), entries, self.prec).expect("same lattices")
    }

    /// `x ↦ Φ(βx)`, with `supp = β⁻¹L`, `per = β⁻¹M`.
    pub fn scale_argument(&self, k: &TotallyRealField, beta: &FieldElement) -> Result<LatticeFunction, AdelicError> {
        if beta.is_zero() {
            return Err(AdelicError::ZeroScale);
        }
        let bi = k.inv(beta)?;
        let supp = self.supp.scale(k, &bi)?;
        let per = self.per.scale(k, &bi)?;
        Self::from_fn(supp, per, self.prec, |x| self.eval(&k.mul(beta, x)))
    }

    /// `x ↦ Φ(x + w)` for `w ∈ supp`.
    pub fn translate(&self, w: &FieldElement) -> LatticeFunction {
        assert!(self.supp.contains(w), "translation must preserve the support lattice");
        Self::from_fn(self.supp.clone(), self.per.clone(), self.prec, |x| self.eval(&x.add(w))).expect("same lattices")
    }

    /// Sup-norm distance, as f64.
    pub fn distance(&self, o: &LatticeFunction) -> f64 {
        let d = self.sub(o);
        d.table.values().map(|v| v.abs_f64()).fold(0.0, f64::max)
    }

    /// Fourier transform with the self-dual measure for the trace pairing:
    /// `Φ̂(y) = covol_ρ(M)⁻¹ Σ_{x ∈ L/M} Φ(x) e(Tr(xy))` on `M^∨ / L^∨`.
    pub fn fourier(&self, k: &TotallyRealField) -> LatticeFunction {
        let prec = self.prec;
        let supp = self.per.dual(k);
        let per = self.supp.dual(k);
        let covol = Float::with_val(prec, &self.per.covolume()) * Float::with_val(prec, Rational::from(k.poly_discriminant().abs_ref())).sqrt();
        let inv_covol = covol.recip();
        // Tr(xy) mod 1 = a·G·c / D for coordinates a of x in supp and c of y in supp^dual-side
        let gram: Vec<Vec<Rational>> = self
            .supp
            .basis_elements()
            .iter()
            .map(|b| supp.basis_elements().iter().map(|d| k.trace_pairing(b, d)).collect())
            .collect();
        let mut den = Integer::from(1);
        for q in gram.iter().flatten() {
            den.lcm_mut(q.denom());
        }
        let d = den.to_u64().expect("pairing denominator fits in 64 bits") as u128;
        let reduce = |z: Integer| -> u128 {
            let mut r = z % &den;
            if r < 0 {
                r += &den;
            }
            r.to_u128().expect("reduced")
        };
        let g: Vec<Vec<u128>> = gram
            .iter()
            .map(|row| row.iter().map(|q| reduce(Integer::from(q.numer() * (&den / Integer::from(q.denom()))))).collect())
            .collect();
        let rows: Vec<(Vec<u128>, &Cx)> = self
            .table
            .iter()
            .map(|(x, v)| {
                let a: Vec<u128> = self.supp.coordinates(x).expect("entries lie in supp").into_iter().map(reduce).collect();
                let r = (0..g[0].len()).map(|j| a.iter().zip(&g).map(|(ai, gi)| ai * gi[j] % d).sum::<u128>() % d).collect();
                (r, v)
            })
            .collect();
        let mut cache: HashMap<u128, Cx> = HashMap::new();
        Self::from_fn(supp.clone(), per, prec, |y| {
            let c: Vec<u128> = supp.coordinates(y).expect("transversal lies in supp").into_iter().map(reduce).collect();
            let mut acc = Cx::zero(prec);
            for (r, v) in &rows {
                let ph = r.iter().zip(&c).map(|(a, b)| a * b % d).sum::<u128>() % d;
                let e = cache.entry(ph).or_insert_with(|| Cx::e_rational(prec, &Rational::from((Integer::from(ph), den.clone()))));
                acc = acc.add(&v.mul(e));
            }
            acc.scale(&inv_covol)
        })
        .expect("dual lattices nest")
    }
}

/// gcd of a finite set of rationals: the positive generator of `Σ ℤ q_i`.
fn rational_gcd(qs: &[Rational]) -> Rational {
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for q in qs {
        num.gcd_mut(q.numer());
        den.lcm_mut(q.denom());
    }
    Rational::from((num, den))
}

fn check_simple(k: &TotallyRealField, cone: &Cone) -> Result<Vec<FieldElement>, AdelicError> {
    if cone.dim() != k.degree() || !k.is_linearly_independent(&cone.generators) {
        return Err(AdelicError::NotSimple);
    }
    Ok(k.dual_basis(&cone.generators)?)
}

/// Condition P1: no nonzero coset meets `V_j + M`, where `V_j` is the span
/// of the generators other than `u_j`.
pub fn p1_check(k: &TotallyRealField, phi: &LatticeFunction, cone: &Cone) -> Result<bool, AdelicError> {
    let dual = check_simple(k, cone)?;
    let mb = phi.per.basis_elements();
    for b in &dual {
        let g = rational_gcd(&mb.iter().map(|m| k.trace_pairing(b, m)).collect::<Vec<_>>());
        for (c, _) in phi.entries() {
            let q = Rational::from(k.trace_pairing(b, c) / &g);
            if q.is_integer() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Condition P2, computed as P1 for `(Φ̂, φ(Λ))`.
pub fn p2_check(k: &TotallyRealField, phi: &LatticeFunction, cone: &Cone) -> Result<bool, AdelicError> {
    let dual = check_simple(k, cone)?;
    p1_check(k, &phi.fourier(k), &Cone::new(dual))
}

/// Condition P2 from the definition: every progression sum
/// `Σ_i Φ(v + i·a_L u_j)` over one period `a_M u_j` vanishes.
pub fn p2_direct(k: &TotallyRealField, phi: &LatticeFunction, cone: &Cone) -> Result<bool, AdelicError> {
    check_simple(k, cone)?;
    let thr = threshold(phi.prec);
    let reps = phi.supp.quotient_reps(&phi.per)?;
    for u in &cone.generators {
        let step = line_step(&phi.supp, u);
        let period = line_step(&phi.per, u);
        let count = Rational::from(&period / &step);
        let count = count.numer().to_u64().expect("period is a multiple of the step");
        let du = u.scale(&step);
        for v in &reps {
            let mut acc = Cx::zero(phi.prec);
            let mut x = v.clone();
            for _ in 0..count {
                acc = acc.add(&phi.eval(&x));
                x = x.add(&du);
            }
            if acc.abs() > thr {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Positive generator `a` of `{x ∈ ℚ : x u ∈ L}`.
fn line_step(l: &QLattice, u: &FieldElement) -> Rational {
    let w = linalg::solve_left(l.basis(), &u.coords).expect("full-rank basis");
    rational_gcd(&w).recip()
}

/// Working precision of [`regular`]; the values are exact up to rounding.
const REGULARITY_BITS: u32 = 160;

/// P1 and P2 for every simple full-dimensional cone of the fan.
pub fn regular(k: &TotallyRealField, phi: &LatticeFunction, fan: &Fan) -> bool {
    let phi = &phi.with_precision(phi.prec.min(REGULARITY_BITS));
    let hat = phi.fourier(k);
    fan.terms().all(|(c, _)| {
        if c.dim() != k.degree() || !k.is_linearly_independent(&c.generators) {
            return true;
        }
        let dual = Cone::new(k.dual_basis(&c.generators).expect("simple"));
        p1_check(k, phi, c).unwrap_or(false) && p1_check(k, &hat, &dual).unwrap_or(false)
    })
}

/// Root of unity `ζ_order^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub order: u64,
    pub exp: u64,
}

impl RootOfUnity {
    pub fn new(order: u64, exp: i64) -> Self {
        assert!(order > 0);
        let e = exp.rem_euclid(order as i64) as u64;
        let g = gcd_u64(order, e);
        if e == 0 {
            return RootOfUnity { order: 1, exp: 0 };
        }
        RootOfUnity { order: order / g, exp: e / g }
    }

    pub fn one() -> Self {
        RootOfUnity { order: 1, exp: 0 }
    }

    pub fn mul(&self, o: &RootOfUnity) -> RootOfUnity {
        let l = self.order / gcd_u64(self.order, o.order) * o.order;
        RootOfUnity::new(l, (self.exp * (l / self.order) + o.exp * (l / o.order)) as i64)
    }

    pub fn inv(&self) -> RootOfUnity {
        RootOfUnity::new(self.order, -(self.exp as i64))
    }

    pub fn is_one(&self) -> bool {
        self.exp == 0
    }

    pub fn to_cx(&self, prec: u32) -> Cx {
        match (self.order, self.exp) {
            (1, _) => Cx::one(prec),
            (2, 1) => Cx::one(prec).neg(),
            (4, 1) => Cx::i(prec),
            (4, 3) => Cx::i(prec).neg(),
            _ => Cx::root_of_unity(prec, self.order, self.exp as i64),
        }
    }

    /// `"zeta_k^j"`, or `"1"` / `"-1"`.
    pub fn parse(s: &str) -> Result<Self, AdelicError> {
        let s = s.trim();
        match s {
            "1" => return Ok(RootOfUnity::one()),
            "-1" => return Ok(RootOfUnity::new(2, 1)),
            _ => {}
        }
        let bad = || AdelicError::BadValue(s.to_string());
        let rest = s.strip_prefix("zeta_").ok_or_else(bad)?;
        let (k, j) = rest.split_once('^').ok_or_else(bad)?;
        let k: u64 = k.parse().map_err(|_| bad())?;
        let j: i64 = j.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(RootOfUnity::new(k, j))
    }

    pub fn render(&self) -> String {
        format!("zeta_{}^{}", self.order, self.exp)
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// Unit group generators used for consistency checks: `−1` and, for
/// quadratic fields, the fundamental unit.
pub fn unit_generators(k: &TotallyRealField) -> Vec<FieldElement> {
    let mut u = vec![k.from_int(-1)];
    if k.degree() == 2 {
        if let Ok(d) = quadratic_units(k) {
            if let Some(e) = d.fundamental_unit {
                u.push(e);
            }
        }
    }
    u
}

/// Finite-order (or `h`-shifted) Hecke character given by its values on
/// `(O_K/𝔪)^×`, the sign pattern `σ`, and imaginary shifts `h`.
#[derive(Clone, Debug)]
pub struct HeckeCharacter {
    field: TotallyRealField,
    modulus: QLattice,
    table: BTreeMap<FieldElement, RootOfUnity>,
    sigma: Vec<u8>,
    h: Vec<f64>,
}

impl HeckeCharacter {
    /// Validate and build. `extra_units` adds unit generators for fields
    /// where they cannot be computed.
    pub fn new(
        k: &TotallyRealField,
        modulus: QLattice,
        values: Vec<(FieldElement, RootOfUnity)>,
        sigma: Vec<u8>,
        h: Vec<f64>,
        extra_units: &[FieldElement],
    ) -> Result<Self, AdelicError> {
        let n = k.degree();
        let bad = |m: &str| Err(AdelicError::InconsistentCharacter(m.to_string()));
        if sigma.len() != n || h.len() != n || sigma.iter().any(|&s| s > 1) {
            return bad("sigma and h must have one entry per embedding, sigma in {0,1}");
        }
        if !modulus.is_ideal(k) || !modulus.is_integral(k) {
            return bad("modulus must be an integral ideal");
        }
        let o = k.ring_of_integers();
        let coprime: Vec<FieldElement> = o
            .quotient_reps(&modulus)?
            .into_iter()
            .filter(|x| is_coprime(k, x, &modulus))
            .map(|x| modulus.reduce(&x))
            .collect();
        let mut table = BTreeMap::new();
        for (x, v) in values {
            if !o.contains(&x) {
                return bad("residue is not integral");
            }
            let r = modulus.reduce(&x);
            if !coprime.contains(&r) {
                return bad("residue is not coprime to the modulus");
            }
            if table.insert(r, v).is_some() {
                return bad("duplicate residue");
            }
        }
        if table.len() != coprime.len() {
            return bad("table must cover (O_K/m)^x");
        }
        let chi = HeckeCharacter { field: k.clone(), modulus, table, sigma, h };
        let keys: Vec<FieldElement> = chi.table.keys().cloned().collect();
        for a in &keys {
            for b in &keys {
                let ab = chi.finite(&k.mul(a, b)).expect("coprime product");
                if ab != chi.table[a].mul(&chi.table[b]) {
                    return bad("table is not multiplicative");
                }
            }
        }
        let mut units = unit_generators(k);
        units.extend(extra_units.iter().cloned());
        for u in &units {
            let t = chi.finite(u).ok_or(AdelicError::InconsistentCharacter("unit not coprime".into()))?;
            let prod = t.to_cx(128).mul(&chi.chi_inf(u, 128));
            if prod.sub(&Cx::one(128)).abs_f64() > 1e-20 {
                return Err(AdelicError::InconsistentCharacter(format!(
                    "finite_table(u)·chi_inf(u) != 1 for unit u = {}",
                    u
                )));
            }
        }
        Ok(chi)
    }

    pub fn trivial(k: &TotallyRealField) -> Self {
        let n = k.degree();
        HeckeCharacter::new(
            k,
            k.ring_of_integers().clone(),
            vec![(k.zero(), RootOfUnity::one())],
            vec![0; n],
            vec![0.0; n],
            &[],
        )
        .expect("trivial character is consistent")
    }

    pub fn field(&self) -> &TotallyRealField {
        &self.field
    }

    pub fn modulus(&self) -> &QLattice {
        &self.modulus
    }

    pub fn sigma(&self) -> &[u8] {
        &self.sigma
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn is_finite_order(&self) -> bool {
        self.h.iter().all(|&x| x == 0.0)
    }

    pub fn values(&self) -> impl Iterator<Item = (&FieldElement, &RootOfUnity)> {
        self.table.iter()
    }

    /// Finite table at `x ∈ O_K`; `None` if `x` is not coprime to 𝔪.
    pub fn finite(&self, x: &FieldElement) -> Option<RootOfUnity> {
        self.table.get(&self.modulus.reduce(x)).copied()
    }

    /// `χ_∞(x) = ∏ sgn(ρ_μ x)^{σ_μ} |ρ_μ x|^{−h_μ}`.
    pub fn chi_inf(&self, x: &FieldElement, prec: u32) -> Cx {
        let s = self.field.sign_character(x, &self.sigma);
        let mut r = Cx::from_f64(prec, s as f64, 0.0);
        if !self.is_finite_order() {
            for (mu, eta) in self.h.iter().enumerate() {
                if *eta != 0.0 {
                    let a = self.field.embed_float(x, mu, prec).abs().ln();
                    let ph = Cx::new(Float::new(prec), -a * Float::with_val(prec, *eta));
                    r = r.mul(&ph.exp());
                }
            }
        }
        r
    }

    /// `χ_I((x))` for integral `x`; zero when `(x)` is not coprime to 𝔪.
    pub fn chi_ideal_integral(&self, x: &FieldElement, prec: u32) -> Cx {
        match self.finite(x) {
            None => Cx::zero(prec),
            Some(t) => t.inv().to_cx(prec).mul(&self.chi_inf(x, prec).inv()),
        }
    }

    /// `χ_I((x))` for `x ∈ K^×` with `(x)` coprime to 𝔪, via `x = y/d`.
    pub fn chi_ideal(&self, x: &FieldElement, prec: u32) -> Cx {
        let d = x.coords.iter().fold(Integer::from(1), |acc, c| acc.lcm(c.denom()));
        let mut d = d;
        let k = &self.field;
        while !k.ring_of_integers().contains(&k.mul(&k.from_rational(Rational::from(&d)), x)) {
            d *= 2;
        }
        let df = k.from_rational(Rational::from(&d));
        let y = k.mul(&df, x);
        self.chi_ideal_integral(&y, prec).div(&self.chi_ideal_integral(&df, prec))
    }

    pub fn inverse(&self) -> HeckeCharacter {
        HeckeCharacter {
            field: self.field.clone(),
            modulus: self.modulus.clone(),
            table: self.table.iter().map(|(k, v)| (k.clone(), v.inv())).collect(),
            sigma: self.sigma.clone(),
            h: self.h.iter().map(|x| -x).collect(),
        }
    }

    pub fn to_json(&self) -> CharacterJson {
        CharacterJson {
            modulus: self.modulus.clone(),
            values: self
                .table
                .iter()
                .map(|(r, v)| CharacterValueJson { residue: r.clone(), value: v.render() })
                .collect(),
            sigma: self.sigma.clone(),
            h: self.h.clone(),
        }
    }

    pub fn from_json(k: &TotallyRealField, j: &CharacterJson) -> Result<Self, AdelicError> {
        let values = j
            .values
            .iter()
            .map(|v| Ok((v.residue.clone(), RootOfUnity::parse(&v.value)?)))
            .collect::<Result<Vec<_>, AdelicError>>()?;
        HeckeCharacter::new(k, j.modulus.clone(), values, j.sigma.clone(), j.h.clone(), &[])
    }
}

fn is_coprime(k: &TotallyRealField, x: &FieldElement, m: &QLattice) -> bool {
    if x.is_zero() {
        return m == k.ring_of_integers();
    }
    let px = QLattice::principal(k, x).expect("nonzero");
    k.ring_of_integers().index(&px.sum(m)).map_or(false, |i| i == 1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterValueJson {
    pub residue: FieldElement,
    pub value: String,
}

/// `{modulus, values: [{residue, value: "zeta_k^j"}], sigma, h}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterJson {
    pub modulus: QLattice,
    pub values: Vec<CharacterValueJson>,
    pub sigma: Vec<u8>,
    #[serde(default)]
    pub h: Vec<f64>,
}

/// Principal fractional ideal with a chosen generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalIdeal {
    pub generator: FieldElement,
    pub lattice: QLattice,
}

impl PrincipalIdeal {
    pub fn new(k: &TotallyRealField, generator: FieldElement) -> Result<Self, AdelicError> {
        let lattice = QLattice::principal(k, &generator)?;
        Ok(PrincipalIdeal { generator, lattice })
    }

    /// Find a generator for an ideal given as a lattice.
    pub fn from_lattice(k: &TotallyRealField, l: &QLattice) -> Result<Self, AdelicError> {
        let g = l.principal_generator(k, 60).ok_or(AdelicError::NotPrincipal)?;
        Ok(PrincipalIdeal { generator: g, lattice: l.clone() })
    }

    pub fn unit(k: &TotallyRealField) -> Self {
        PrincipalIdeal { generator: k.one(), lattice: k.ring_of_integers().clone() }
    }

    pub fn mul(&self, k: &TotallyRealField, o: &PrincipalIdeal) -> PrincipalIdeal {
        PrincipalIdeal::new(k, k.mul(&self.generator, &o.generator)).expect("nonzero")
    }

    pub fn inverse(&self, k: &TotallyRealField) -> PrincipalIdeal {
        PrincipalIdeal::new(k, k.inv(&self.generator).expect("nonzero")).expect("nonzero")
    }

    pub fn norm(&self, k: &TotallyRealField) -> Rational {
        self.lattice.ideal_norm(k)
    }

    /// The different 𝔡 of K (class number 1 assumed).
    pub fn different(k: &TotallyRealField) -> Result<Self, AdelicError> {
        let d = k.ring_of_integers().dual(k).ideal_inverse(k)?;
        Self::from_lattice(k, &d)
    }
}

/// Element `Σ n_j 𝔟_j` of the group ring of principal ideals.
#[derive(Clone, Debug)]
pub struct GroupRingElement {
    pub terms: Vec<(Cx, PrincipalIdeal)>,
}

impl GroupRingElement {
    pub fn unit(k: &TotallyRealField, prec: u32) -> Self {
        GroupRingElement { terms: vec![(Cx::one(prec), PrincipalIdeal::unit(k))] }
    }

    pub fn ideal(b: PrincipalIdeal, prec: u32) -> Self {
        GroupRingElement { terms: vec![(Cx::one(prec), b)] }
    }

    /// `1 + c·𝔞`.
    pub fn one_plus(k: &TotallyRealField, c: Cx, a: PrincipalIdeal) -> Self {
        let p = c.prec();
        let mut g = GroupRingElement::unit(k, p);
        g.push(c, a);
        g
    }

    fn push(&mut self, c: Cx, a: PrincipalIdeal) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.1.lattice == a.lattice) {
            t.0 = t.0.add(&c);
        } else {
            self.terms.push((c, a));
        }
    }

    pub fn mul(&self, k: &TotallyRealField, o: &GroupRingElement) -> GroupRingElement {
        let mut r = GroupRingElement { terms: vec![] };
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.push(a.mul(b), x.mul(k, y));
            }
        }
        r
    }

    pub fn mul_ideal(&self, k: &TotallyRealField, b: &PrincipalIdeal) -> GroupRingElement {
        GroupRingElement { terms: self.terms.iter().map(|(c, x)| (c.clone(), x.mul(k, b))).collect() }
    }

    /// `γ̂ = Σ n_j N(𝔟_j) 𝔟_j⁻¹`.
    pub fn hat(&self, k: &TotallyRealField) -> GroupRingElement {
        GroupRingElement {
            terms: self.terms.iter().map(|(c, x)| (c.scale_q(&x.norm(k)), x.inverse(k))).collect(),
        }
    }

    /// `c(z, s) = Σ n_j N(𝔟_j)^s`.
    pub fn c_factor(&self, k: &TotallyRealField, s: &Cx) -> Cx {
        let p = s.prec();
        let mut acc = Cx::zero(p);
        for (c, x) in &self.terms {
            let nb = Float::with_val(p, &x.norm(k));
            acc = acc.add(&c.mul(&Cx::pow_real_base(&nb, s)));
        }
        acc
    }
}

/// `Φ_{χ,𝔟}`: supported on `𝔟⁻¹`, periodic modulo `𝔪𝔟⁻¹`, value
/// `χ_∞(x)χ_I(x𝔟) = T(xb)⁻¹ χ_∞(b)⁻¹` when `x𝔟` is coprime to 𝔪.
pub fn standard_function(chi: &HeckeCharacter, b: &PrincipalIdeal, prec: u32) -> LatticeFunction {
    let k = &chi.field;
    let binv = b.inverse(k);
    let supp = binv.lattice.clone();
    let per = chi.modulus.ideal_mul(k, &binv.lattice);
    let cinf = chi.chi_inf(&b.generator, prec).inv();
    LatticeFunction::from_fn(supp, per, prec, |x| {
        let y = k.mul(x, &b.generator);
        match chi.finite(&y) {
            None => Cx::zero(prec),
            Some(t) => t.inv().to_cx(prec).mul(&cinf),
        }
    })
    .expect("𝔪𝔟⁻¹ ⊆ 𝔟⁻¹")
}

/// `Φ_{χ,γ} = Σ_j n_j Φ_{χ,𝔟_j}`.
pub fn twisted_function(chi: &HeckeCharacter, gamma: &GroupRingElement, prec: u32) -> LatticeFunction {
    let fs: Vec<LatticeFunction> = gamma.terms.iter().map(|(_, b)| standard_function(chi, b, prec)).collect();
    let terms: Vec<(Cx, &LatticeFunction)> = gamma.terms.iter().zip(&fs).map(|((c, _), f)| (c.with_prec(prec), f)).collect();
    LatticeFunction::combine(&terms)
}

/// The ideal 𝔪𝔡 with a generator.
pub fn md_ideal(chi: &HeckeCharacter) -> Result<PrincipalIdeal, AdelicError> {
    let k = &chi.field;
    let m = PrincipalIdeal::from_lattice(k, &chi.modulus)?;
    Ok(m.mul(k, &PrincipalIdeal::different(k)?))
}

/// `k(χ)` as the ratio `Φ̂_{χ,O}(y) / Φ_{χ⁻¹,𝔪𝔡}(y)`, checked constant in `y`.
pub fn gauss_constant(chi: &HeckeCharacter, prec: u32) -> Result<Cx, AdelicError> {
    let k = &chi.field;
    let lhs = standard_function(chi, &PrincipalIdeal::unit(k), prec).fourier(k);
    let rhs = standard_function(&chi.inverse(), &md_ideal(chi)?, prec);
    let mut ratio: Option<Cx> = None;
    let mut spread = 0.0f64;
    for (y, d) in rhs.entries() {
        let r = lhs.eval(y).div(d);
        match &ratio {
            None => ratio = Some(r),
            Some(r0) => spread = spread.max(r.sub(r0).abs_f64()),
        }
    }
    let r = ratio.ok_or(AdelicError::NoNonzeroPoint)?;
    if spread > 1e-30 {
        return Err(AdelicError::GaussNotConstant(spread));
    }
    Ok(r)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    residue: FieldElement,
    value: [String; 2],
}

/// `{supp, per, bits, table: [{residue, value: [re, im]}]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFunctionJson {
    supp: QLattice,
    per: QLattice,
    bits: u32,
    table: Vec<EntryJson>,
}

impl LatticeFunction {
    pub fn to_json(&self) -> LatticeFunctionJson {
        let digits = crate::mp::digits_for_bits(self.prec);
        LatticeFunctionJson {
            supp: self.supp.clone(),
            per: self.per.clone(),
            bits: self.prec,
            table: self
                .table
                .iter()
                .map(|(r, v)| {
                    let (a, b) = v.to_decimal(digits);
                    EntryJson { residue: r.clone(), value: [a, b] }
                })
                .collect(),
        }
    }

    pub fn from_json(j: &LatticeFunctionJson) -> Result<Self, AdelicError> {
        let prec = j.bits.max(VALUE_BITS);
        let mut entries = Vec::with_capacity(j.table.len());
        for e in &j.table {
            let re = Float::parse(&e.value[0]).map_err(|_| AdelicError::BadValue(e.value[0].clone()))?;
            let im = Float::parse(&e.value[1]).map_err(|_| AdelicError::BadValue(e.value[1].clone()))?;
            entries.push((e.residue.clone(), Cx::new(Float::with_val(prec, re), Float::with_val(prec, im))));
        }
        Self::new(j.supp.clone(), j.per.clone(), entries, prec)
    }
}
