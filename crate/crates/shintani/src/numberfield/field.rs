use super::linalg::{self, RatMatrix};
use super::poly::{self, Isolation, RatPoly};
use super::FieldError;
use rug::{float::Round, Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

/// Element of `K` in power-basis coordinates `c_0 + c_1 θ + … + c_{n-1} θ^{n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    pub coords: Vec<Rational>,
}

impl FieldElement {
    pub fn new(coords: Vec<Rational>) -> Self {
        FieldElement { coords }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        FieldElement { coords: c.iter().map(|&x| Rational::from(x)).collect() }
    }

    pub fn from_ratios(c: &[(i64, i64)]) -> Self {
        FieldElement { coords: c.iter().map(|&(p, q)| Rational::from((p, q))).collect() }
    }

    pub fn zero(n: usize) -> Self {
        FieldElement { coords: vec![Rational::new(); n] }
    }

    pub fn rational(n: usize, q: Rational) -> Self {
        let mut coords = vec![Rational::new(); n];
        coords[0] = q;
        FieldElement { coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.cmp0() == Ordering::Equal)
    }

    pub fn degree(&self) -> usize {
        self.coords.len()
    }

    pub fn add(&self, o: &FieldElement) -> FieldElement {
        FieldElement::new(self.coords.iter().zip(&o.coords).map(|(a, b)| Rational::from(a + b)).collect())
    }

    pub fn sub(&self, o: &FieldElement) -> FieldElement {
        FieldElement::new(self.coords.iter().zip(&o.coords).map(|(a, b)| Rational::from(a - b)).collect())
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement::new(self.coords.iter().map(|a| Rational::from(-a)).collect())
    }

    pub fn scale(&self, q: &Rational) -> FieldElement {
        FieldElement::new(self.coords.iter().map(|a| Rational::from(a * q)).collect())
    }

    /// The rational value when the element lies in `ℚ`.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coords[1..].iter().all(|c| c.cmp0() == Ordering::Equal) {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    /// Lexicographic positivity: first nonzero coordinate is positive.
    pub fn is_lex_positive(&self) -> bool {
        self.coords
            .iter()
            .find(|c| c.cmp0() != Ordering::Equal)
            .map_or(false, |c| c.cmp0() == Ordering::Greater)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.to_string()).collect()
    }

    pub fn parse(strings: &[String]) -> Result<Self, FieldError> {
        let coords = strings
            .iter()
            .map(|s| {
                Rational::parse(s.trim())
                    .map(Rational::from)
                    .map_err(|_| FieldError::Parse(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldElement { coords })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coords.iter().enumerate() {
            if c.cmp0() == Ordering::Equal {
                continue;
            }
            let neg = c.cmp0() == Ordering::Less;
            let a = Rational::from(c.abs_ref());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", a)?,
                _ => {
                    if a != 1 {
                        write!(f, "{}*", a)?;
                    }
                    if k == 1 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "t^{}", k)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// JSON form of an element: array of `"p/q"` strings.
impl Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        FieldElement::parse(&v).map_err(serde::de::Error::custom)
    }
}

/// Closed rational interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn point(q: Rational) -> Self {
        RatInterval { lo: q.clone(), hi: q }
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    fn add_scalar(&self, q: &Rational) -> Self {
        RatInterval { lo: Rational::from(&self.lo + q), hi: Rational::from(&self.hi + q) }
    }

    fn mul(&self, o: &RatInterval) -> Self {
        let c = [
            Rational::from(&self.lo * &o.lo),
            Rational::from(&self.lo * &o.hi),
            Rational::from(&self.hi * &o.lo),
            Rational::from(&self.hi * &o.hi),
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        RatInterval { lo, hi }
    }

    fn add(&self, o: &RatInterval) -> Self {
        RatInterval { lo: Rational::from(&self.lo + &o.lo), hi: Rational::from(&self.hi + &o.hi) }
    }
}

/// Certified enclosure of a real embedding value.
#[derive(Clone, Debug)]
pub struct EmbeddingInterval {
    pub lo: Float,
    pub hi: Float,
}

impl EmbeddingInterval {
    pub fn mid(&self) -> Float {
        let p = self.lo.prec().max(self.hi.prec());
        let mut m = Float::with_val(p + 1, &self.lo + &self.hi);
        m /= 2u32;
        m
    }

    pub fn width(&self) -> Float {
        Float::with_val(self.lo.prec(), &self.hi - &self.lo)
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

struct Inner {
    min_poly: Vec<Integer>,
    rpoly: RatPoly,
    n: usize,
    roots: RwLock<Vec<RatInterval>>,
    power_sums: Vec<Rational>,
    reduce_table: Vec<Vec<Rational>>,
    trace_gram: RatMatrix,
    integers: OnceLock<super::QLattice>,
}

/// A totally real number field `ℚ[x]/(f)` with its ordered real embeddings.
///
/// Embeddings are indexed by increasing real root of `f`.
#[derive(Clone)]
pub struct TotallyRealField {
    inner: Arc<Inner>,
}

impl fmt::Debug for TotallyRealField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TotallyRealField({:?})", self.inner.min_poly)
    }
}

impl PartialEq for TotallyRealField {
    fn eq(&self, o: &Self) -> bool {
        self.inner.min_poly == o.inner.min_poly
    }
}

impl TotallyRealField {
    /// Build the field from the coefficients `[c_0, …, c_{n-1}, 1]` of a monic
    /// irreducible polynomial with `n` real roots.
    pub fn new(min_poly: &[Integer]) -> Result<Self, FieldError> {
        let n = min_poly.len().checked_sub(1).ok_or(FieldError::DegreeZero)?;
        if n == 0 {
            return Err(FieldError::DegreeZero);
        }
        if min_poly[n] != 1 {
            return Err(FieldError::NotMonic);
        }
        let rpoly = RatPoly::from_integers(min_poly);
        let roots = if n == 1 {
            vec![RatInterval::point(Rational::from(-&min_poly[0]))]
        } else {
            let g = rpoly.gcd(&rpoly.derivative());
            if g.degree().unwrap_or(0) > 0 {
                return Err(FieldError::NotIrreducible);
            }
            let iv = match poly::isolate_real_roots(&rpoly) {
                Isolation::RationalRoot(_) => return Err(FieldError::NotIrreducible),
                Isolation::Intervals(v) => v,
            };
            if iv.len() < n {
                return Err(FieldError::NotTotallyReal { real_roots: iv.len(), degree: n });
            }
            iv.into_iter().map(|(lo, hi)| RatInterval { lo, hi }).collect()
        };

        let a: Vec<Rational> = min_poly.iter().map(|c| Rational::from(c.clone())).collect();
        let mut power_sums = vec![Rational::from(n as u32)];
        for k in 1..=2 * n {
            let mut s = Rational::new();
            for i in 1..=k.min(n) {
                let coef = &a[n - i];
                if i < k {
                    s += Rational::from(coef * &power_sums[k - i]);
                } else {
                    s += Rational::from(coef * Integer::from(k));
                }
            }
            power_sums.push(-s);
        }

        let mut reduce_table: Vec<Vec<Rational>> = Vec::with_capacity(2 * n);
        for k in 0..2 * n {
            let mut v = vec![Rational::new(); n];
            if k < n {
                v[k] = Rational::from(1);
            } else {
                let prev = &reduce_table[k - 1];
                // θ·prev, then replace θ^n by -Σ a_i θ^i
                let top = prev[n - 1].clone();
                for i in (1..n).rev() {
                    v[i] = prev[i - 1].clone();
                }
                v[0] = Rational::new();
                for i in 0..n {
                    v[i] -= Rational::from(&top * &a[i]);
                }
            }
            reduce_table.push(v);
        }

        let trace_gram = (0..n)
            .map(|i| (0..n).map(|j| power_sums[i + j].clone()).collect())
            .collect();

        let field = TotallyRealField {
            inner: Arc::new(Inner {
                min_poly: min_poly.to_vec(),
                rpoly,
                n,
                roots: RwLock::new(roots),
                power_sums,
                reduce_table,
                trace_gram,
                integers: OnceLock::new(),
            }),
        };
        if n >= 2 && !field.is_irreducible() {
            return Err(FieldError::NotIrreducible);
        }
        Ok(field)
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self, FieldError> {
        let c: Vec<Integer> = coeffs.iter().map(|&x| Integer::from(x)).collect();
        Self::new(&c)
    }

    /// `ℚ` as a degree-one field.
    pub fn rationals() -> Self {
        Self::from_i64(&[0, 1]).expect("x is irreducible")
    }

    pub fn degree(&self) -> usize {
        self.inner.n
    }

    pub fn min_poly(&self) -> &[Integer] {
        &self.inner.min_poly
    }

    pub fn min_poly_rat(&self) -> &RatPoly {
        &self.inner.rpoly
    }

    /// Snapshot of the current isolating intervals.
    pub fn root_isolations(&self) -> Vec<RatInterval> {
        self.inner.roots.read().expect("root cache poisoned").clone()
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.inner.n)
    }

    pub fn one(&self) -> FieldElement {
        self.from_rational(Rational::from(1))
    }

    pub fn from_int(&self, k: i64) -> FieldElement {
        self.from_rational(Rational::from(k))
    }

    pub fn from_rational(&self, q: Rational) -> FieldElement {
        FieldElement::rational(self.inner.n, q)
    }

    /// The generator `θ`.
    pub fn theta(&self) -> FieldElement {
        let n = self.inner.n;
        if n == 1 {
            return FieldElement::new(vec![Rational::from(-&self.inner.min_poly[0])]);
        }
        let mut c = vec![Rational::new(); n];
        c[1] = Rational::from(1);
        FieldElement::new(c)
    }

    pub fn element(&self, coords: Vec<Rational>) -> Result<FieldElement, FieldError> {
        if coords.len() != self.inner.n {
            return Err(FieldError::DimensionMismatch { expected: self.inner.n, got: coords.len() });
        }
        Ok(FieldElement::new(coords))
    }

    pub fn elem_i(&self, c: &[i64]) -> FieldElement {
        assert_eq!(c.len(), self.inner.n, "coordinate count must equal the degree");
        FieldElement::from_ints(c)
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let n = self.inner.n;
        let mut conv = vec![Rational::new(); 2 * n - 1];
        for (i, a) in x.coords.iter().enumerate() {
            if a.cmp0() == Ordering::Equal {
                continue;
            }
            for (j, b) in y.coords.iter().enumerate() {
                if b.cmp0() != Ordering::Equal {
                    conv[i + j] += Rational::from(a * b);
                }
            }
        }
        let mut out: Vec<Rational> = conv[..n].to_vec();
        for (k, c) in conv.iter().enumerate().skip(n) {
            if c.cmp0() == Ordering::Equal {
                continue;
            }
            for (i, t) in self.inner.reduce_table[k].iter().enumerate() {
                if t.cmp0() != Ordering::Equal {
                    out[i] += Rational::from(c * t);
                }
            }
        }
        FieldElement::new(out)
    }

    pub fn pow(&self, x: &FieldElement, e: i64) -> Result<FieldElement, FieldError> {
        let mut base = if e < 0 { self.inv(x)? } else { x.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = self.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            k >>= 1;
        }
        Ok(acc)
    }

    /// Matrix of multiplication by `x`: row `i` holds the coordinates of `x θ^i`.
    pub fn mult_matrix(&self, x: &FieldElement) -> RatMatrix {
        let n = self.inner.n;
        let mut rows = Vec::with_capacity(n);
        let th = self.theta();
        let mut cur = x.clone();
        for i in 0..n {
            rows.push(cur.coords.clone());
            if i + 1 < n {
                cur = self.mul(&cur, &th);
            }
        }
        rows
    }

    pub fn inv(&self, x: &FieldElement) -> Result<FieldElement, FieldError> {
        if x.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let m = self.mult_matrix(x);
        // y·M = 1 where y are coordinates of x^{-1} in the power basis
        let one = self.one().coords;
        let y = linalg::solve_left(&m, &one).ok_or(FieldError::DivisionByZero)?;
        Ok(FieldElement::new(y))
    }

    pub fn div(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    pub fn trace(&self, x: &FieldElement) -> Rational {
        let mut t = Rational::new();
        for (c, p) in x.coords.iter().zip(&self.inner.power_sums) {
            t += Rational::from(c * p);
        }
        t
    }

    pub fn norm(&self, x: &FieldElement) -> Rational {
        linalg::det(&self.mult_matrix(x))
    }

    pub fn trace_norm(&self, x: &FieldElement) -> (Rational, Rational) {
        (self.trace(x), self.norm(x))
    }

    /// `Tr(θ^{i+j})`.
    pub fn trace_gram(&self) -> &RatMatrix {
        &self.inner.trace_gram
    }

    /// `Tr(xy)` exactly.
    pub fn trace_pairing(&self, x: &FieldElement, y: &FieldElement) -> Rational {
        self.trace(&self.mul(x, y))
    }

    /// Characteristic polynomial of multiplication by `x`, monic, increasing degree.
    pub fn char_poly(&self, x: &FieldElement) -> Vec<Rational> {
        let n = self.inner.n;
        let mut s = Vec::with_capacity(n + 1);
        s.push(Rational::from(n as u32));
        let mut pw = self.one();
        for _ in 1..=n {
            pw = self.mul(&pw, x);
            s.push(self.trace(&pw));
        }
        // Newton: k e_k = Σ_{i=1}^k (-1)^{i-1} e_{k-i} s_i
        let mut e = vec![Rational::from(1)];
        for k in 1..=n {
            let mut acc = Rational::new();
            for i in 1..=k {
                let t = Rational::from(&e[k - i] * &s[i]);
                if i % 2 == 1 {
                    acc += t;
                } else {
                    acc -= t;
                }
            }
            e.push(acc / Integer::from(k));
        }
        // char poly = Σ (-1)^k e_k x^{n-k}
        let mut c = vec![Rational::new(); n + 1];
        for (k, ek) in e.iter().enumerate() {
            c[n - k] = if k % 2 == 0 { ek.clone() } else { Rational::from(-ek) };
        }
        c
    }

    pub fn is_integral(&self, x: &FieldElement) -> bool {
        self.char_poly(x).iter().all(|c| c.is_integer())
    }

    /// Dual basis with respect to the trace form: `Tr(a_i b_j) = δ_ij`.
    pub fn dual_basis(&self, a: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        let n = self.inner.n;
        if a.len() != n {
            return Err(FieldError::LinearlyDependent);
        }
        let amat: RatMatrix = a.iter().map(|x| x.coords.clone()).collect();
        let at = linalg::mat_mul(&amat, &self.inner.trace_gram);
        let inv = linalg::inverse(&at).ok_or(FieldError::LinearlyDependent)?;
        let b = linalg::transpose(&inv);
        Ok(b.into_iter().map(FieldElement::new).collect())
    }

    /// Orientation sign `r(u_1..u_n)`: sign of `det[ρ_μ(u_i)]`.
    ///
    /// The embedding matrix factors as `U·V` with `V = [ρ_μ(θ^k)]` a Vandermonde
    /// matrix in increasing roots, so `det V > 0` and the sign is that of `det U`.
    pub fn orientation(&self, u: &[FieldElement]) -> i32 {
        if u.len() != self.inner.n {
            return 0;
        }
        let m: RatMatrix = u.iter().map(|x| x.coords.clone()).collect();
        match linalg::det(&m).cmp0() {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => 0,
        }
    }

    pub fn is_linearly_independent(&self, u: &[FieldElement]) -> bool {
        let m: RatMatrix = u.iter().map(|x| x.coords.clone()).collect();
        linalg::rank(&m) == u.len()
    }

    fn refine_root(&self, mu: usize, target: &Rational) {
        {
            let roots = self.inner.roots.read().expect("root cache poisoned");
            if roots[mu].width() <= *target {
                return;
            }
        }
        let mut cur = self.inner.roots.read().expect("root cache poisoned")[mu].clone();
        let p = &self.inner.rpoly;
        let dp = p.derivative();
        let slo = p.sign_at(&cur.lo);
        while cur.width() > *target {
            // Newton candidate from the midpoint, certified by a sign change.
            let bits = (target.denom().significant_bits() + 64).max(cur.width().denom().significant_bits() * 2 + 64);
            let mut x = Float::with_val(bits, Rational::from(&cur.lo + &cur.hi) / 2u32);
            let pf: Vec<Float> = p.coeffs.iter().map(|c| Float::with_val(bits, c)).collect();
            let dpf: Vec<Float> = dp.coeffs.iter().map(|c| Float::with_val(bits, c)).collect();
            for _ in 0..8 {
                let mut v = Float::with_val(bits, 0);
                for c in pf.iter().rev() {
                    v *= &x;
                    v += c;
                }
                let mut d = Float::with_val(bits, 0);
                for c in dpf.iter().rev() {
                    d *= &x;
                    d += c;
                }
                if d.is_zero() {
                    break;
                }
                x -= v / d;
            }
            let mut accepted = false;
            if let Some(c) = x.to_rational() {
                let delta = Rational::from(target / 4u32);
                let a = Rational::from(&c - &delta);
                let b = Rational::from(&c + &delta);
                if a > cur.lo && b < cur.hi {
                    let sa = p.sign_at(&a);
                    let sb = p.sign_at(&b);
                    if sa != Ordering::Equal && sb != Ordering::Equal && sa != sb {
                        cur = RatInterval { lo: a, hi: b };
                        accepted = true;
                    }
                }
            }
            if !accepted {
                for _ in 0..16 {
                    let mid = Rational::from(&cur.lo + &cur.hi) / 2u32;
                    let sm = p.sign_at(&mid);
                    if sm == Ordering::Equal {
                        cur = RatInterval::point(mid);
                        break;
                    }
                    if sm == slo {
                        cur.lo = mid;
                    } else {
                        cur.hi = mid;
                    }
                }
            }
        }
        let mut roots = self.inner.roots.write().expect("root cache poisoned");
        if cur.width() < roots[mu].width() {
            roots[mu] = cur;
        }
    }

    fn root_interval(&self, mu: usize, target: &Rational) -> RatInterval {
        self.refine_root(mu, target);
        self.inner.roots.read().expect("root cache poisoned")[mu].clone()
    }

    /// Exact rational enclosure of `ρ_μ(x)` of width at most `width`.
    pub fn embed_rational(&self, x: &FieldElement, mu: usize, width: &Rational) -> RatInterval {
        let n = self.inner.n;
        if let Some(q) = x.as_rational() {
            return RatInterval::point(q.clone());
        }
        let mut target = Rational::from(width / 4u32);
        loop {
            let r = self.root_interval(mu, &target);
            let mut acc = RatInterval::point(x.coords[n - 1].clone());
            for c in x.coords[..n - 1].iter().rev() {
                acc = acc.mul(&r).add_scalar(c);
            }
            if acc.width() <= *width {
                return acc;
            }
            target /= 16u32;
        }
    }

    /// Certified interval of width at most `2^{-bits}` containing `ρ_μ(x)`, 0-based `μ`.
    pub fn embed(&self, x: &FieldElement, mu: usize, bits: u32) -> EmbeddingInterval {
        let w = Rational::from(Rational::from(1) >> (bits + 1));
        let iv = self.embed_rational(x, mu, &w);
        let mag = iv.hi.clone().abs().max(iv.lo.clone().abs());
        let extra = mag.numer().significant_bits().saturating_sub(mag.denom().significant_bits()) + 4;
        let prec = bits + extra + 4;
        let lo = Float::with_val_round(prec, &iv.lo, Round::Down).0;
        let hi = Float::with_val_round(prec, &iv.hi, Round::Up).0;
        EmbeddingInterval { lo, hi }
    }

    /// `ρ_μ(x)` rounded to `prec` bits.
    pub fn embed_float(&self, x: &FieldElement, mu: usize, prec: u32) -> Float {
        let iv = self.embed(x, mu, prec + 8);
        let mut m = iv.mid();
        m.set_prec(prec);
        m
    }

    pub fn embed_f64(&self, x: &FieldElement) -> Vec<f64> {
        (0..self.inner.n).map(|mu| self.embed_float(x, mu, 64).to_f64()).collect()
    }

    pub fn embed_all_float(&self, x: &FieldElement, prec: u32) -> Vec<Float> {
        (0..self.inner.n).map(|mu| self.embed_float(x, mu, prec)).collect()
    }

    /// Sign of `ρ_μ(x)`, certified.
    pub fn embed_sign(&self, x: &FieldElement, mu: usize) -> Ordering {
        if x.is_zero() {
            return Ordering::Equal;
        }
        let mut bits = 32;
        loop {
            let iv = self.embed(x, mu, bits);
            if iv.lo.cmp0() == Some(Ordering::Greater) {
                return Ordering::Greater;
            }
            if iv.hi.cmp0() == Some(Ordering::Less) {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    pub fn is_totally_positive(&self, x: &FieldElement) -> bool {
        (0..self.inner.n).all(|mu| self.embed_sign(x, mu) == Ordering::Greater)
    }

    /// `∏_μ sign(ρ_μ(x))^{σ_μ}`.
    pub fn sign_character(&self, x: &FieldElement, sigma: &[u8]) -> i32 {
        let mut s = 1;
        for (mu, &e) in sigma.iter().enumerate() {
            if e == 1 && self.embed_sign(x, mu) == Ordering::Less {
                s = -s;
            }
        }
        s
    }

    /// Irreducibility over `ℚ` by testing every candidate factor built from
    /// subsets of certified roots (its coefficients must be integers).
    fn is_irreducible(&self) -> bool {
        let n = self.inner.n;
        if n <= 3 {
            return !poly::has_rational_root(&self.inner.rpoly);
        }
        for d in 1..=n / 2 {
            let subsets = combinations(n, d);
            for sub in subsets {
                if self.subset_factor(&sub).is_some() {
                    return false;
                }
            }
        }
        true
    }

    fn subset_factor(&self, sub: &[usize]) -> Option<RatPoly> {
        let mut width = Rational::from((1, 1 << 20));
        loop {
            let rs: Vec<RatInterval> = sub.iter().map(|&mu| self.root_interval(mu, &width)).collect();
            // coefficients of ∏ (x - r)
            let mut coef = vec![RatInterval::point(Rational::from(1))];
            for r in &rs {
                let neg = RatInterval { lo: Rational::from(-&r.hi), hi: Rational::from(-&r.lo) };
                let mut next = vec![RatInterval::point(Rational::new()); coef.len() + 1];
                for (i, c) in coef.iter().enumerate() {
                    next[i + 1] = next[i + 1].add(c);
                    next[i] = next[i].add(&c.mul(&neg));
                }
                coef = next;
            }
            let mut ints = Vec::new();
            let mut undecided = false;
            for c in &coef {
                let lo_c = Integer::from(c.lo.ceil_ref());
                let hi_f = Integer::from(c.hi.floor_ref());
                if lo_c > hi_f {
                    return None;
                }
                if lo_c == hi_f {
                    ints.push(lo_c);
                } else {
                    undecided = true;
                    break;
                }
            }
            if !undecided {
                let cand = RatPoly::from_integers(&ints);
                let (_, r) = self.inner.rpoly.div_rem(&cand);
                return if r.is_zero() { Some(cand) } else { None };
            }
            width /= 1u32 << 16;
        }
    }

    /// The ring of integers as a lattice in power-basis coordinates.
    pub fn ring_of_integers(&self) -> &super::QLattice {
        self.inner.integers.get_or_init(|| super::order::maximal_order(self))
    }

    /// Install a known ring of integers (used when the caller supplies it).
    pub fn set_ring_of_integers(&self, l: super::QLattice) -> bool {
        self.inner.integers.set(l).is_ok()
    }

    /// Discriminant of the power basis, `det[Tr(θ^{i+j})]`.
    pub fn poly_discriminant(&self) -> Rational {
        linalg::det(&self.inner.trace_gram)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
