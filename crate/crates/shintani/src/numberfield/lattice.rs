use super::field::{FieldElement, TotallyRealField};
use super::linalg::{self, RatMatrix};
use super::FieldError;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Full-rank ℤ-lattice in `K ≅ ℚ^n`, stored as a row-style Hermite form:
/// upper triangular, positive pivots, entries above a pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QLattice {
    basis: Vec<Vec<Rational>>,
}

fn common_denominator(rows: &[Vec<Rational>]) -> Integer {
    let mut d = Integer::from(1);
    for r in rows {
        for c in r {
            d.lcm_mut(c.denom());
        }
    }
    d
}

/// Integer row HNF of the row span; the rank must equal the column count.
fn integer_hnf(mut rows: Vec<Vec<Integer>>, n: usize) -> Option<Vec<Vec<Integer>>> {
    let mut out: Vec<Vec<Integer>> = Vec::with_capacity(n);
    for c in 0..n {
        // Fold all rows with a nonzero entry in column c into one pivot row.
        let mut pivot: Option<Vec<Integer>> = None;
        let mut rest = Vec::with_capacity(rows.len());
        for r in rows.into_iter() {
            if r[c].cmp0() == Ordering::Equal {
                rest.push(r);
                continue;
            }
            match pivot.take() {
                None => pivot = Some(r),
                Some(p) => {
                    let (g, s, t) = p[c].clone().gcd_cofactors(r[c].clone(), Integer::new());
                    let a = Integer::from(&p[c] / &g);
                    let b = Integer::from(&r[c] / &g);
                    let np: Vec<Integer> = (0..n).map(|k| Integer::from(&s * &p[k]) + Integer::from(&t * &r[k])).collect();
                    let nr: Vec<Integer> = (0..n).map(|k| Integer::from(&a * &r[k]) - Integer::from(&b * &p[k])).collect();
                    pivot = Some(np);
                    if nr.iter().any(|x| x.cmp0() != Ordering::Equal) {
                        rest.push(nr);
                    }
                }
            }
        }
        let mut p = pivot?;
        if p[c].cmp0() == Ordering::Less {
            for x in p.iter_mut() {
                *x = Integer::from(-&*x);
            }
        }
        out.push(p);
        rows = rest;
    }
    // Reduce entries above each pivot.
    for c in 0..n {
        let piv = out[c][c].clone();
        for r in 0..c {
            let (q, _) = <(Integer, Integer)>::from(out[r][c].div_rem_floor_ref(&piv));
            if q.cmp0() != Ordering::Equal {
                let (head, tail) = out.split_at_mut(c);
                for k in c..n {
                    let t = Integer::from(&q * &tail[0][k]);
                    head[r][k] -= t;
                }
            }
        }
    }
    Some(out)
}

impl QLattice {
    /// Lattice generated by the given coordinate rows; must span `ℚ^n`.
    pub fn from_rows(rows: &[Vec<Rational>], n: usize) -> Result<Self, FieldError> {
        if rows.iter().any(|r| r.len() != n) {
            return Err(FieldError::DimensionMismatch { expected: n, got: rows.iter().map(|r| r.len()).find(|&l| l != n).unwrap_or(0) });
        }
        let d = common_denominator(rows);
        let ints: Vec<Vec<Integer>> = rows
            .iter()
            .map(|r| r.iter().map(|c| Integer::from(c.numer() * Integer::from(&d / c.denom()))).collect())
            .collect();
        let h = integer_hnf(ints, n).ok_or(FieldError::NotFullRank)?;
        let basis = h
            .into_iter()
            .map(|r| r.into_iter().map(|x| Rational::from((x, d.clone()))).collect())
            .collect();
        Ok(QLattice { basis })
    }

    pub fn from_elements(gens: &[FieldElement]) -> Result<Self, FieldError> {
        let n = gens.first().map(|g| g.degree()).ok_or(FieldError::NotFullRank)?;
        let rows: Vec<Vec<Rational>> = gens.iter().map(|g| g.coords.clone()).collect();
        Self::from_rows(&rows, n)
    }

    /// `ℤ^n` in power-basis coordinates, i.e. `ℤ[θ]`.
    pub fn standard(n: usize) -> Self {
        QLattice { basis: linalg::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &RatMatrix {
        &self.basis
    }

    pub fn basis_elements(&self) -> Vec<FieldElement> {
        self.basis.iter().map(|r| FieldElement::new(r.clone())).collect()
    }

    /// Covolume `|det B|` relative to `ℤ^n`.
    pub fn covolume(&self) -> Rational {
        let mut d = Rational::from(1);
        for (i, r) in self.basis.iter().enumerate() {
            d *= &r[i];
        }
        d
    }

    pub fn sum(&self, o: &QLattice) -> QLattice {
        let mut rows = self.basis.clone();
        rows.extend(o.basis.iter().cloned());
        Self::from_rows(&rows, self.dim()).expect("sum of full-rank lattices is full rank")
    }

    /// Dual for the standard dot product.
    pub fn standard_dual(&self) -> QLattice {
        let inv = linalg::inverse(&self.basis).expect("full rank");
        Self::from_rows(&linalg::transpose(&inv), self.dim()).expect("full rank")
    }

    pub fn intersect(&self, o: &QLattice) -> QLattice {
        self.standard_dual().sum(&o.standard_dual()).standard_dual()
    }

    /// Trace dual `{y : Tr(xy) ∈ ℤ for all x ∈ L}`.
    pub fn dual(&self, k: &TotallyRealField) -> QLattice {
        let bt = linalg::mat_mul(&self.basis, k.trace_gram());
        let inv = linalg::inverse(&bt).expect("trace form is nondegenerate");
        Self::from_rows(&linalg::transpose(&inv), self.dim()).expect("full rank")
    }

    /// Integer coordinates of `x` in the canonical basis, when `x ∈ L`.
    pub fn coordinates(&self, x: &FieldElement) -> Option<Vec<Integer>> {
        let n = self.dim();
        let mut rem = x.coords.clone();
        let mut z = Vec::with_capacity(n);
        for j in 0..n {
            let q = Rational::from(&rem[j] / &self.basis[j][j]);
            if !q.is_integer() {
                return None;
            }
            let qi = q.numer().clone();
            for k in j..n {
                let t = Rational::from(&self.basis[j][k] * &qi);
                rem[k] -= t;
            }
            z.push(qi);
        }
        Some(z)
    }

    pub fn contains(&self, x: &FieldElement) -> bool {
        self.coordinates(x).is_some()
    }

    pub fn contains_lattice(&self, o: &QLattice) -> bool {
        o.basis.iter().all(|r| self.contains(&FieldElement::new(r.clone())))
    }

    /// Canonical representative of `x + L`: coordinate `j` lands in `[0, B_jj)`.
    pub fn reduce(&self, x: &FieldElement) -> FieldElement {
        let n = self.dim();
        let mut rem = x.coords.clone();
        for j in 0..n {
            let q = Rational::from(&rem[j] / &self.basis[j][j]);
            let qi = Integer::from(q.floor_ref());
            if qi.cmp0() != Ordering::Equal {
                for k in j..n {
                    let t = Rational::from(&self.basis[j][k] * &qi);
                    rem[k] -= t;
                }
            }
        }
        FieldElement::new(rem)
    }

    /// `[self : sub]` for `sub ⊆ self`.
    pub fn index(&self, sub: &QLattice) -> Result<Integer, FieldError> {
        if !self.contains_lattice(sub) {
            return Err(FieldError::NotSublattice);
        }
        let r = Rational::from(sub.covolume() / self.covolume());
        Ok(r.numer().clone())
    }

    /// A transversal of `self / sub`, canonical under `sub.reduce`.
    pub fn quotient_reps(&self, sub: &QLattice) -> Result<Vec<FieldElement>, FieldError> {
        if !self.contains_lattice(sub) {
            return Err(FieldError::NotSublattice);
        }
        let n = self.dim();
        // sub in self-coordinates, brought to Hermite form: the diagonal box is a transversal.
        let rows: Vec<Vec<Rational>> = sub
            .basis
            .iter()
            .map(|r| {
                self.coordinates(&FieldElement::new(r.clone()))
                    .expect("checked containment")
                    .into_iter()
                    .map(Rational::from)
                    .collect()
            })
            .collect();
        let h = QLattice::from_rows(&rows, n)?;
        let diag: Vec<u64> = (0..n)
            .map(|i| h.basis[i][i].numer().to_u64().expect("quotient too large to enumerate"))
            .collect();
        let total: u64 = diag.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        let mut idx = vec![0u64; n];
        loop {
            let mut v = vec![Rational::new(); n];
            for (i, &a) in idx.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for k in 0..n {
                    v[k] += Rational::from(&self.basis[i][k] * a);
                }
            }
            out.push(sub.reduce(&FieldElement::new(v)));
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < diag[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    /// `x·L`.
    pub fn scale(&self, k: &TotallyRealField, x: &FieldElement) -> Result<QLattice, FieldError> {
        if x.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let rows: Vec<Vec<Rational>> = self
            .basis
            .iter()
            .map(|r| k.mul(&FieldElement::new(r.clone()), x).coords)
            .collect();
        Self::from_rows(&rows, self.dim())
    }

    pub fn scale_rational(&self, q: &Rational) -> QLattice {
        let rows: Vec<Vec<Rational>> = self.basis.iter().map(|r| r.iter().map(|c| Rational::from(c * q)).collect()).collect();
        Self::from_rows(&rows, self.dim()).expect("nonzero scale")
    }

    /// Product of two ℤ-lattices as a module: span of pairwise products.
    pub fn ideal_mul(&self, k: &TotallyRealField, o: &QLattice) -> QLattice {
        let mut rows = Vec::with_capacity(self.dim() * o.dim());
        for a in &self.basis {
            for b in &o.basis {
                rows.push(k.mul(&FieldElement::new(a.clone()), &FieldElement::new(b.clone())).coords);
            }
        }
        Self::from_rows(&rows, self.dim()).expect("product of full-rank lattices is full rank")
    }

    /// Whether `O_K · L ⊆ L`.
    pub fn is_ideal(&self, k: &TotallyRealField) -> bool {
        let ok = k.ring_of_integers();
        ok.basis.iter().all(|w| {
            let w = FieldElement::new(w.clone());
            self.basis.iter().all(|b| self.contains(&k.mul(&w, &FieldElement::new(b.clone()))))
        })
    }

    /// `{x : xI ⊆ O_K}`.
    pub fn ideal_inverse(&self, k: &TotallyRealField) -> Result<QLattice, FieldError> {
        if !self.is_ideal(k) {
            return Err(FieldError::NotAnIdeal);
        }
        let inv_diff = k.ring_of_integers().dual(k);
        Ok(self.ideal_mul(k, &inv_diff).dual(k))
    }

    /// Absolute norm of a fractional ideal, `covol(I)/covol(O_K)`.
    pub fn ideal_norm(&self, k: &TotallyRealField) -> Rational {
        self.covolume() / k.ring_of_integers().covolume()
    }

    /// Whether `self` is integral, i.e. contained in `O_K`.
    pub fn is_integral(&self, k: &TotallyRealField) -> bool {
        k.ring_of_integers().contains_lattice(self)
    }

    /// Principal fractional ideal `x O_K`.
    pub fn principal(k: &TotallyRealField, x: &FieldElement) -> Result<QLattice, FieldError> {
        k.ring_of_integers().scale(k, x)
    }

    /// A generator of `self` as a principal ideal, searched over small
    /// basis combinations; `None` if no generator is found within `bound`.
    pub fn principal_generator(&self, k: &TotallyRealField, bound: i64) -> Option<FieldElement> {
        let n = self.dim();
        let target = self.ideal_norm(k);
        let elems = self.basis_elements();
        let mut best: Option<(Rational, FieldElement)> = None;
        for b in 1..=bound {
            let mut idx = vec![-b; n];
            loop {
                if idx.iter().any(|c| c.abs() == b) {
                    let mut x = FieldElement::zero(n);
                    for (c, e) in idx.iter().zip(&elems) {
                        x = x.add(&e.scale(&Rational::from(*c)));
                    }
                    if !x.is_zero() && Rational::from(k.norm(&x).abs_ref()) == target && &QLattice::principal(k, &x).ok()? == self {
                        let size: Rational = x.coords.iter().map(|c| Rational::from(c.abs_ref())).sum();
                        if best.as_ref().map_or(true, |(s, _)| &size < s) {
                            best = Some((size, x));
                        }
                    }
                }
                let mut i = 0;
                loop {
                    if i == n {
                        break;
                    }
                    if idx[i] < b {
                        idx[i] += 1;
                        break;
                    }
                    idx[i] = -b;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            if let Some((_, x)) = best {
                let x = if k.embed_sign(&x, 0) == Ordering::Less { x.neg() } else { x };
                return Some(x);
            }
        }
        None
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.basis.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect()
    }

    pub fn parse(rows: &[Vec<String>]) -> Result<QLattice, FieldError> {
        let n = rows.len();
        let r = rows
            .iter()
            .map(|row| FieldElement::parse(row).map(|e| e.coords))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(&r, n)
    }
}

impl Serialize for QLattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QLattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        QLattice::parse(&v).map_err(serde::de::Error::custom)
    }
}
