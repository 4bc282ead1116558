//! Dense univariate polynomials over the rationals, Sturm chains and
//! certified real-root isolation.

use rug::{Integer, Rational};
use std::cmp::Ordering;

/// Coefficients in increasing degree order; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    pub coeffs: Vec<Rational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().map_or(false, |c| c.cmp0() == Ordering::Equal) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn from_integers(c: &[Integer]) -> Self {
        Self::new(c.iter().map(|x| Rational::from(x.clone())).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> &Rational {
        self.coeffs.last().expect("zero polynomial has no leading coefficient")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn sign_at(&self, x: &Rational) -> Ordering {
        self.eval(x).cmp0()
    }

    pub fn derivative(&self) -> RatPoly {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| Rational::from(c * Integer::from(i)))
            .collect();
        RatPoly::new(c)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| Rational::from(-c)).collect())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::new(vec![]);
        }
        let mut out = vec![Rational::new(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        RatPoly::new(out)
    }

    /// Euclidean division: `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &RatPoly) -> (RatPoly, RatPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (RatPoly::new(vec![]), self.clone());
        }
        let mut q = vec![Rational::new(); r.len() - dd];
        let lead = d.lead().clone();
        for k in (0..q.len()).rev() {
            let c = Rational::from(&r[k + dd] / &lead);
            if c.cmp0() != Ordering::Equal {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[k + j] -= Rational::from(&c * dc);
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        (RatPoly::new(q), RatPoly::new(r))
    }

    pub fn rem(&self, d: &RatPoly) -> RatPoly {
        self.div_rem(d).1
    }

    pub fn monic(&self) -> RatPoly {
        let l = self.lead().clone();
        RatPoly::new(self.coeffs.iter().map(|c| Rational::from(c / &l)).collect())
    }

    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Cauchy bound: every real root lies strictly inside `(-B, B)`.
    pub fn root_bound(&self) -> Rational {
        let lead = Rational::from(self.lead().abs_ref());
        let mut m = Rational::new();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let q = Rational::from(c.abs_ref()) / &lead;
            if q > m {
                m = q;
            }
        }
        m + 1u32
    }
}

/// Sturm sequence of a squarefree polynomial.
pub fn sturm_chain(p: &RatPoly) -> Vec<RatPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            break;
        }
        let r = chain[n - 2].rem(&chain[n - 1]).neg();
        if r.is_zero() {
            break;
        }
        chain.push(r);
    }
    chain
}

fn sign_changes(chain: &[RatPoly], x: &Rational) -> usize {
    let mut last = Ordering::Equal;
    let mut count = 0;
    for p in chain {
        let s = p.sign_at(x);
        if s == Ordering::Equal {
            continue;
        }
        if last != Ordering::Equal && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Number of distinct real roots in the half-open interval `(a, b]`.
pub fn count_roots(chain: &[RatPoly], a: &Rational, b: &Rational) -> usize {
    sign_changes(chain, a) - sign_changes(chain, b)
}

/// Outcome of root isolation: either isolating intervals or an exact
/// rational root hit during bisection.
pub enum Isolation {
    Intervals(Vec<(Rational, Rational)>),
    RationalRoot(Rational),
}

/// Isolate all real roots of a squarefree polynomial into disjoint
/// intervals `[lo, hi]` whose endpoints are not roots, sorted increasingly.
pub fn isolate_real_roots(p: &RatPoly) -> Isolation {
    let chain = sturm_chain(p);
    let b = p.root_bound();
    let mut out = Vec::new();
    let mut stack = vec![(Rational::from(-&b), b)];
    while let Some((lo, hi)) = stack.pop() {
        let k = count_roots(&chain, &lo, &hi);
        if k == 0 {
            continue;
        }
        if k == 1 && p.sign_at(&hi) != Ordering::Equal {
            out.push((lo, hi));
            continue;
        }
        let mid = Rational::from(&lo + &hi) / 2u32;
        if p.sign_at(&mid) == Ordering::Equal {
            return Isolation::RationalRoot(mid);
        }
        stack.push((mid.clone(), hi));
        stack.push((lo, mid));
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    Isolation::Intervals(out)
}

/// Rational roots of an integer polynomial via the rational root theorem
/// restricted to candidates inside the Cauchy bound.
pub fn has_rational_root(p: &RatPoly) -> bool {
    let deg = match p.degree() {
        Some(d) => d,
        None => return true,
    };
    if deg == 0 {
        return false;
    }
    if p.coeffs[0].cmp0() == Ordering::Equal {
        return true;
    }
    // clear denominators
    let mut den = Integer::from(1);
    for c in &p.coeffs {
        den.lcm_mut(c.denom());
    }
    let ints: Vec<Integer> = p
        .coeffs
        .iter()
        .map(|c| Integer::from(c.numer() * Integer::from(&den / c.denom())))
        .collect();
    let a0 = Integer::from(ints[0].abs_ref());
    let an = Integer::from(ints[deg].abs_ref());
    let divs0 = divisors(&a0);
    let divsn = divisors(&an);
    for q in &divsn {
        for pp in &divs0 {
            for sgn in [1i32, -1] {
                let r = Rational::from((Integer::from(pp * sgn), q.clone()));
                if p.sign_at(&r) == Ordering::Equal {
                    return true;
                }
            }
        }
    }
    false
}

/// Positive divisors by trial division; inputs here are small coefficients.
pub fn divisors(n: &Integer) -> Vec<Integer> {
    let mut out = Vec::new();
    if n.cmp0() == Ordering::Equal {
        return out;
    }
    let fac = factor(n);
    out.push(Integer::from(1));
    for (p, e) in fac {
        let cur = out.clone();
        let mut pk = Integer::from(1);
        for _ in 0..e {
            pk *= &p;
            for d in &cur {
                out.push(Integer::from(d * &pk));
            }
        }
    }
    out.sort();
    out
}

/// Prime factorization by trial division.
pub fn factor(n: &Integer) -> Vec<(Integer, u32)> {
    let mut m = Integer::from(n.abs_ref());
    let mut out = Vec::new();
    let mut p = Integer::from(2);
    while Integer::from(&p * &p) <= m {
        let mut e = 0;
        while m.is_divisible(&p) {
            m /= &p;
            e += 1;
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}
