//! Free ℤ-modules of cones: boundary, unit action, duality, positivization,
//! characteristic functions.

use crate::numberfield::{linalg, FieldElement, TotallyRealField};
use rug::Rational;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Formal cone symbol `Λ(a_1, …, a_m)`; generator order matters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cone {
    pub generators: Vec<FieldElement>,
}

impl Cone {
    pub fn new(generators: Vec<FieldElement>) -> Self {
        Cone { generators }
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    fn coord_matrix(&self) -> Vec<Vec<Rational>> {
        self.generators.iter().map(|g| g.coords.clone()).collect()
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ(")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", g)?;
        }
        write!(f, ")")
    }
}

/// Finite ℤ-linear combination of cones with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fan {
    terms: BTreeMap<Cone, i64>,
}

impl Fan {
    pub fn zero() -> Self {
        Fan::default()
    }

    /// The empty cone `Λ()`, the unit `1 ∈ C_0`.
    pub fn one() -> Self {
        Fan::cone(Cone::new(vec![]))
    }

    pub fn cone(c: Cone) -> Self {
        Fan::term(1, c)
    }

    pub fn from_generators(g: Vec<FieldElement>) -> Self {
        Fan::cone(Cone::new(g))
    }

    pub fn term(coeff: i64, c: Cone) -> Self {
        let mut f = Fan::zero();
        f.add_term(coeff, c);
        f
    }

    pub fn add_term(&mut self, coeff: i64, c: Cone) {
        if coeff == 0 {
            return;
        }
        let e = self.terms.entry(c.clone()).or_insert(0);
        *e += coeff;
        if *e == 0 {
            self.terms.remove(&c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Cone, i64)> {
        self.terms.iter().map(|(c, &v)| (c, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, c: &Cone) -> i64 {
        self.terms.get(c).copied().unwrap_or(0)
    }

    pub fn add(&self, o: &Fan) -> Fan {
        let mut r = self.clone();
        for (c, v) in o.terms() {
            r.add_term(v, c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Fan) -> Fan {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, k: i64) -> Fan {
        let mut r = Fan::zero();
        if k == 0 {
            return r;
        }
        for (c, v) in self.terms() {
            r.add_term(v * k, c.clone());
        }
        r
    }

    /// Concatenation product `Λ(a)·Λ(b) = Λ(a, b)`, bilinear.
    pub fn concat(&self, o: &Fan) -> Fan {
        let mut r = Fan::zero();
        for (a, x) in self.terms() {
            for (b, y) in o.terms() {
                let mut g = a.generators.clone();
                g.extend(b.generators.iter().cloned());
                r.add_term(x * y, Cone::new(g));
            }
        }
        r
    }

    /// Distinct cone dimensions present, increasing.
    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(|c| c.dim()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

impl fmt::Display for Fan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (c, v)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " {} ", if v < 0 { '-' } else { '+' })?;
            } else if v < 0 {
                write!(f, "-")?;
            }
            if v.abs() != 1 {
                write!(f, "{}·", v.abs())?;
            }
            write!(f, "{}", c)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct FanTermJson {
    coeff: i64,
    generators: Vec<FieldElement>,
}

/// JSON: `[{coeff, generators: [element, …]}, …]`.
impl Serialize for Fan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<FanTermJson> = self
            .terms()
            .map(|(c, k)| FanTermJson { coeff: k, generators: c.generators.clone() })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<FanTermJson>::deserialize(d)?;
        let mut f = Fan::zero();
        for t in v {
            if t.generators.iter().any(|g| g.is_zero()) {
                return Err(serde::de::Error::custom("cone generators must be nonzero"));
            }
            f.add_term(t.coeff, Cone::new(t.generators));
        }
        Ok(f)
    }
}

/// `∂Λ(a_1..a_m) = Σ_i (-1)^{i+1} Λ(…â_i…)`.
pub fn boundary(fan: &Fan) -> Fan {
    let mut r = Fan::zero();
    for (c, v) in fan.terms() {
        for i in 0..c.dim() {
            let mut g = c.generators.clone();
            g.remove(i);
            let sign = if i % 2 == 0 { 1 } else { -1 };
            r.add_term(sign * v, Cone::new(g));
        }
    }
    r
}

/// `ε·Λ(a_1..a_m) = Λ(εa_1..εa_m)`.
pub fn act(k: &TotallyRealField, eps: &FieldElement, fan: &Fan) -> Fan {
    let mut r = Fan::zero();
    for (c, v) in fan.terms() {
        let g = c.generators.iter().map(|a| k.mul(eps, a)).collect();
        r.add_term(v, Cone::new(g));
    }
    r
}

pub fn is_simple(k: &TotallyRealField, cone: &Cone) -> bool {
    if cone.dim() == 0 || cone.dim() > k.degree() {
        return cone.dim() == 0;
    }
    linalg::rank(&cone.coord_matrix()) == cone.dim()
}

/// Duality map: simple `n`-cones go to the trace-dual basis cone, others to 0.
pub fn dual_fan(k: &TotallyRealField, fan: &Fan) -> Fan {
    let mut r = Fan::zero();
    for (c, v) in fan.terms() {
        if c.dim() != k.degree() || !is_simple(k, c) {
            continue;
        }
        let b = k.dual_basis(&c.generators).expect("simple cone");
        r.add_term(v, Cone::new(b));
    }
    r
}

/// Replace each generator by its lex-positive multiple `±v`.
pub fn positivize(fan: &Fan) -> Fan {
    let mut r = Fan::zero();
    for (c, v) in fan.terms() {
        let g = c
            .generators
            .iter()
            .map(|a| if a.is_lex_positive() { a.clone() } else { a.neg() })
            .collect();
        r.add_term(v, Cone::new(g));
    }
    r
}

/// Orientation `r(u)` of a simple cone; 0 if not simple.
pub fn orientation(k: &TotallyRealField, cone: &Cone) -> i32 {
    k.orientation(&cone.generators)
}

/// Coordinates `t` with `v = Σ t_i u_i`, for a simple `n`-cone.
pub fn cone_coordinates(cone: &Cone, v: &FieldElement) -> Option<Vec<Rational>> {
    linalg::solve_left(&cone.coord_matrix(), &v.coords)
}

/// `𝔠(Λ)(v)` for one cone: `r(u)` if `v` is in the open cone, else 0.
pub fn cone_characteristic(k: &TotallyRealField, cone: &Cone, v: &FieldElement) -> i64 {
    if cone.dim() != k.degree() {
        return 0;
    }
    let r = orientation(k, cone);
    if r == 0 {
        return 0;
    }
    match cone_coordinates(cone, v) {
        Some(t) if t.iter().all(|x| x.cmp0() == Ordering::Greater) => r as i64,
        _ => 0,
    }
}

pub fn characteristic_value(k: &TotallyRealField, fan: &Fan, v: &FieldElement) -> i64 {
    fan.terms().map(|(c, m)| m * cone_characteristic(k, c, v)).sum()
}
