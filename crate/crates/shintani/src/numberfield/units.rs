use super::field::{FieldElement, TotallyRealField};
use super::FieldError;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Generators of the totally positive units `E_K` and `#(O_K^× / E_K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitData {
    pub totally_positive_generators: Vec<FieldElement>,
    pub unit_group_index: u64,
    /// Fundamental unit when known (degree 2 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental_unit: Option<FieldElement>,
}

impl UnitData {
    /// Units of `ℚ`: `E = {1}`, index 2.
    pub fn rationals() -> Self {
        UnitData { totally_positive_generators: vec![], unit_group_index: 2, fundamental_unit: None }
    }

    /// Check each supplied generator is a totally positive unit.
    pub fn validate(&self, k: &TotallyRealField) -> Result<(), FieldError> {
        if self.totally_positive_generators.len() + 1 != k.degree() {
            return Err(FieldError::BadUnits("need n-1 generators".into()));
        }
        for u in &self.totally_positive_generators {
            let nm = k.norm(u);
            if Rational::from(nm.abs_ref()) != 1 || !k.is_integral(u) {
                return Err(FieldError::BadUnits(format!("{} is not a unit", u)));
            }
            if !k.is_totally_positive(u) {
                return Err(FieldError::BadUnits(format!("{} is not totally positive", u)));
            }
        }
        Ok(())
    }
}

/// Data of a real quadratic field: `ω` with `O_K = ℤ[ω]`, `ω = (d + √d)/2`.
pub(crate) struct QuadraticData {
    pub disc: Integer,
    pub omega: FieldElement,
}

pub(crate) fn quadratic_data(k: &TotallyRealField) -> QuadraticData {
    let c = k.min_poly();
    let (b, c0) = (Rational::from(c[1].clone()), Rational::from(c[0].clone()));
    let o = k.ring_of_integers();
    let cov = o.covolume();
    let disc_poly = Rational::from(&b * &b) - Rational::from(4u32) * &c0;
    let dk = Rational::from(&disc_poly * &cov) * &cov;
    let f = Rational::from(1) / &cov;
    // √D = 2θ + b, √d_K = √D / f
    let sqrt_d = FieldElement::new(vec![Rational::from(&b / &f), Rational::from(2u32) / &f]);
    let omega = sqrt_d.add(&k.from_rational(dk.clone())).scale(&Rational::from((1, 2)));
    QuadraticData { disc: dk.numer().clone(), omega }
}

fn floor_div(a: &Integer, b: &Integer) -> Integer {
    <(Integer, Integer)>::from(a.div_rem_floor_ref(b)).0
}

/// Fundamental unit and totally positive generator of a real quadratic field
/// by the continued fraction of `ω`.
pub fn quadratic_units(k: &TotallyRealField) -> Result<UnitData, FieldError> {
    if k.degree() != 2 {
        return Err(FieldError::UnitsNeedDegreeTwo(k.degree()));
    }
    let qd = quadratic_data(k);
    let d = qd.disc.clone();
    let s = Integer::from(d.sqrt_ref());
    let tr = d.clone();
    let nm = Integer::from(&d * &d - &d) / 4u32;
    let (mut pp, mut p) = (Integer::from(0), Integer::from(1));
    let (mut qp, mut q) = (Integer::from(1), Integer::from(0));
    let (mut big_p, mut big_q) = (d.clone(), Integer::from(2));
    let mut unit = None;
    for _ in 0..1_000_000 {
        let a = if big_q.cmp0() == Ordering::Greater {
            floor_div(&Integer::from(&big_p + &s), &big_q)
        } else {
            floor_div(&(Integer::from(&big_p + &s) + 1u32), &big_q)
        };
        let np = Integer::from(&a * &p) + &pp;
        let nq = Integer::from(&a * &q) + &qp;
        pp = std::mem::replace(&mut p, np);
        qp = std::mem::replace(&mut q, nq);
        big_p = Integer::from(&a * &big_q) - &big_p;
        big_q = (Integer::from(&d - Integer::from(&big_p * &big_p))) / &big_q;
        // N(p - qω) = p² - pq·Tr(ω) + q²·N(ω)
        let n = Integer::from(&p * &p) - Integer::from(&p * &q) * &tr + Integer::from(&q * &q) * &nm;
        if n == 1 || n == -1 {
            unit = Some((p.clone(), q.clone(), n == 1));
            break;
        }
    }
    let (p, q, norm_one) = unit.ok_or(FieldError::SearchExhausted)?;
    let raw = k.from_rational(Rational::from(p)).sub(&qd.omega.scale(&Rational::from(q)));
    let eps0 = normalize_gt_one(k, &raw)?;
    let (gen, index) = if norm_one {
        (eps0.clone(), 2)
    } else {
        (k.mul(&eps0, &eps0), 4)
    };
    Ok(UnitData { totally_positive_generators: vec![gen], unit_group_index: index, fundamental_unit: Some(eps0) })
}

/// Among `±u^{±1}` the one with `ρ_n > 1`.
fn normalize_gt_one(k: &TotallyRealField, u: &FieldElement) -> Result<FieldElement, FieldError> {
    let n = k.degree();
    let inv = k.inv(u)?;
    for c in [u.clone(), u.neg(), inv.clone(), inv.neg()] {
        let v = k.embed_float(&c, n - 1, 64);
        if v > 1 {
            return Ok(c);
        }
    }
    Err(FieldError::BadUnits("unit is ±1".into()))
}
