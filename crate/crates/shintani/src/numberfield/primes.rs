use super::field::{FieldElement, TotallyRealField};
use super::units::{quadratic_data, quadratic_units};
use super::FieldError;
use rug::{Integer, Rational};
use std::collections::BTreeSet;

/// A principal prime of degree one with a normalized generator.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeOnePrime {
    pub generator: FieldElement,
    pub p: u64,
}

const PRIME_LIMIT: u64 = 200_000;

fn small_primes(limit: u64) -> impl Iterator<Item = u64> {
    (2..limit).filter(|&m| Integer::from(m).is_probably_prime(20) != rug::integer::IsPrime::No)
}

fn root_mod_p(k: &TotallyRealField, p: u64) -> Vec<u64> {
    let c: Vec<Integer> = k.min_poly().iter().map(|x| Integer::from(x % p)).collect();
    (0..p)
        .filter(|&r| {
            let mut acc = Integer::new();
            for a in c.iter().rev() {
                acc *= r;
                acc += a;
                acc %= p;
            }
            acc.cmp0() == std::cmp::Ordering::Equal
        })
        .collect()
}

/// Reduce `x ∈ O_K` at `θ ≡ r (mod p)`; requires denominators prime to `p`.
pub fn reduce_at_root(x: &FieldElement, r: u64, p: u64) -> u64 {
    let pi = Integer::from(p);
    let mut acc = Integer::new();
    for c in x.coords.iter().rev() {
        acc *= r;
        let den = Integer::from(c.denom().invert_ref(&pi).expect("denominator prime to p"));
        let num = Integer::from(c.numer() % &pi);
        acc += num * den;
        acc %= &pi;
    }
    if acc < 0 {
        acc += &pi;
    }
    acc.to_u64().expect("reduced residue")
}

/// Normalize a quadratic generator: `ρ_1 > 0`, `|ρ_2/ρ_1| ∈ [1, ε₊²)`, and
/// positive ratio when a unit of norm `-1` exists.
fn normalize_quadratic(k: &TotallyRealField, a: &FieldElement, eps0: &FieldElement, index: u64) -> (FieldElement, f64) {
    let ratio = |x: &FieldElement| {
        let v = k.embed_f64(x);
        v[1] / v[0]
    };
    let e = k.embed_f64(eps0);
    let e2 = (e[1] / e[0]).abs();
    let eps_inv = k.inv(eps0).expect("unit");
    let mut x = a.clone();
    let mut r = ratio(&x);
    while r.abs() >= e2 {
        x = k.mul(&x, &eps_inv);
        r = ratio(&x);
    }
    while r.abs() < 1.0 {
        x = k.mul(&x, eps0);
        r = ratio(&x);
    }
    if index == 4 && r < 0.0 {
        x = k.mul(&x, eps0);
        r = ratio(&x);
    }
    if k.embed_f64(&x)[0] < 0.0 {
        x = x.neg();
    }
    (x, r)
}

/// Principal primes of degree one with norm outside `avoid`, increasing in `p`;
/// primes over the same `p` ordered by `ρ_2/ρ_1` of the normalized generator.
pub fn find_principal_degree_one_primes(
    k: &TotallyRealField,
    avoid: &BTreeSet<u64>,
    count: usize,
) -> Result<Vec<DegreeOnePrime>, FieldError> {
    let n = k.degree();
    let mut out = Vec::new();
    if count == 0 {
        return Ok(out);
    }
    match n {
        1 => {
            for p in small_primes(PRIME_LIMIT) {
                if avoid.contains(&p) {
                    continue;
                }
                out.push(DegreeOnePrime { generator: k.from_int(p as i64), p });
                if out.len() == count {
                    return Ok(out);
                }
            }
            Err(FieldError::SearchExhausted)
        }
        2 => {
            let units = quadratic_units(k)?;
            let eps0 = units.fundamental_unit.clone().expect("quadratic fundamental unit");
            let qd = quadratic_data(k);
            let dk = qd.disc.to_f64();
            let t = Integer::from(qd.disc.clone());
            let nw = Integer::from(&qd.disc * &qd.disc - &qd.disc) / 4u32;
            let e = k.embed_f64(&eps0);
            let emax = e[0].abs().max(e[1].abs());
            for p in small_primes(PRIME_LIMIT) {
                if avoid.contains(&p) || qd.disc.is_divisible_u(p as u32) {
                    continue;
                }
                let roots = root_mod_p(k, p);
                if roots.is_empty() {
                    continue;
                }
                let ybound = (2.0 * (p as f64).sqrt() * emax * emax / dk.sqrt()).ceil() as i64 + 2;
                let mut found: Vec<(FieldElement, f64)> = Vec::new();
                'search: for y in 0..=ybound {
                    for sgn in [1i64, -1] {
                        // x² + x y t + y² nω - sgn p = 0
                        let yb = Integer::from(y);
                        let bq = Integer::from(&yb * &t);
                        let cq = Integer::from(&yb * &yb) * &nw - Integer::from(sgn * p as i64);
                        let disc = Integer::from(&bq * &bq) - Integer::from(4u32) * &cq;
                        if disc < 0 || !disc.is_perfect_square() {
                            continue;
                        }
                        let s = Integer::from(disc.sqrt_ref());
                        for xs in [Integer::from(-&bq) + &s, Integer::from(-&bq) - &s] {
                            if !xs.is_even() {
                                continue;
                            }
                            let x = xs / 2u32;
                            let a = k.from_rational(Rational::from(x)).add(&qd.omega.scale(&Rational::from(y)));
                            if a.is_zero() {
                                continue;
                            }
                            let (g, r) = normalize_quadratic(k, &a, &eps0, units.unit_group_index);
                            if !found.iter().any(|(h, _)| h == &g) {
                                found.push((g, r));
                            }
                            if found.len() == roots.len() {
                                break 'search;
                            }
                        }
                    }
                }
                found.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite ratio"));
                for (g, _) in found {
                    out.push(DegreeOnePrime { generator: g, p });
                    if out.len() == count {
                        return Ok(out);
                    }
                }
            }
            Err(FieldError::SearchExhausted)
        }
        _ => {
            let basis = k.ring_of_integers().basis_elements();
            let disc = super::order::order_discriminant(k, k.ring_of_integers());
            const BOUND: i64 = 6;
            for p in small_primes(2_000) {
                if avoid.contains(&p) || disc.is_divisible_u(p as u32) || root_mod_p(k, p).is_empty() {
                    continue;
                }
                let mut found: Vec<FieldElement> = Vec::new();
                let side = (2 * BOUND + 1) as u64;
                for idx in 0..side.pow(n as u32) {
                    let mut rem = idx;
                    let mut x = k.zero();
                    for b in &basis {
                        let c = (rem % side) as i64 - BOUND;
                        rem /= side;
                        if c != 0 {
                            x = x.add(&b.scale(&Rational::from(c)));
                        }
                    }
                    if x.is_zero() || Rational::from(k.norm(&x).abs_ref()) != p {
                        continue;
                    }
                    let in_same = found.iter().any(|g| {
                        k.div(&x, g).map(|q| k.is_integral(&q) && Rational::from(k.norm(&q).abs_ref()) == 1).unwrap_or(false)
                    });
                    if !in_same {
                        found.push(x);
                    }
                }
                for g in found {
                    out.push(DegreeOnePrime { generator: g, p });
                    if out.len() == count {
                        return Ok(out);
                    }
                }
            }
            Err(FieldError::SearchExhausted)
        }
    }
}
