//! Ring of integers by p-maximal enlargement of `ℤ[θ]`.

use super::field::{FieldElement, TotallyRealField};
use super::lattice::QLattice;
use super::poly;
use rug::{Integer, Rational};

/// Discriminant of the order spanned by `l`, as an integer.
pub fn order_discriminant(k: &TotallyRealField, l: &QLattice) -> Integer {
    let c = l.covolume();
    let d = k.poly_discriminant() * Rational::from(&c * &c);
    assert!(d.is_integer(), "order discriminant must be integral");
    d.numer().clone()
}

/// Maximal order: for each prime `p` with `p² | disc`, adjoin all integral
/// elements of `p^{-1}O` until the order stabilises.
pub fn maximal_order(k: &TotallyRealField) -> QLattice {
    let n = k.degree();
    let mut order = QLattice::standard(n);
    let disc = order_discriminant(k, &order);
    for (p, e) in poly::factor(&disc) {
        if e < 2 {
            continue;
        }
        let pu = p.to_u64().expect("prime too large for order search");
        loop {
            let d = order_discriminant(k, &order);
            if !d.is_divisible(&Integer::from(&p * &p)) {
                break;
            }
            let basis = order.basis_elements();
            let mut gens: Vec<FieldElement> = basis.clone();
            let mut found = false;
            let total = pu.checked_pow(n as u32).expect("order search space too large");
            for idx in 1..total {
                let mut rem = idx;
                let mut x = k.zero();
                for b in &basis {
                    let c = rem % pu;
                    rem /= pu;
                    if c != 0 {
                        x = x.add(&b.scale(&Rational::from(c)));
                    }
                }
                let cand = x.scale(&Rational::from((1, pu)));
                if k.is_integral(&cand) {
                    gens.push(cand);
                    found = true;
                }
            }
            if !found {
                break;
            }
            order = QLattice::from_elements(&gens).expect("enlarged order has full rank");
        }
    }
    order
}
