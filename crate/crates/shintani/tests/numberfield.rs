use proptest::prelude::*;
use rug::{Float, Integer, Rational};
use shintani::numberfield::*;
use std::collections::BTreeSet;

fn q2() -> TotallyRealField {
    make_field(&[-2, 0, 1]).unwrap()
}

fn el(k: &TotallyRealField, c: &[(i64, i64)]) -> FieldElement {
    k.element(c.iter().map(|&(p, q)| Rational::from((p, q))).collect()).unwrap()
}

#[test]
fn sqrt2_roots_are_sorted() {
    let k = q2();
    assert_eq!(k.degree(), 2);
    let r = k.embed_f64(&k.theta());
    assert!((r[0] + 2f64.sqrt()).abs() < 1e-15);
    assert!((r[1] - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn rejects_bad_polynomials() {
    assert!(matches!(make_field(&[1, 0, 1]), Err(FieldError::NotTotallyReal { .. })));
    assert_eq!(make_field(&[-1, 0, 1]).unwrap_err(), FieldError::NotIrreducible);
    assert_eq!(make_field(&[-2, 0, 2]).unwrap_err(), FieldError::NotMonic);
    // (x²-2)(x²-3) has four real roots but factors
    assert_eq!(make_field(&[6, 0, -5, 0, 1]).unwrap_err(), FieldError::NotIrreducible);
}

#[test]
fn cubic_field_is_accepted() {
    let k = make_field(&[-1, -3, 0, 1]).unwrap();
    assert_eq!(k.degree(), 3);
    let r = k.embed_f64(&k.theta());
    assert!(r[0] < r[1] && r[1] < r[2]);
    let expected = [-1.532088886237956, -0.3472963553338607, 1.879385241571817];
    for (a, b) in r.iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn quartic_irreducible_field() {
    // x⁴ - 4x² + 2, roots ±√(2±√2)
    let k = make_field(&[2, 0, -4, 0, 1]).unwrap();
    assert_eq!(k.degree(), 4);
}

#[test]
fn embedding_intervals_are_certified() {
    let k = q2();
    let iv = k.embed(&k.theta(), 0, 200);
    let s = -Float::with_val(256, 2).sqrt();
    assert!(iv.contains(&s));
    assert!(iv.width() <= Float::with_val(64, Float::i_exp(1, -200)));
    let one = k.embed(&k.one(), 1, 50);
    assert_eq!(one.lo, 1);
    assert_eq!(one.hi, 1);
    let x = el(&k, &[(3, 1), (-2, 1)]);
    let v = k.embed_float(&x, 1, 64).to_f64();
    assert!((v - 0.17157287525381).abs() < 1e-12);
}

#[test]
fn refinement_only_narrows() {
    let k = make_field(&[-1, -3, 0, 1]).unwrap();
    let x = k.theta();
    let a = k.embed(&x, 2, 30);
    let b = k.embed(&x, 2, 120);
    assert!(b.lo >= a.lo && b.hi <= a.hi);
}

#[test]
fn trace_and_norm_examples() {
    let k = q2();
    assert_eq!(k.trace_norm(&k.theta()), (Rational::from(0), Rational::from(-2)));
    assert_eq!(k.trace_norm(&k.elem_i(&[1, 1])), (Rational::from(2), Rational::from(-1)));
    assert_eq!(k.trace_norm(&k.elem_i(&[3, 2])), (Rational::from(6), Rational::from(1)));
}

#[test]
fn dual_basis_example() {
    let k = q2();
    let a = vec![k.one(), k.elem_i(&[3, -2])];
    let b = k.dual_basis(&a).unwrap();
    assert_eq!(b[0], el(&k, &[(1, 2), (3, 8)]));
    assert_eq!(b[1], el(&k, &[(0, 1), (-1, 8)]));
    let dep = vec![k.one(), k.from_int(2)];
    assert_eq!(k.dual_basis(&dep).unwrap_err(), FieldError::LinearlyDependent);
}

#[test]
fn dual_basis_of_orthonormal_is_itself() {
    let k = TotallyRealField::rationals();
    let b = k.dual_basis(&[k.one()]).unwrap();
    assert_eq!(b, vec![k.one()]);
}

#[test]
fn different_of_q_sqrt2() {
    let k = q2();
    let o = k.ring_of_integers().clone();
    assert_eq!(o, QLattice::standard(2));
    let d = o.dual(&k);
    let expected = o.scale(&k, &k.inv(&k.elem_i(&[0, 2])).unwrap()).unwrap();
    assert_eq!(d, expected);
    let diff = d.ideal_inverse(&k).unwrap();
    assert_eq!(diff, QLattice::principal(&k, &k.elem_i(&[0, 2])).unwrap());
}

#[test]
fn index_and_quotient_reps() {
    let k = q2();
    let o = k.ring_of_integers().clone();
    let two = o.scale_rational(&Rational::from(2));
    assert_eq!(o.index(&two).unwrap(), 4);
    let reps = o.quotient_reps(&two).unwrap();
    let expected: BTreeSet<FieldElement> =
        [k.zero(), k.one(), k.theta(), k.elem_i(&[1, 1])].into_iter().collect();
    assert_eq!(reps.into_iter().collect::<BTreeSet<_>>(), expected);
    assert_eq!(two.index(&o).unwrap_err(), FieldError::NotSublattice);
}

#[test]
fn maximal_orders() {
    // ℚ(√5): O_K = ℤ[(1+√5)/2] has index 2 in ℤ[√5]
    let k = make_field(&[-5, 0, 1]).unwrap();
    let o = k.ring_of_integers();
    assert_eq!(o.covolume(), Rational::from((1, 2)));
    assert!(o.contains(&el(&k, &[(1, 2), (1, 2)])));
    // x² - 12: ℤ[√3] has index 2 in ℤ[√12]
    let k = make_field(&[-12, 0, 1]).unwrap();
    assert_eq!(k.ring_of_integers().covolume(), Rational::from((1, 2)));
    // cubic with ℤ[θ] maximal
    let k = make_field(&[-1, -3, 0, 1]).unwrap();
    assert_eq!(k.ring_of_integers().covolume(), 1);
}

#[test]
fn units_of_quadratic_fields() {
    let k = q2();
    let u = quadratic_units(&k).unwrap();
    assert_eq!(u.totally_positive_generators, vec![k.elem_i(&[3, 2])]);
    assert_eq!(u.unit_group_index, 4);
    let k3 = make_field(&[-3, 0, 1]).unwrap();
    let u = quadratic_units(&k3).unwrap();
    assert_eq!(u.totally_positive_generators, vec![k3.elem_i(&[2, 1])]);
    assert_eq!(u.unit_group_index, 2);
    let k5 = make_field(&[-5, 0, 1]).unwrap();
    let u = quadratic_units(&k5).unwrap();
    // golden ratio has norm -1; its square (3+√5)/2
    assert_eq!(u.totally_positive_generators, vec![el(&k5, &[(3, 2), (1, 2)])]);
    assert_eq!(u.unit_group_index, 4);
    let k94 = make_field(&[-94, 0, 1]).unwrap();
    let u = quadratic_units(&k94).unwrap();
    assert_eq!(u.totally_positive_generators, vec![k94.elem_i(&[2143295, 221064])]);
    let cubic = make_field(&[-1, -3, 0, 1]).unwrap();
    assert!(matches!(quadratic_units(&cubic), Err(FieldError::UnitsNeedDegreeTwo(3))));
}

#[test]
fn degree_one_primes() {
    let k = q2();
    let ps = find_principal_degree_one_primes(&k, &[2].into_iter().collect(), 2).unwrap();
    assert_eq!(ps[0].p, 7);
    assert_eq!(ps[0].generator, k.elem_i(&[3, 1]));
    assert_eq!(ps[1].p, 7);
    assert_eq!(ps[1].generator, k.elem_i(&[5, 3]));
    let ps = find_principal_degree_one_primes(&k, &[2, 7].into_iter().collect(), 2).unwrap();
    assert_eq!(ps[0].p, 17);
    assert_eq!(ps[0].generator, k.elem_i(&[5, 2]));
    assert_eq!(ps[1].generator, k.elem_i(&[7, 4]));
    let q = TotallyRealField::rationals();
    let ps = find_principal_degree_one_primes(&q, &[2].into_iter().collect(), 2).unwrap();
    assert_eq!((ps[0].p, ps[1].p), (3, 5));
    assert_eq!(ps[0].generator, q.from_int(3));
}

#[test]
fn orientation_of_sqrt2_cones() {
    let k = q2();
    assert_eq!(k.orientation(&[k.elem_i(&[2, 1]), k.elem_i(&[2, -1])]), -1);
    assert_eq!(k.orientation(&[k.one(), k.elem_i(&[3, 2])]), 1);
    assert_eq!(k.orientation(&[k.one(), k.from_int(2)]), 0);
}

#[test]
fn orientation_matches_numeric_determinant() {
    let k = make_field(&[-1, -3, 0, 1]).unwrap();
    let u = vec![k.elem_i(&[1, 2, 0]), k.elem_i(&[0, 1, -1]), k.elem_i(&[3, 0, 1])];
    let e: Vec<Vec<f64>> = u.iter().map(|x| k.embed_f64(x)).collect();
    let det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
        + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
    assert_eq!(k.orientation(&u), det.signum() as i32);
}

#[test]
fn json_round_trip() {
    let k = q2();
    let x = el(&k, &[(4, 8), (-3, 7)]);
    let s = serde_json_like(&x.to_strings());
    assert_eq!(s, "[1/2,-3/7]");
    let l = k.ring_of_integers().scale_rational(&Rational::from((1, 3)));
    let back = QLattice::parse(&l.to_strings()).unwrap();
    assert_eq!(back, l);
}

fn serde_json_like(v: &[String]) -> String {
    format!("[{}]", v.join(","))
}

fn small_elem(n: usize) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-20i64..=20, n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_matches_embeddings(a in small_elem(3), b in small_elem(3)) {
        let k = make_field(&[-1, -3, 0, 1]).unwrap();
        let (x, y) = (k.elem_i(&a), k.elem_i(&b));
        let t = k.trace_pairing(&x, &y).to_f64();
        let ex = k.embed_f64(&x);
        let ey = k.embed_f64(&y);
        let num: f64 = ex.iter().zip(&ey).map(|(p, q)| p * q).sum();
        prop_assert!((t - num).abs() <= 1e-9 * (1.0 + num.abs()));
    }

    #[test]
    fn dual_basis_is_involutive(a in small_elem(4)) {
        let k = q2();
        let u = vec![k.elem_i(&a[..2]), k.elem_i(&a[2..])];
        prop_assume!(k.is_linearly_independent(&u));
        let b = k.dual_basis(&u).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(k.trace_pairing(&u[i], &b[j]), Rational::from(u32::from(i == j)));
            }
        }
        prop_assert_eq!(k.dual_basis(&b).unwrap(), u);
    }

    #[test]
    fn lattice_dual_is_involutive(a in small_elem(4)) {
        let k = q2();
        let u = vec![k.elem_i(&a[..2]), k.elem_i(&a[2..])];
        prop_assume!(k.is_linearly_independent(&u));
        let l = QLattice::from_elements(&u).unwrap();
        prop_assert_eq!(l.dual(&k).dual(&k), l);
    }

    #[test]
    fn index_is_multiplicative(a in 1i64..6, b in 1i64..6, c in 0i64..5) {
        let k = q2();
        let l1 = k.ring_of_integers().clone();
        let l2 = QLattice::from_elements(&[k.from_int(a), k.elem_i(&[c, 1])]).unwrap();
        let l3 = QLattice::from_elements(&[k.from_int(a * b), k.elem_i(&[c * b, b])]).unwrap();
        let i12 = l1.index(&l2).unwrap();
        let i23 = l2.index(&l3).unwrap();
        prop_assert_eq!(l1.index(&l3).unwrap(), Integer::from(&i12 * &i23));
        prop_assert_eq!(l1.quotient_reps(&l2).unwrap().len() as u64, i12.to_u64().unwrap());
    }

    #[test]
    fn intersection_is_contained(a in 1i64..8, b in 1i64..8) {
        let k = q2();
        let o = k.ring_of_integers();
        let la = o.scale_rational(&Rational::from(a));
        let lb = QLattice::principal(&k, &k.elem_i(&[b, 1])).unwrap();
        let i = la.intersect(&lb);
        prop_assert!(la.contains_lattice(&i) && lb.contains_lattice(&i));
        let s = la.sum(&lb);
        prop_assert!(s.contains_lattice(&la) && s.contains_lattice(&lb));
        // [L1+L2 : L2] = [L1 : L1∩L2]
        prop_assert_eq!(s.index(&lb).unwrap(), la.index(&i).unwrap());
    }

    #[test]
    fn multiplication_is_exact(a in small_elem(3), b in small_elem(3)) {
        let k = make_field(&[-1, -3, 0, 1]).unwrap();
        let (x, y) = (k.elem_i(&a), k.elem_i(&b));
        prop_assume!(!y.is_zero());
        let q = k.div(&x, &y).unwrap();
        prop_assert_eq!(k.mul(&q, &y), x.clone());
        prop_assert_eq!(k.norm(&k.mul(&x, &y)), k.norm(&x) * k.norm(&y));
    }
}
