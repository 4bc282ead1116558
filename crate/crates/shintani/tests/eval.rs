use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use shintani::adelic::{regular, LatticeFunction, VALUE_BITS};
use shintani::fan_algebra::{characteristic_value, Cone, Fan};
use shintani::hecke::cone_series;
use shintani::mp::{self, Cx};
use shintani::numberfield::{FieldElement, QLattice, TotallyRealField};
use shintani::presets::*;
use shintani::shintani_eval::*;
use std::f64::consts::PI;

fn cx(re: f64, im: f64) -> Cx {
    Cx::from_f64(160, re, im)
}

fn rel(a: &Cx, b: &Cx) -> f64 {
    a.sub(b).abs_f64() / b.abs_f64()
}

/// `1` on `1 + 4ℤ`, `−1` on `3 + 4ℤ`.
fn chi4(k: &TotallyRealField) -> LatticeFunction {
    let per = QLattice::principal(k, &k.from_int(4)).unwrap();
    let vals = vec![(k.from_int(1), Cx::one(VALUE_BITS)), (k.from_int(3), Cx::one(VALUE_BITS).neg())];
    LatticeFunction::new(k.ring_of_integers().clone(), per, vals, VALUE_BITS).unwrap()
}

/// `(−1)^{x+1}` on `ℤ`.
fn alternating(k: &TotallyRealField) -> LatticeFunction {
    let per = QLattice::principal(k, &k.from_int(2)).unwrap();
    let vals = vec![(k.from_int(1), Cx::one(VALUE_BITS)), (k.from_int(0), Cx::one(VALUE_BITS).neg())];
    LatticeFunction::new(k.ring_of_integers().clone(), per, vals, VALUE_BITS).unwrap()
}

fn random_t(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

#[test]
fn one_dim_closed_form() {
    let q = rationals();
    let phi = chi4(&q);
    let fan = Fan::from_generators(vec![q.one()]);
    assert!(regular(&q, &phi, &fan));
    let form = build_form(&q, &phi, &fan).unwrap();
    // q^k summed against the character: x / (1 + x²) at x = e^{−2πt} = 1/2
    let t = 2f64.ln() / (2.0 * PI);
    let v = form.eval_f64(&[t], 96).unwrap();
    assert!(v.sub(&Cx::from_f64(96, 0.4, 0.0)).abs_f64() < 1e-15);
    for t in [0.01, 0.3, 1.7] {
        let a = form.eval_f64(&[t], 96).unwrap();
        let b = form.eval_f64(&[-t], 96).unwrap();
        let exact = 1.0 / (2.0 * (2.0 * PI * t).cosh());
        assert!((a.to_f64().0 - exact).abs() < 1e-14);
        assert!(a.sub(&b).abs_f64() < 1e-25);
    }
}

#[test]
fn eta_two() {
    let q = rationals();
    let form = build_form(&q, &alternating(&q), &Fan::from_generators(vec![q.one()])).unwrap();
    let cfg = EvalConfig::default();
    let e = l_orthant(&[1], &[cx(2.0, 0.0)], &form, &cfg).unwrap();
    let exact = PI * PI / 12.0;
    assert!((e.value.to_f64().0 - exact).abs() < 1e-10, "{}", e.value);
    assert!(e.value.to_f64().1.abs() < 1e-20);
}

#[test]
fn multiplier_does_not_change_the_function() {
    let k = q_sqrt2();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [direct_const_dataset(&k).unwrap(), synthetic_b(&k).unwrap()] {
        let f1 = build_form(&k, &d.phi, &d.fan).unwrap();
        let f2 = build_form_with_multiplier(&k, &d.phi, &d.fan, 2).unwrap();
        assert!(f2.num_terms() > f1.num_terms());
        for _ in 0..20 {
            let t = random_t(&mut rng, 2, 1.5);
            let a = f1.eval_f64(&t, 96).unwrap();
            let b = f2.eval_f64(&t, 96).unwrap();
            assert!(a.sub(&b).abs_f64() < 1e-20, "{} at {:?}", d.name, t);
        }
    }
}

#[test]
fn flipping_a_generator_keeps_the_function() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let (u1, u2) = (k.elem_i(&[2, -1]), k.elem_i(&[2, 1]));
    let flipped = Fan::from_generators(vec![u1.neg(), u2.clone()]);
    assert!(regular(&k, &d.phi, &flipped));
    let f1 = build_form(&k, &d.phi, &d.fan).unwrap();
    let f2 = build_form(&k, &d.phi, &flipped).unwrap();
    let f3 = build_form(&k, &d.phi, &Fan::from_generators(vec![u1.neg(), u2.neg()])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let t = random_t(&mut rng, 2, 1.0);
        let a = f1.eval_f64(&t, 96).unwrap();
        assert!(a.sub(&f2.eval_f64(&t, 96).unwrap()).abs_f64() < 1e-20);
        assert!(a.sub(&f3.eval_f64(&t, 96).unwrap()).abs_f64() < 1e-20);
    }
}

#[test]
fn schwartz_decay_in_every_direction() {
    let k = q_sqrt2();
    let d = synthetic_b(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..12 {
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        let (c, s) = (a.cos(), a.sin());
        let near = form.eval_f64(&[0.5 * c, 0.5 * s], 128).unwrap().abs_f64();
        let far = form.eval_f64(&[8.0 * c, 8.0 * s], 256).unwrap().abs_f64();
        assert!(far < 1e-12, "angle {} value {:e}", a, far);
        assert!(far < near);
    }
}

#[test]
fn form_matches_cone_series() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    for t in [[0.3, 0.4], [0.2, 0.9], [1.1, 0.25]] {
        let mut acc = 0.0;
        for x in 1..60i64 {
            for y in -x..=x {
                let v = k.elem_i(&[x, y]);
                let c = characteristic_value(&k, &d.fan, &v);
                if c == 0 {
                    continue;
                }
                let r = k.embed_f64(&v);
                acc += c as f64 * d.phi.eval(&v).to_f64().0 * (-2.0 * PI * (t[0] * r[0] + t[1] * r[1])).exp();
            }
        }
        let f = form.eval_f64(&t, 96).unwrap().to_f64().0;
        assert!((f - acc).abs() < 1e-13 * acc.abs().max(1e-3), "{} vs {} at {:?}", f, acc, t);
    }
}

#[test]
fn special_factor_values() {
    let s = [cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)];
    let f = special_factors(&SignPattern::new(vec![0, 0, 0]).unwrap(), &s).unwrap();
    for g in &f.gamma_r {
        assert!(g.sub(&cx(1.0, 0.0)).abs_f64() < 1e-40);
    }
    for g in &f.gamma_c {
        assert!(g.sub(&cx(1.0 / PI, 0.0)).abs_f64() < 1e-15);
    }
    let f = special_factors(&SignPattern::new(vec![1, 0, 1]).unwrap(), &s).unwrap();
    assert!(f.i_sigma.sub(&cx(-1.0, 0.0)).abs_f64() < 1e-40);
    // Γ_ℝ(2) = 1/π
    assert!(f.gamma_r[0].sub(&cx(1.0 / PI, 0.0)).abs_f64() < 1e-15);
    assert!(f.gamma_sigma.sub(&cx(1.0 / (PI * PI), 0.0)).abs_f64() < 1e-15);
    let f = special_factors(&SignPattern::new(vec![1]).unwrap(), &[cx(0.5, 0.0)]).unwrap();
    assert!(f.i_sigma.sub(&cx(0.0, 1.0)).abs_f64() < 1e-40);
}

#[test]
fn fe_constant_values() {
    let sigma = SignPattern::new(vec![1, 0]).unwrap();
    assert!(FeConstant::ISigma.value(&sigma, 64).sub(&Cx::from_f64(64, 0.0, 1.0)).abs_f64() < 1e-18);
    assert!(FeConstant::ISigmaInv.value(&sigma, 64).sub(&Cx::from_f64(64, 0.0, -1.0)).abs_f64() < 1e-18);
    assert!(FeConstant::IOneMinusSigma.value(&sigma, 64).sub(&Cx::from_f64(64, 0.0, 1.0)).abs_f64() < 1e-18);
    assert_eq!(FE_CONSTANT, FeConstant::ISigmaInv);
}

fn check_series(d: &ShintaniDataset, bound: f64) {
    let k = &d.field;
    let sf = ShintaniFunction::new(k, d.phi.clone(), d.fan.clone());
    let s = [cx(2.0, 0.0), cx(2.0, 0.0)];
    let quad = l_orthant(&[1, 1], &s, sf.form().unwrap(), &EvalConfig::default()).unwrap();
    let (series, _) = cone_series(k, &d.phi, &d.cone_base, &cx(2.0, 0.0), bound).unwrap();
    assert!(rel(&quad.value, &series) < 1e-8, "{}: {} vs {}", d.name, quad.value, series);
}

#[test]
fn series_quadrature_direct_const() {
    check_series(&direct_const_dataset(&q_sqrt2()).unwrap(), 4e6);
}

#[test]
fn series_quadrature_synthetic_b() {
    check_series(&synthetic_b(&q_sqrt2()).unwrap(), 1.6e7);
}

#[test]
fn frozen_values_at_two() {
    let k = q_sqrt2();
    let cfg = EvalConfig::default();
    let s = [cx(2.0, 0.0), cx(2.0, 0.0)];
    let d = direct_const_dataset(&k).unwrap();
    let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
    let l = sf.l_sigma(&d.sigma, &s, Mode::Auto, &cfg).unwrap();
    assert_eq!(l.route, Route::Direct);
    // four orthants, each the Dirichlet series L(2, χ)
    let quarter = l.value.scale(&Float::with_val(160, 0.25));
    assert!((quarter.to_f64().0 - 0.9752598676207).abs() < 1e-11, "{}", quarter);
}

#[test]
fn orthant_twist_is_sign_consistent() {
    let k = q_sqrt2();
    let d = synthetic_b(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    let cfg = EvalConfig::default();
    let s = [cx(1.3, 0.2), cx(1.1, -0.4)];
    for g in orthants(2) {
        let a = l_orthant(&g, &s, &form, &cfg).unwrap();
        let b = l_orthant(&[1, 1], &s, &form.twisted(&g), &cfg).unwrap();
        let sign = if g.iter().filter(|&&x| x < 0).count() % 2 == 1 { b.value.neg() } else { b.value };
        assert!(a.value.sub(&sign).abs_f64() < 1e-30, "{:?}", g);
    }
}

#[test]
fn negated_cone_gives_the_negative_orthant_series() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let minus = d.phi.scale_argument(&k, &k.from_int(-1)).unwrap();
    let neg_fan = Fan::from_generators(vec![k.elem_i(&[-2, 1]), k.elem_i(&[-2, -1])]);
    let form = build_form(&k, &minus, &neg_fan).unwrap();
    let s = [cx(2.0, 0.0), cx(2.0, 0.0)];
    let e = l_orthant(&[-1, -1], &s, &form, &EvalConfig::default()).unwrap();
    let (series, _) = cone_series(&k, &d.phi, &d.cone_base, &cx(2.0, 0.0), 4e6).unwrap();
    assert!(rel(&e.value, &series) < 1e-10, "{} vs {}", e.value, series);
}

#[test]
fn sigma_and_complement_differ() {
    let k = q_sqrt2();
    let d = synthetic_b(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    let s = [cx(1.5, 0.0), cx(1.5, 0.0)];
    let cfg = EvalConfig::default();
    let a = l_sigma(&d.sigma, &s, &form, &cfg).unwrap();
    let b = l_sigma(&d.sigma.complement(), &s, &form, &cfg).unwrap();
    assert!(a.value.sub(&b.value).abs_f64() > 1e-3 * a.value.abs_f64());
}

#[test]
fn direct_and_reflected_routes_agree_on_the_overlap() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
    let cfg = EvalConfig::default();
    let s = [cx(0.6, 0.0), cx(0.7, 0.0)];
    let a = sf.l_sigma(&d.sigma, &s, Mode::Direct, &cfg).unwrap();
    let b = sf.l_sigma(&d.sigma, &s, Mode::Fe, &cfg).unwrap();
    assert_eq!((a.route, b.route), (Route::Direct, Route::Fe));
    assert!(rel(&a.value, &b.value) < 1e-8, "{} vs {}", a.value, b.value);
    let err = sf.l_sigma(&d.sigma, &[cx(1.2, 0.0), cx(-0.3, 0.0)], Mode::Auto, &cfg).unwrap_err();
    assert_eq!(err, EvalError::MixedRegime);
}

#[test]
fn fe_constant_is_i_sigma_inverse() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
    let cfg = EvalConfig::default();
    let s = [cx(0.45, 0.3), cx(0.55, -0.1)];
    let l = sf.l_sigma_completed(&d.sigma, &s, &cfg).unwrap();
    let r = sf.dual_completed(&d.sigma, &s, &cfg).unwrap();
    let residual = |c: FeConstant| rel(&l.value, &r.value.mul(&c.value(&d.sigma, 160)));
    assert!(residual(FeConstant::ISigmaInv) < 1e-8);
    // i_σ = i_σ^{-1} for σ = (1,1), so only i_{1−σ} is excluded here
    assert!(residual(FeConstant::IOneMinusSigma) > 0.5);
}

#[test]
fn trivial_zeros_on_each_axis() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
    let cfg = EvalConfig::default();
    for (zero, near) in [([-1.0, 0.5], [-0.5, 0.5]), ([0.5, -1.0], [0.5, -0.5])] {
        let z = sf.l_sigma(&d.sigma, &[cx(zero[0], 0.0), cx(zero[1], 0.0)], Mode::Auto, &cfg).unwrap();
        let n = sf.l_sigma(&d.sigma, &[cx(near[0], 0.0), cx(near[1], 0.0)], Mode::Auto, &cfg).unwrap();
        assert_eq!(z.route, Route::Fe);
        assert!(n.value.abs_f64() > 1e-3);
        assert!(z.value.abs_f64() < 1e-6 * n.value.abs_f64(), "{:?}: {}", zero, z.value);
    }
}

#[test]
fn mean_value_property_in_one_variable() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
    let cfg = EvalConfig::default();
    let (c1, s2, r) = (0.8, cx(0.9, 0.1), 0.15);
    let center = sf.l_sigma(&d.sigma, &[cx(c1, 0.0), s2.clone()], Mode::Direct, &cfg).unwrap().value;
    let m = 12;
    let mut acc = Cx::zero(160);
    for j in 0..m {
        let a = 2.0 * PI * j as f64 / m as f64;
        let s = [cx(c1 + r * a.cos(), r * a.sin()), s2.clone()];
        acc = acc.add(&sf.l_sigma(&d.sigma, &s, Mode::Direct, &cfg).unwrap().value);
    }
    let mean = acc.scale(&Float::with_val(160, 1.0 / m as f64));
    assert!(rel(&mean, &center) < 1e-8, "{} vs {}", mean, center);
}

/// `∫ F(t) e(−⟨x,t⟩) dt` by the trapezoid rule on a half-shifted grid.
fn fourier_at(form: &RExpForm, xs: &[Vec<f64>], h: f64, r: f64) -> Vec<(f64, f64)> {
    let n = form.dim();
    let m = (r / h) as i64;
    let axis: Vec<f64> = (-m..m).map(|i| (i as f64 + 0.5) * h).collect();
    let mut pts: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..n {
        pts = pts.iter().flat_map(|p| axis.iter().map(move |&a| [p.clone(), vec![a]].concat())).collect();
    }
    let vals: Vec<(f64, f64)> = pts.iter().map(|t| form.eval_f64(t, 64).unwrap().to_f64()).collect();
    let w = h.powi(n as i32);
    xs.iter()
        .map(|x| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, (a, b)) in pts.iter().zip(&vals) {
                let ph = -2.0 * PI * x.iter().zip(t).map(|(p, q)| p * q).sum::<f64>();
                re += a * ph.cos() - b * ph.sin();
                im += a * ph.sin() + b * ph.cos();
            }
            (re * w, im * w)
        })
        .collect()
}

fn check_fourier_proposition(k: &TotallyRealField, phi: &LatticeFunction, fan: &Fan, xs: &[Vec<f64>], h: f64, r: f64) {
    let sf = ShintaniFunction::new(k, phi.clone(), fan.clone());
    let lhs = fourier_at(sf.form().unwrap(), xs, h, r);
    let n = k.degree() as i64;
    let i_neg_n = mp::i_power(-n, 64);
    for (x, (re, im)) in xs.iter().zip(lhs) {
        let rhs = sf.dual_form().unwrap().eval_f64(x, 64).unwrap().mul(&i_neg_n);
        let diff = Cx::from_f64(64, re, im).sub(&rhs).abs_f64();
        assert!(diff < 1e-5 * rhs.abs_f64(), "x = {:?}: ({}, {}) vs {}", x, re, im, rhs);
    }
}

#[test]
fn fourier_proposition_one_dim() {
    let q = rationals();
    let xs = vec![vec![0.1], vec![0.37], vec![-0.8], vec![1.5]];
    check_fourier_proposition(&q, &chi4(&q), &Fan::from_generators(vec![q.one()]), &xs, 0.01, 8.0);
}

#[test]
fn fourier_proposition_two_dim() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let xs = vec![vec![0.3, 0.2], vec![-0.4, 0.7], vec![1.0, 0.5]];
    check_fourier_proposition(&k, &d.phi, &d.fan, &xs, 0.05, 4.0);
}

#[test]
fn derivative_of_linear_function() {
    let f = |s: &[Cx]| -> Result<Cx, ()> { Ok(s[0].scale(&Float::with_val(128, 3)).add(&s[1].scale(&Float::with_val(128, -5)))) };
    let p = [cx(0.2, 0.0), cx(0.7, 0.0)];
    let d = partial_derivative(&f, &p, &Direction::Vector(vec![1.0, 1.0]), 1, 128).unwrap();
    assert!(d.value.sub(&cx(-2.0, 0.0)).abs_f64() < 1e-25);
    let d0 = partial_derivative(&f, &p, &Direction::Axis(0), 1, 128).unwrap();
    assert!(d0.value.sub(&cx(3.0, 0.0)).abs_f64() < 1e-25);
    let d2 = partial_derivative(&f, &p, &Direction::Axis(1), 2, 128).unwrap();
    assert!(d2.value.abs_f64() < 1e-15);
}

#[test]
fn derivative_of_gamma_r() {
    let f = |s: &[Cx]| mp::gamma_r(&s[0].add(&Cx::one(s[0].prec())));
    let d = partial_derivative(&f, &[Cx::zero(160)], &Direction::Axis(0), 1, 128).unwrap();
    let half = Float::with_val(128, 0.5);
    let exact = (mp::digamma_real(&half) - mp::pi(128).ln()) / 2u32;
    assert!((d.value.to_f64().0 - exact.to_f64()).abs() < 1e-14, "{} vs {}", d.value, exact);
}

#[test]
fn config_validation() {
    assert!(EvalConfig::default().validate().is_ok());
    assert!(EvalConfig { step: 1.5, ..Default::default() }.validate().is_err());
    assert!(EvalConfig::with_bits(16).validate().is_err());
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    let e = l_orthant(&[1, 1], &[cx(0.05, 0.0), cx(1.0, 0.0)], &form, &EvalConfig::default()).unwrap_err();
    assert!(matches!(e, EvalError::ReTooSmall { .. }));
    let cfg: EvalConfig = serde_json::from_str(r#"{"bits": 96}"#).unwrap();
    assert_eq!(cfg.bits, 96);
    assert!(serde_json::from_str::<EvalConfig>(r#"{"bit": 96}"#).is_err());
}

#[test]
fn simple_cone_form_has_expected_shape() {
    let k = q_sqrt2();
    let d = direct_const_dataset(&k).unwrap();
    let form = build_form(&k, &d.phi, &d.fan).unwrap();
    assert_eq!(form.blocks().len(), 1);
    let b = &form.blocks()[0];
    assert_eq!(b.cone, Cone::new(vec![k.elem_i(&[2, -1]), k.elem_i(&[2, 1])]));
    for i in 0..b.numerator.len() {
        let tau = b.tau(i);
        let v: FieldElement = tau
            .iter()
            .zip(&b.denominator)
            .fold(k.zero(), |acc, (t, (m, u))| acc.add(&u.scale(&(t.clone() * rug::Rational::from(m.clone())))));
        assert_eq!(v, b.numerator[i].1);
    }
}
