//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; trailing numbers select
//! criteria, e.g. `cargo test --test acceptance -- 2 5`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};
use shintani::adelic::*;
use shintani::conical::*;
use shintani::fan_algebra::*;
use shintani::hecke::*;
use shintani::mp::{self, Cx};
use shintani::numberfield::{find_principal_degree_one_primes, make_field, FieldElement, QLattice, TotallyRealField};
use shintani::presets::*;
use shintani::shintani_eval::*;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cx(re: f64, im: f64) -> Cx {
    Cx::from_f64(160, re, im)
}

fn rel(a: &Cx, b: &Cx) -> f64 {
    a.sub(b).abs_f64() / b.abs_f64()
}

fn small_elem(k: &TotallyRealField, rng: &mut ChaCha8Rng, r: i64) -> FieldElement {
    loop {
        let c: Vec<i64> = (0..k.degree()).map(|_| rng.gen_range(-r..=r)).collect();
        let v = k.elem_i(&c);
        if !v.is_zero() {
            return v;
        }
    }
}

fn cube_h(k: &TotallyRealField, n: usize, seed: i64) -> BTreeMap<Bits, FieldElement> {
    HypercubePoset { n }
        .elements()
        .into_iter()
        .enumerate()
        .map(|(i, b)| (b, k.elem_i(&[1 + i as i64, seed + 2 * i as i64])))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let k2 = q_sqrt2();
    let k3 = make_field(&[-1, -3, 0, 1]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for k in [&k2, &k3] {
        for _ in 0..100 {
            let m = rng.gen_range(1..=k.degree() + 2);
            let mut f = Fan::zero();
            for _ in 0..3 {
                let g: Vec<FieldElement> = (0..m).map(|_| small_elem(k, &mut rng, 6)).collect();
                f = f.add(&Fan::from_generators(g).scale(rng.gen_range(-3..=3)));
            }
            ensure(boundary(&boundary(&f)).is_zero(), || format!("∂∂ ≠ 0 on {f}"))?;
            let g: Vec<FieldElement> = (0..k.degree()).map(|_| small_elem(k, &mut rng, 6)).collect();
            let c = Fan::from_generators(g.clone());
            if k.is_linearly_independent(&g) {
                ensure(dual_fan(k, &dual_fan(k, &c)) == c, || format!("φφ ≠ id on {c}"))?;
            }
            cases += 1;
        }
    }
    for n in 1..=3 {
        let f = standard_system(cube_h(&k2, n, 5)).map_err(|e| e.to_string())?;
        let mut rhs = Fan::zero();
        for i in 1..=n {
            let d = t_top(&alpha(&f, i, 1), n - 1).sub(&t_top(&alpha(&f, i, 0), n - 1));
            rhs = rhs.add(&d.scale(if i % 2 == 1 { 1 } else { -1 }));
        }
        ensure(boundary(&t_top(&f, n)) == rhs, || format!("∂T identity fails for n = {n}"))?;
        let sys = |off: i64| {
            let h: BTreeMap<usize, FieldElement> = (1..=n).map(|i| (i, k2.elem_i(&[i as i64 + off, 1]))).collect();
            standard_system(h).unwrap()
        };
        ensure(boundary(&fusion_kernel(&sys(0), &sys(7), n)).is_zero(), || format!("fusion kernel not closed, n = {n}"))?;
    }
    let ps = ChainSets(HypercubePoset { n: 3 });
    let h: BTreeMap<_, _> =
        ps.elements().into_iter().enumerate().map(|(i, s)| (s, k2.elem_i(&[2 + i as i64, 1 - i as i64]))).collect();
    let g = t1_system(standard_system(h).map_err(|e| e.to_string())?);
    ensure(satisfies_conical_law(&g, &HypercubePoset { n: 3 }, 4), || "T₁ law fails on B(3)".into())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{cases} random ∂∂/φφ cases, ∂T and fusion for n ≤ 3, T₁ on B(3), {secs:.2} s"))
}

/// Every sampled `v` off the lines spanned by the generators has `𝔠(P(w))(v) = 0`.
fn vanishes_off_lines(k: &TotallyRealField, w: &Fan, rng: &mut ChaCha8Rng, samples: usize) -> Result<usize, String> {
    let p = positivize(w);
    let gens: Vec<FieldElement> = w.terms().flat_map(|(c, _)| c.generators.clone()).collect();
    let mut tested = 0;
    while tested < samples {
        let v = FieldElement::from_ratios(&[(rng.gen_range(-80..=80), 8), (rng.gen_range(-80..=80), 8)]);
        if v.is_zero() || gens.iter().any(|g| !k.is_linearly_independent(&[g.clone(), v.clone()])) {
            continue;
        }
        tested += 1;
        ensure(characteristic_value(k, &p, &v) == 0, || format!("𝔠(P({w}))({v}) ≠ 0"))?;
    }
    Ok(tested)
}

fn criterion_2() -> Outcome {
    let k = q_sqrt2();
    let eps = k.elem_i(&[3, -2]);
    let x = FieldElement::from_ratios(&[(1, 2), (3, 8)]);
    let xe = k.mul(&x, &eps);
    let lam = |a: &FieldElement, b: &FieldElement| Fan::from_generators(vec![a.clone(), b.clone()]);
    let d = dual_fan(&k, &example_fd_fan(&k));
    let expect = lam(&x, &FieldElement::from_ratios(&[(0, 1), (-1, 8)]));
    ensure(d == expect, || format!("φ(Λ(1, 3−2√2)) = {d}"))?;
    let one = k.one();
    let w1 = lam(&eps, &xe).sub(&lam(&one, &x));
    let w2 = lam(&xe, &xe.neg());
    let w3 = lam(&x, &xe.neg()).sub(&lam(&one, &eps)).sub(&lam(&eps, &xe)).add(&lam(&one, &x)).sub(&w2);
    ensure(w1 == act(&k, &eps, &lam(&one, &x)).sub(&lam(&one, &x)), || "w₁ is not (ε − 1)Λ(1, x)".into())?;
    ensure(lam(&one, &eps).add(&w1).add(&w2).add(&w3) == d, || "decomposition does not sum to φ𝔻".into())?;
    ensure(boundary(&w3).is_zero(), || format!("∂w₃ = {}", boundary(&w3)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n2 = vanishes_off_lines(&k, &w2, &mut rng, 200)?;
    let n3 = vanishes_off_lines(&k, &w3, &mut rng, 200)?;
    Ok(format!("exact dual fan, ∂w₃ = 0, 𝔠(P(w₂)), 𝔠(P(w₃)) vanish at {n2} + {n3} samples"))
}

/// Points are tested off the spans of the `(n−1)`-subsets of the generators.
fn thin_instance(k: &TotallyRealField, rng: &mut ChaCha8Rng, points: usize) -> Result<usize, String> {
    let n = k.degree();
    let u: Vec<FieldElement> = loop {
        let u: Vec<FieldElement> = (0..=n).map(|_| small_elem(k, rng, 9)).collect();
        let general = (0..=n).all(|skip| {
            let sub: Vec<FieldElement> = u.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, x)| x.clone()).collect();
            k.is_linearly_independent(&sub)
        });
        if general {
            break u;
        }
    };
    let subsets: Vec<Vec<FieldElement>> = (0u32..1 << (n + 1))
        .filter(|m| m.count_ones() as usize == n - 1)
        .map(|m| (0..=n).filter(|i| m >> i & 1 == 1).map(|i| u[i].clone()).collect())
        .collect();
    let b = positivize(&boundary(&Fan::from_generators(u.clone())));
    let mut violations = 0;
    let mut tested = 0;
    while tested < points {
        let v = small_elem(k, rng, 50);
        let exceptional = subsets.iter().any(|s| {
            let mut t = s.clone();
            t.push(v.clone());
            !k.is_linearly_independent(&t)
        });
        if exceptional {
            continue;
        }
        tested += 1;
        if characteristic_value(k, &b, &v) != 0 {
            violations += 1;
        }
    }
    Ok(violations)
}

fn criterion_3() -> Outcome {
    let quads: Vec<TotallyRealField> = [2, 3, 5, 7].iter().map(|&d| make_field(&[-d, 0, 1]).unwrap()).collect();
    let cubics = [make_field(&[-1, -3, 0, 1]).unwrap(), make_field(&[1, -2, -1, 1]).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for i in 0..20 {
        violations += thin_instance(&quads[i % quads.len()], &mut rng, 1000)?;
    }
    for i in 0..5 {
        violations += thin_instance(&cubics[i % cubics.len()], &mut rng, 1000)?;
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("20 degree-2 and 5 degree-3 instances × 1000 points, 0 violations".into())
}

fn random_function(k: &TotallyRealField, rng: &mut ChaCha8Rng, prec: u32) -> LatticeFunction {
    let n = k.degree();
    let d: i64 = rng.gen_range(1..=3);
    let supp = QLattice::principal(k, &k.from_rational(Rational::from((1, d)))).unwrap();
    let gens: Vec<FieldElement> = (0..n)
        .map(|i| {
            let mut c = vec![0i64; n];
            c[i] = rng.gen_range(2..=4);
            if i + 1 < n {
                c[i + 1] = rng.gen_range(0..=1);
            }
            k.elem_i(&c)
        })
        .collect();
    let per = QLattice::from_elements(&gens).unwrap().sum(&QLattice::principal(k, &k.from_int(12)).unwrap());
    LatticeFunction::from_fn(supp, per, prec, |_| Cx::from_f64(prec, rng.gen_range(-3..=3) as f64, rng.gen_range(-2..=2) as f64))
        .unwrap()
}

/// `Φ_{x,y}(x + m) = ψ(ym)` on `ℚ`.
fn phi_xy(k: &TotallyRealField, x: &Rational, y: &Rational, prec: u32) -> LatticeFunction {
    let supp = QLattice::principal(k, &k.from_rational(Rational::from((1, x.denom().clone())))).unwrap();
    let per = QLattice::principal(k, &k.from_rational(Rational::from(y.denom().clone()))).unwrap();
    LatticeFunction::from_fn(supp, per, prec, |v| {
        let m = Rational::from(v.as_rational().unwrap() - x);
        if m.is_integer() {
            Cx::e_rational(prec, &Rational::from(y * &m))
        } else {
            Cx::zero(prec)
        }
    })
    .unwrap()
}

/// Trapezoid rule for `∫ F(t) e(−⟨x,t⟩) dt` on a half-shifted grid.
fn real_fourier(form: &RExpForm, xs: &[Vec<f64>], h: f64, r: f64) -> Vec<Cx> {
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
            Cx::from_f64(64, re * w, im * w)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let k = q_sqrt2();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let f = random_function(&k, &mut rng, 128);
        let ff = f.fourier(&k).fourier(&k);
        let refl = f.scale_argument(&k, &k.from_int(-1)).map_err(|e| e.to_string())?;
        for (x, v) in refl.entries().chain(ff.entries()) {
            worst = worst.max(ff.eval(x).sub(&refl.eval(x)).abs_f64());
            let _ = v;
        }
    }
    ensure(worst <= 1e-30, || format!("double transform error {worst:e}"))?;

    let q = rationals();
    for (x, y) in [((1, 2), (1, 3)), ((2, 5), (3, 4)), ((1, 6), (5, 7))] {
        let (x, y) = (Rational::from(x), Rational::from(y));
        let f = phi_xy(&q, &x, &y, 256).fourier(&q);
        let g = phi_xy(&q, &y, &Rational::from(1 - x.clone()), 256);
        let c = Cx::e_rational(256, &Rational::from(-(x.clone() * &y)));
        for num in -40..40 {
            let v = q.from_rational(Rational::from((num, 140)));
            ensure(f.eval(&v.neg()).sub(&c.mul(&g.eval(&v))).abs_f64() < 1e-60, || format!("Φ_(x,y) convention at x={x}, y={y}"))?;
        }
    }

    let mut prop_worst = 0.0f64;
    let cases: Vec<(TotallyRealField, LatticeFunction, Fan, Vec<Vec<f64>>, f64, f64)> = {
        let per = QLattice::principal(&q, &q.from_int(4)).unwrap();
        let chi4 = LatticeFunction::new(
            q.ring_of_integers().clone(),
            per,
            vec![(q.from_int(1), Cx::one(VALUE_BITS)), (q.from_int(3), Cx::one(VALUE_BITS).neg())],
            VALUE_BITS,
        )
        .unwrap();
        let d = direct_const_dataset(&k).unwrap();
        vec![
            (q.clone(), chi4, Fan::from_generators(vec![q.one()]), vec![vec![0.1], vec![0.37], vec![-0.8]], 0.01, 8.0),
            (k.clone(), d.phi, d.fan, vec![vec![0.3, 0.2], vec![-0.4, 0.7], vec![1.0, 0.5]], 0.05, 4.0),
        ]
    };
    for (field, phi, fan, xs, h, r) in &cases {
        let sf = ShintaniFunction::new(field, phi.clone(), fan.clone());
        let lhs = real_fourier(sf.form().map_err(|e| e.to_string())?, xs, *h, *r);
        let c = mp::i_power(-(field.degree() as i64), 64);
        for (x, l) in xs.iter().zip(&lhs) {
            let rhs = sf.dual_form().map_err(|e| e.to_string())?.eval_f64(x, 64).map_err(|e| e.to_string())?.mul(&c);
            prop_worst = prop_worst.max(l.sub(&rhs).abs_f64() / rhs.abs_f64());
        }
    }
    ensure(prop_worst <= 1e-5, || format!("i^(-n) F(Φ̂, φ𝔅) mismatch {prop_worst:e}"))?;

    let mut agree = 0;
    for trial in 0..10 {
        let (a, b) = loop {
            let a = k.elem_i(&[rng.gen_range(1..=3), rng.gen_range(-1..=1)]);
            let b = k.elem_i(&[rng.gen_range(-1..=1), rng.gen_range(1..=2)]);
            if k.is_linearly_independent(&[a.clone(), b.clone()]) {
                break (a, b);
            }
        };
        let cone = Cone::new(vec![a.clone(), b.clone()]);
        let mut f = random_function(&k, &mut rng, 256);
        if trial % 2 == 0 {
            for u in [&a, &b] {
                f = f.sub(&f.translate(u));
            }
        }
        let direct = p2_direct(&k, &f, &cone).map_err(|e| e.to_string())?;
        let via = p2_check(&k, &f, &cone).map_err(|e| e.to_string())?;
        ensure(direct == via, || format!("P2 disagreement in trial {trial}"))?;
        agree += 1;
    }
    Ok(format!("reflection {worst:.1e}, Φ_(x,y) ok, proposition {prop_worst:.1e}, P2 agreement {agree}/10"))
}

fn criterion_5() -> Outcome {
    let k = q_sqrt2();
    let cfg = EvalConfig::default();
    let s = [cx(2.0, 0.0), cx(2.0, 0.0)];
    let mut report = Vec::new();
    for (d, bound) in [(direct_const_dataset(&k), 4e6), (synthetic_a(&k), 1.6e7), (synthetic_b(&k), 1.6e7)] {
        let d = d.map_err(|e| e.to_string())?;
        let form = build_form(&k, &d.phi, &d.fan).map_err(|e| e.to_string())?;
        let quad = l_orthant(&[1, 1], &s, &form, &cfg).map_err(|e| e.to_string())?;
        let (series, _) = cone_series(&k, &d.phi, &d.cone_base, &cx(2.0, 0.0), bound).map_err(|e| e.to_string())?;
        let r = rel(&quad.value, &series);
        ensure(r <= 1e-8, || format!("{}: quadrature {} vs series {}", d.name, quad.value, series))?;
        report.push(format!("{} {r:.1e}", d.name));
    }
    let q = rationals();
    let per = QLattice::principal(&q, &q.from_int(2)).unwrap();
    let alt = LatticeFunction::new(
        q.ring_of_integers().clone(),
        per,
        vec![(q.from_int(1), Cx::one(VALUE_BITS)), (q.from_int(0), Cx::one(VALUE_BITS).neg())],
        VALUE_BITS,
    )
    .unwrap();
    let form = build_form(&q, &alt, &Fan::from_generators(vec![q.one()])).map_err(|e| e.to_string())?;
    let eta = l_orthant(&[1], &[cx(2.0, 0.0)], &form, &cfg).map_err(|e| e.to_string())?;
    let err = (eta.value.to_f64().0 - PI * PI / 12.0).abs();
    ensure(err <= 1e-10, || format!("η(2) error {err:e}"))?;
    report.push(format!("η(2) {err:.1e}"));
    Ok(report.join(", "))
}

fn criterion_6() -> Outcome {
    let k = q_sqrt2();
    let cfg = EvalConfig::default();
    let grid = [
        [(0.3, 0.1), (0.6, -0.2)],
        [(0.5, 0.0), (0.5, 0.0)],
        [(0.4, 0.3), (0.45, 0.0)],
        [(0.7, 0.0), (0.35, 0.2)],
        [(0.6, -0.1), (0.8, 0.0)],
    ];
    let mut report = Vec::new();
    for d in [direct_const_dataset(&k), synthetic_a(&k), synthetic_b(&k)] {
        let d = d.map_err(|e| e.to_string())?;
        let sf = ShintaniFunction::new(&k, d.phi.clone(), d.fan.clone());
        let mut worst = [0.0f64; 3];
        for p in &grid {
            let s = [cx(p[0].0, p[0].1), cx(p[1].0, p[1].1)];
            let l = sf.l_sigma_completed(&d.sigma, &s, &cfg).map_err(|e| e.to_string())?;
            let r = sf.dual_completed(&d.sigma, &s, &cfg).map_err(|e| e.to_string())?;
            for (i, c) in FeConstant::ALL.iter().enumerate() {
                worst[i] = worst[i].max(rel(&l.value, &r.value.mul(&c.value(&d.sigma, 160))));
            }
        }
        let chosen = FeConstant::ALL.iter().position(|&c| c == FE_CONSTANT).unwrap();
        ensure(worst[chosen] <= 1e-6, || format!("{}: residual {:e} with {}", d.name, worst[chosen], FE_CONSTANT.name()))?;
        let zeroing: Vec<&str> =
            FeConstant::ALL.iter().zip(&worst).filter(|(_, &w)| w <= 1e-6).map(|(c, _)| c.name()).collect();
        report.push(format!("{} σ={:?}: {} ({:.1e})", d.name, d.sigma.as_slice(), zeroing.join("/"), worst[chosen]));
    }
    Ok(report.join("; "))
}

struct TrivialSetup {
    datum: RegularizedDatum,
    fan: Fan,
    fe: HeckeFe,
}

fn trivial_setup() -> &'static TrivialSetup {
    static CELL: OnceLock<TrivialSetup> = OnceLock::new();
    CELL.get_or_init(|| {
        let k = q_sqrt2();
        let (datum, fan) = regularized_zeta(&k).unwrap();
        let fe = HeckeFe::new(&datum, &fan).unwrap();
        TrivialSetup { datum, fan, fe }
    })
}

fn criterion_7() -> Outcome {
    let k = q_sqrt2();
    let cfg = EvalConfig::default();
    let two = [cx(2.0, 0.0), cx(2.0, 0.0)];
    let dc = direct_const_datum(&k).map_err(|e| e.to_string())?;
    let dc_fan = direct_const_fan(&k);
    let f = f_chi(&dc, &dc_fan, &two, &cfg).map_err(|e| e.to_string())?;
    let oracle = direct_partial_l(&dc.chi, &Cx::from_f64(64, 2.0, 0.0), 2e6).map_err(|e| e.to_string())?.value;
    let ra = rel(&f.value, &oracle.with_prec(160));
    ensure(ra <= 1e-6, || format!("(a) {} vs {}", f.value, oracle))?;

    let t = trivial_setup();
    let triv = HeckeCharacter::trivial(&k);
    let mut rb = 0.0f64;
    for x in [2.0, 3.0] {
        let s = cx(x, 0.0);
        let v = t.fe.left().eval(&[s.clone(), s.clone()], Mode::Auto, &cfg).map_err(|e| e.to_string())?;
        let z = direct_partial_l(&triv, &Cx::from_f64(64, x, 0.0), 2e6).map_err(|e| e.to_string())?.value;
        let one = Cx::one(160);
        let factor = one
            .sub(&Cx::pow_real_base(&Float::with_val(160, 7), &one.sub(&s)))
            .mul(&one.sub(&Cx::pow_real_base(&Float::with_val(160, 17), &s)));
        ensure(rel(&factor, &c_factor(&k, &t.datum.f, &s)) < 1e-30, || "c(f, s) differs from the Euler factors".into())?;
        rb = rb.max(rel(&v.value, &factor.mul(&z.with_prec(160))));
    }
    ensure(rb <= 1e-6, || format!("(b) relative error {rb:e}"))?;

    let mut rc = 0.0f64;
    for x in [0.4, 0.5, 0.6] {
        let s = cx(x, 0.0);
        let r = t.fe.check(&[s.clone(), s], &cfg).map_err(|e| e.to_string())?;
        rc = rc.max(r.residual);
    }
    ensure(rc <= 1e-5, || format!("(c) residual {rc:e}"))?;

    let hf = HeckeFunction::new(&dc, &dc_fan).map_err(|e| e.to_string())?;
    let mut rd = 0.0f64;
    for (z, near) in [([-1.0, 0.5], [-0.5, 0.5]), ([0.5, -1.0], [0.5, -0.5])] {
        let a = hf.eval(&[cx(z[0], 0.0), cx(z[1], 0.0)], Mode::Auto, &cfg).map_err(|e| e.to_string())?;
        let b = hf.eval(&[cx(near[0], 0.0), cx(near[1], 0.0)], Mode::Auto, &cfg).map_err(|e| e.to_string())?;
        rd = rd.max(a.value.abs_f64() / b.value.abs_f64());
    }
    ensure(rd <= 1e-6, || format!("(d) |F| / scale = {rd:e}"))?;

    let (zd, zfan) = riemann_zeta().map_err(|e| e.to_string())?;
    let q = rationals();
    let zfe = HeckeFe::new(&zd, &zfan).map_err(|e| e.to_string())?;
    let mut re = 0.0f64;
    for s in [cx(0.5, 0.0), cx(0.3, 0.2), cx(0.7, -1.0)] {
        re = re.max(zfe.check(&[s], &cfg).map_err(|e| e.to_string())?.residual);
    }
    let half = zfe.left().eval(&[cx(0.5, 0.0)], Mode::Auto, &cfg).map_err(|e| e.to_string())?.value;
    let zeta_half = half.div(&c_factor(&q, &zd.f, &cx(0.5, 0.0)));
    ensure(re <= 1e-8, || format!("(e) residual {re:e}"))?;
    ensure((zeta_half.to_f64().0 - -1.4603545088095868).abs() < 1e-10, || format!("(e) ζ(1/2) = {zeta_half}"))?;
    Ok(format!("(a) {ra:.1e} (b) {rb:.1e} (c) {rc:.1e} (d) {rd:.1e} (e) {re:.1e}"))
}

fn criterion_8() -> Outcome {
    let k = q_sqrt2();
    let d = direct_const_datum(&k).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = shintani_decomposition(&d, &direct_const_fan(&k), &Cx::zero(160), &EvalConfig::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.residual <= 1e-4, || format!("residual {:e}", r.residual))?;
    ensure(secs <= 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("direct_const at 0: c = {:.10}, residual {:.1e}, {secs:.1} s", r.c.to_f64().0, r.residual))
}

fn criterion_9() -> Outcome {
    let k = q_sqrt2();
    let cfg = EvalConfig::default();
    let t = trivial_setup();
    let alt = cubic_fd_fan(&k, &k.theta(), &[k.elem_i(&[3, 2])]);
    ensure(alt != dual_fan(&k, &t.fan), || "alternative fan coincides with φ𝔻".into())?;
    let right = HeckeFunction::from_function(
        &t.datum.chi.inverse(),
        &t.datum.units,
        &alt,
        t.datum.dual_phi().map_err(|e| e.to_string())?,
        OrthantStrategy::Adapted,
    )
    .map_err(|e| e.to_string())?;
    let factor = FE_CONSTANT.value(t.fe.left().sigma(), 192).mul(&gauss_constant(&t.datum.chi, 192).map_err(|e| e.to_string())?);
    let mut worst = 0.0f64;
    let mut worst_res = 0.0f64;
    for x in [0.4, 0.5, 0.6] {
        let s = cx(x, 0.0);
        let base = t.fe.check(&[s.clone(), s.clone()], &cfg).map_err(|e| e.to_string())?;
        let r = cx(1.0 - x, 0.0);
        let (v, _) = right.completed(&[r.clone(), r], &cfg).map_err(|e| e.to_string())?;
        let rhs = v.mul(&factor);
        let res = base.lhs.sub(&rhs).abs_f64() / base.lhs.abs_f64().max(rhs.abs_f64());
        worst = worst.max((res - base.residual).abs()).max(rel(&rhs, &base.rhs));
        worst_res = worst_res.max(res);
    }
    ensure(worst <= 1e-5 && worst_res <= 1e-5, || format!("route difference {worst:e}, residual {worst_res:e}"))?;
    Ok(format!("φ𝔻 vs F(√2; ε₊) on the dual side: difference {worst:.1e}, residual {worst_res:.1e}"))
}

fn criterion_10() -> Outcome {
    let k = q_sqrt2();
    let x = k.elem_i(&[3, 1]);
    let fan = cubic_fd_fan(&k, &x, &[k.elem_i(&[3, 2])]);
    let triv = HeckeCharacter::trivial(&k);
    let base = PrincipalIdeal::unit(&k);
    let z = excluded_primes(&triv, &base, &[&fan]).map_err(|e| e.to_string())?;
    let primes = find_principal_degree_one_primes(&k, &z, 8).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut seen = BTreeSet::new();
    while seen.len() < 10 {
        let (i, j) = (rng.gen_range(0..primes.len()), rng.gen_range(0..primes.len()));
        if primes[i].p == primes[j].p || !seen.insert((i, j)) {
            continue;
        }
        let d = RegularizedDatum::with_primes(&triv, &base, &primes[i].generator, &primes[j].generator).map_err(|e| e.to_string())?;
        ensure(regular(&k, &d.phi(), &fan), || format!("(𝔭, 𝔮) over ({}, {}) not regular", primes[i].p, primes[j].p))?;
    }
    ensure(z.contains(&7), || "7 not excluded".into())?;
    let d = RegularizedDatum::with_primes(&triv, &base, &x, &primes[0].generator).map_err(|e| e.to_string())?;
    ensure(!regular(&k, &d.phi(), &fan), || "excluded prime (3+√2) still regular".into())?;
    Ok(format!("10 admissible pairs regular on F(3+√2; ε₊); 𝔭 = (3+√2) rejected (Z = {z:?})"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "exact algebra", criterion_1),
        (2, "dual-fan example", criterion_2),
        (3, "thin support", criterion_3),
        (4, "Fourier stack", criterion_4),
        (5, "series vs quadrature", criterion_5),
        (6, "Shintani functional equation", criterion_6),
        (7, "Hecke end-to-end", criterion_7),
        (8, "Shintani formula", criterion_8),
        (9, "dual fundamental domain", criterion_9),
        (10, "regularization admissibility", criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
