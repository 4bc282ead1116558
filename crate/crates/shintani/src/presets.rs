//! Named datasets: the worked ℚ(√2) examples and the regression data.

use crate::adelic::{standard_function, HeckeCharacter, LatticeFunction, PrincipalIdeal, RootOfUnity, VALUE_BITS};
use crate::fan_algebra::Fan;
use crate::hecke::{default_fd_fan, make_regularized, HeckeError, RegularizedDatum};
use crate::mp::Cx;
use crate::numberfield::{make_field, FieldElement, QLattice, TotallyRealField};
use crate::shintani_eval::SignPattern;
use rug::Rational;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "q-sqrt2-example",
        description: "Q(sqrt2), conductor 2, T(1+sqrt2) = -1, sigma = (1,1), cone L(2-sqrt2, 2+sqrt2), no regularization",
    },
    PresetInfo { name: "q-sqrt2-fd", description: "Q(sqrt2), fundamental domain fan L(1, 3-2sqrt2) and its dual fan" },
    PresetInfo {
        name: "q-sqrt2-trivial",
        description: "Q(sqrt2), trivial character regularized by p = (3+sqrt2), q = (5+2sqrt2) on L(1, 3+2sqrt2)",
    },
    PresetInfo {
        name: "q-sqrt2-regularized-zeta",
        description: "Q(sqrt2), F(s,s) = c(f,s) zeta_K(s) for the regularized trivial character",
    },
    PresetInfo {
        name: "q-sqrt2-synthetic-a",
        description: "Q(sqrt2), double difference of 1_(x0+4O) on L(2-sqrt2, 2+sqrt2), sigma = (1,0)",
    },
    PresetInfo {
        name: "q-sqrt2-synthetic-b",
        description: "Q(sqrt2), double difference of 1_(2+sqrt2+3O) on L(1, 3+2sqrt2), sigma = (0,0)",
    },
    PresetInfo { name: "rationals-riemann-zeta", description: "Q, regularized trivial character: c(f,s) zeta(s)" },
];

pub fn find(name: &str) -> Option<&'static PresetInfo> {
    PRESETS.iter().find(|p| p.name == name)
}

/// `ℚ(√2)` as `ℚ[t]/(t² − 2)`.
pub fn q_sqrt2() -> TotallyRealField {
    make_field(&[-2, 0, 1]).expect("t^2 - 2 is irreducible")
}

pub fn rationals() -> TotallyRealField {
    make_field(&[0, 1]).expect("t is irreducible")
}

/// Modulus `2O`, `T(1) = 1`, `T(1+√2) = −1`, `σ = (1,1)`.
pub fn direct_const_character(k: &TotallyRealField) -> Result<HeckeCharacter, HeckeError> {
    let m = QLattice::principal(k, &k.from_int(2))?;
    Ok(HeckeCharacter::new(
        k,
        m,
        vec![(k.elem_i(&[1, 0]), RootOfUnity::one()), (k.elem_i(&[1, 1]), RootOfUnity::new(2, 1))],
        vec![1, 1],
        vec![0.0, 0.0],
        &[],
    )?)
}

/// `Λ(2−√2, 2+√2)`, positively oriented.
pub fn direct_const_fan(k: &TotallyRealField) -> Fan {
    Fan::from_generators(vec![k.elem_i(&[2, -1]), k.elem_i(&[2, 1])])
}

pub fn direct_const_datum(k: &TotallyRealField) -> Result<RegularizedDatum, HeckeError> {
    RegularizedDatum::unregularized(&direct_const_character(k)?, &PrincipalIdeal::unit(k))
}

/// `Λ(1, 3−2√2)`.
pub fn example_fd_fan(k: &TotallyRealField) -> Fan {
    Fan::from_generators(vec![k.one(), k.elem_i(&[3, -2])])
}

/// The trivial character regularized against the default fundamental domain fan.
pub fn regularized_zeta(k: &TotallyRealField) -> Result<(RegularizedDatum, Fan), HeckeError> {
    let fan = default_fd_fan(k)?;
    let datum = make_regularized(&HeckeCharacter::trivial(k), &PrincipalIdeal::unit(k), &[&fan], &BTreeSet::new())?;
    Ok((datum, fan))
}

pub fn riemann_zeta() -> Result<(RegularizedDatum, Fan), HeckeError> {
    regularized_zeta(&rationals())
}

/// A bare `(Φ, 𝔅, σ)` triple for the Shintani engine.
#[derive(Clone, Debug)]
pub struct ShintaniDataset {
    pub name: &'static str,
    pub field: TotallyRealField,
    pub phi: LatticeFunction,
    pub fan: Fan,
    pub sigma: SignPattern,
    /// `u` with `𝔅 = Λ(u, ε₊u)`, for the cone-series oracle.
    pub cone_base: FieldElement,
}

/// `(1 − T_{u₁})(1 − T_{u₂}) 1_{x₀ + per}` with `T_u Φ = Φ(· + u)`.
fn double_difference(
    supp: QLattice,
    per: QLattice,
    x0: FieldElement,
    u1: &FieldElement,
    u2: &FieldElement,
) -> Result<LatticeFunction, HeckeError> {
    let g = LatticeFunction::new(supp, per, vec![(x0, Cx::one(VALUE_BITS))], VALUE_BITS)?;
    let f = g.sub(&g.translate(u1));
    Ok(f.sub(&f.translate(u2)))
}

pub fn direct_const_dataset(k: &TotallyRealField) -> Result<ShintaniDataset, HeckeError> {
    let chi = direct_const_character(k)?;
    Ok(ShintaniDataset {
        name: "q-sqrt2-example",
        field: k.clone(),
        phi: standard_function(&chi, &PrincipalIdeal::unit(k), VALUE_BITS),
        fan: direct_const_fan(k),
        sigma: SignPattern::ones(2),
        cone_base: k.elem_i(&[2, -1]),
    })
}

/// Support `(1/3)O`, period `4O`, base point `1/3 + (2/3)√2`.
pub fn synthetic_a(k: &TotallyRealField) -> Result<ShintaniDataset, HeckeError> {
    let u1 = k.elem_i(&[2, -1]);
    let u2 = k.elem_i(&[2, 1]);
    let per = QLattice::principal(k, &k.from_int(4))?;
    let supp = k.ring_of_integers().scale_rational(&Rational::from((1, 3))).sum(&per);
    let x0 = FieldElement::from_ratios(&[(1, 3), (2, 3)]);
    Ok(ShintaniDataset {
        name: "q-sqrt2-synthetic-a",
        field: k.clone(),
        phi: double_difference(supp, per, x0, &u1, &u2)?,
        fan: Fan::from_generators(vec![u1.clone(), u2]),
        sigma: SignPattern::new(vec![1, 0])?,
        cone_base: u1,
    })
}

/// Support `O`, period `3O`, base point `2 + √2`.
pub fn synthetic_b(k: &TotallyRealField) -> Result<ShintaniDataset, HeckeError> {
    let u1 = k.one();
    let u2 = k.elem_i(&[3, 2]);
    let per = QLattice::principal(k, &k.from_int(3))?;
    let supp = k.ring_of_integers().clone();
    Ok(ShintaniDataset {
        name: "q-sqrt2-synthetic-b",
        field: k.clone(),
        phi: double_difference(supp, per, k.elem_i(&[2, 1]), &u1, &u2)?,
        fan: Fan::from_generators(vec![u1.clone(), u2]),
        sigma: SignPattern::zeros(2),
        cone_base: u1,
    })
}
