//! Conical systems on finite posets, the constructions `T₁` and `T`, cubic
//! fundamental domain fans and the fusion-product cycle.

use crate::fan_algebra::{boundary, Cone, Fan};
use crate::numberfield::{FieldElement, TotallyRealField, UnitData};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicalError {
    #[error("standard system value at {0} is zero")]
    ZeroValue(String),
    #[error("degree {0} needs an explicitly supplied fundamental domain fan")]
    HigherDegreeNeedsExplicitFan(usize),
    #[error("supplied units are invalid: {0}")]
    BadUnits(String),
}

/// Finite poset given by its elements and a strict order test.
pub trait Poset {
    type Elem: Clone + Ord + std::fmt::Debug;
    fn elements(&self) -> Vec<Self::Elem>;
    fn less(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
}

/// `{1, …, n}` with the usual order.
#[derive(Clone, Debug)]
pub struct Chain(pub usize);

impl Poset for Chain {
    type Elem = usize;
    fn elements(&self) -> Vec<usize> {
        (1..=self.0).collect()
    }
    fn less(&self, a: &usize, b: &usize) -> bool {
        a < b
    }
}

/// `B(n) = {0,1}^n` ordered componentwise.
#[derive(Clone, Debug)]
pub struct HypercubePoset {
    pub n: usize,
}

pub type Bits = Vec<u8>;

impl Poset for HypercubePoset {
    type Elem = Bits;
    fn elements(&self) -> Vec<Bits> {
        (0..1u32 << self.n)
            .map(|m| (0..self.n).map(|i| ((m >> i) & 1) as u8).collect())
            .collect()
    }
    fn less(&self, a: &Bits, b: &Bits) -> bool {
        a != b && a.iter().zip(b).all(|(x, y)| x <= y)
    }
}

/// Nonempty totally ordered subsets of a poset, ordered by inclusion.
#[derive(Clone, Debug)]
pub struct ChainSets<P: Poset>(pub P);

impl<P: Poset> Poset for ChainSets<P> {
    type Elem = BTreeSet<P::Elem>;
    fn elements(&self) -> Vec<Self::Elem> {
        let base = self.0.elements();
        let mut out = Vec::new();
        for m in 1u64..1 << base.len() {
            let s: Vec<&P::Elem> = (0..base.len()).filter(|i| m >> i & 1 == 1).map(|i| &base[i]).collect();
            let total = s.iter().enumerate().all(|(i, a)| {
                s[i + 1..].iter().all(|b| self.0.less(a, b) || self.0.less(b, a))
            });
            if total {
                out.push(s.into_iter().cloned().collect());
            }
        }
        out
    }
    fn less(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        a != b && a.is_subset(b)
    }
}

/// Strictly increasing chains `f: {1..k} → Y`.
pub fn chains<P: Poset>(y: &P, k: usize) -> Vec<Vec<P::Elem>> {
    let elems = y.elements();
    let mut out = Vec::new();
    let mut cur: Vec<P::Elem> = Vec::new();
    fn rec<P: Poset>(y: &P, elems: &[P::Elem], k: usize, cur: &mut Vec<P::Elem>, out: &mut Vec<Vec<P::Elem>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for e in elems {
            if cur.last().map_or(true, |l| y.less(l, e)) {
                cur.push(e.clone());
                rec(y, elems, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(y, &elems, k, &mut cur, &mut out);
    out
}

/// A conical system, held as an evaluation rule on chains.
pub struct ConicalSystem<E> {
    eval: Arc<dyn Fn(&[E]) -> Fan + Send + Sync>,
}

impl<E> Clone for ConicalSystem<E> {
    fn clone(&self) -> Self {
        ConicalSystem { eval: Arc::clone(&self.eval) }
    }
}

impl<E: 'static> ConicalSystem<E> {
    pub fn new(f: impl Fn(&[E]) -> Fan + Send + Sync + 'static) -> Self {
        ConicalSystem { eval: Arc::new(f) }
    }

    pub fn eval(&self, chain: &[E]) -> Fan {
        if chain.is_empty() {
            return Fan::one();
        }
        (self.eval)(chain)
    }
}

/// `𝒮_h(f) = Λ(h(f(1)), …, h(f(m)))`.
pub fn standard_system<E: Ord + Clone + std::fmt::Debug + Send + Sync + 'static>(
    h: BTreeMap<E, FieldElement>,
) -> Result<ConicalSystem<E>, ConicalError> {
    if let Some((k, _)) = h.iter().find(|(_, v)| v.is_zero()) {
        return Err(ConicalError::ZeroValue(format!("{:?}", k)));
    }
    Ok(ConicalSystem::new(move |f: &[E]| {
        Fan::from_generators(f.iter().map(|y| h[y].clone()).collect())
    }))
}

fn drop_index<E: Clone>(f: &[E], j: usize) -> Vec<E> {
    let mut g = f.to_vec();
    g.remove(j);
    g
}

/// Check `∂𝓕(f) = Σ_j (-1)^{j+1} 𝓕(f∘d^j)` and `𝓕(S_k) ⊂ C_k` for all chains up to `max_len`.
pub fn satisfies_conical_law<P: Poset>(sys: &ConicalSystem<P::Elem>, y: &P, max_len: usize) -> bool
where
    P::Elem: 'static,
{
    if sys.eval(&[]) != Fan::one() {
        return false;
    }
    for k in 1..=max_len {
        for f in chains(y, k) {
            let v = sys.eval(&f);
            if v.terms().any(|(c, _)| c.dim() != k) {
                return false;
            }
            let mut rhs = Fan::zero();
            for j in 0..k {
                let s = if j % 2 == 0 { 1 } else { -1 };
                rhs = rhs.add(&sys.eval(&drop_index(&f, j)).scale(s));
            }
            if boundary(&v) != rhs {
                return false;
            }
        }
    }
    true
}

/// All permutations of `0..m` with their signs.
pub fn permutations(m: usize) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..m).collect();
    fn rec(k: usize, p: &mut Vec<usize>, sign: i64, out: &mut Vec<(Vec<usize>, i64)>) {
        if k == p.len() {
            out.push((p.clone(), sign));
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, if i == k { sign } else { -sign }, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, 1, &mut out);
    out.sort();
    out
}

/// `T₁(𝓕, h) = Σ_σ sgn(σ) 𝓕(g_{σ,h})` with `g_{σ,h}(j) = {h(σ(1)), …, h(σ(j))}`.
pub fn t1<E: Ord + Clone + 'static>(f: &ConicalSystem<BTreeSet<E>>, h: &[E]) -> Fan {
    let mut r = Fan::zero();
    for (sigma, sign) in permutations(h.len()) {
        let mut acc = BTreeSet::new();
        let mut g = Vec::with_capacity(h.len());
        for &s in &sigma {
            acc.insert(h[s].clone());
            g.push(acc.clone());
        }
        r = r.add(&f.eval(&g).scale(sign));
    }
    r
}

/// `𝒢(h) = T₁(𝓕, h)`, a conical system on `Y`.
pub fn t1_system<E: Ord + Clone + Send + Sync + 'static>(f: ConicalSystem<BTreeSet<E>>) -> ConicalSystem<E> {
    ConicalSystem::new(move |h: &[E]| t1(&f, h))
}

/// `T(𝓕) = Σ_σ sgn(σ) 𝓕(f_σ)`, `f_σ(j) = Σ_{k<j} e_{σ(k)}`, on `B(n)`.
pub fn t_top(f: &ConicalSystem<Bits>, n: usize) -> Fan {
    let mut r = Fan::zero();
    for (sigma, sign) in permutations(n) {
        let mut b = vec![0u8; n];
        let mut path = vec![b.clone()];
        for &s in &sigma {
            b[s] = 1;
            path.push(b.clone());
        }
        r = r.add(&f.eval(&path).scale(sign));
    }
    r
}

/// `w_b^i: B(n-1) → B(n)` inserting `b` as the `i`-th coordinate (1-based).
pub fn w_insert(i: usize, b: u8, x: &[u8]) -> Bits {
    let mut v = x.to_vec();
    v.insert(i - 1, b);
    v
}

/// `(α_b^i 𝓕)(f) = 𝓕(w_b^i ∘ f)`.
pub fn alpha(f: &ConicalSystem<Bits>, i: usize, b: u8) -> ConicalSystem<Bits> {
    let f = f.clone();
    ConicalSystem::new(move |c: &[Bits]| {
        let g: Vec<Bits> = c.iter().map(|x| w_insert(i, b, x)).collect();
        f.eval(&g)
    })
}

/// Standard system on `B(k)` with `E(b) = g_1^{b_1}⋯g_k^{b_k} x`.
pub fn cube_system(k: &TotallyRealField, x: &FieldElement, g: &[FieldElement]) -> ConicalSystem<Bits> {
    let cube = HypercubePoset { n: g.len() };
    let mut h = BTreeMap::new();
    for b in cube.elements() {
        let mut v = x.clone();
        for (gi, &bi) in g.iter().zip(&b) {
            if bi == 1 {
                v = k.mul(&v, gi);
            }
        }
        h.insert(b, v);
    }
    standard_system(h).expect("nonzero x and units give nonzero values")
}

/// `F(x; g_1..g_k) = Σ_σ sgn(σ) Λ(x, g_{σ(1)}x, g_{σ(1)}g_{σ(2)}x, …)`.
pub fn cubic_fd_fan(k: &TotallyRealField, x: &FieldElement, g: &[FieldElement]) -> Fan {
    let mut r = Fan::zero();
    for (sigma, sign) in permutations(g.len()) {
        let mut v = x.clone();
        let mut gens = vec![v.clone()];
        for &s in &sigma {
            v = k.mul(&v, &g[s]);
            gens.push(v.clone());
        }
        r.add_term(sign, Cone::new(gens));
    }
    r
}

/// `x = Σ_k Σ_{f,g} (-1)^k sgn(f,g) 𝓕(f)⊗𝒢(g)` over increasing `f`, `g` with
/// disjoint images covering `{1..n}`.
pub fn fusion_kernel(f: &ConicalSystem<usize>, g: &ConicalSystem<usize>, n: usize) -> Fan {
    let mut r = Fan::zero();
    for mask in 0u64..1 << n {
        let fs: Vec<usize> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let gs: Vec<usize> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 0).collect();
        let t = fs.iter().map(|a| gs.iter().filter(|&&b| *a > b).count()).sum::<usize>();
        let sign = if (fs.len() + t) % 2 == 0 { 1 } else { -1 };
        r = r.add(&f.eval(&fs).concat(&g.eval(&gs)).scale(sign));
    }
    r
}

/// Fundamental domain fan: `Λ(1, ε₊)` for `n = 2` with `ρ_n(ε₊) > 1`, `Λ(1)` for `ℚ`.
pub fn fundamental_domain_fan(k: &TotallyRealField, units: &UnitData) -> Result<Fan, ConicalError> {
    match k.degree() {
        1 => Ok(Fan::from_generators(vec![k.one()])),
        2 => {
            let e = units
                .totally_positive_generators
                .first()
                .ok_or_else(|| ConicalError::BadUnits("missing generator".into()))?;
            let big = k.embed_float(e, 1, 64) > 1;
            let eps = if big { e.clone() } else { k.inv(e).map_err(|x| ConicalError::BadUnits(x.to_string()))? };
            Ok(cubic_fd_fan(k, &k.one(), &[eps]))
        }
        n => Err(ConicalError::HigherDegreeNeedsExplicitFan(n)),
    }
}

/// Validate a supplied fan for `n ≥ 3`: `n`-cones of nonzero generators.
pub fn validate_supplied_fan(k: &TotallyRealField, fan: &Fan) -> Result<(), ConicalError> {
    for (c, _) in fan.terms() {
        if c.dim() != k.degree() || c.generators.iter().any(|g| g.is_zero()) {
            return Err(ConicalError::BadUnits(format!("cone {} has wrong shape", c)));
        }
    }
    Ok(())
}
