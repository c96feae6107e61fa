//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use atomcompact::cell::enumerate_cells;
use atomcompact::compact::decode;
use atomcompact::{
    compactify, materialize, Atom, DefFun, DefSet, Measure, Rational, ScalarFun, Support, Theory, Truncation, Tuple, TypeDesc,
    Value,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn atom_pool(theory: Theory) -> Vec<Atom> {
    match theory {
        Theory::Eq => (0..4).map(Atom::int).collect(),
        Theory::Dlo => vec![Atom::int(-1), Atom::frac(1, 2), Atom::int(0), Atom::int(2)],
    }
}

pub fn random_support(r: &mut Rng8, theory: Theory, max: usize) -> Support {
    let pool = atom_pool(theory);
    let k = r.gen_range(0..=max.min(pool.len()));
    Support::new(pool.choose_multiple(r, k).cloned().collect())
}

/// A random union of cells of `tag^arity` over `support`; never empty.
pub fn random_set(r: &mut Rng8, theory: Theory, tag: &str, arity: usize, support: &Support) -> DefSet {
    let cells = enumerate_cells(theory, support, arity);
    let mut chosen: Vec<_> = cells.iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
    if chosen.is_empty() {
        chosen.push(cells.choose(r).expect("some cell").clone());
    }
    DefSet::new(theory, support.clone(), chosen.into_iter().map(|c| (tag.to_string(), c))).expect("enumerated")
}

pub fn small_rational(r: &mut Rng8) -> Rational {
    Rational::new(r.gen_range(-4..=4).into(), r.gen_range(1..=3).into())
}

/// A random function on `tag^arity` with random values per cell over a
/// random support.
pub fn random_scalarfun(r: &mut Rng8, theory: Theory, arity: usize) -> ScalarFun {
    let domain = DefSet::power(theory, "x", arity);
    let support = random_support(r, theory, 2);
    ScalarFun::from_fn(domain, &support, |_| {
        let v = if r.gen_bool(0.3) { Rational::from_integer(0.into()) } else { small_rational(r) };
        Ok(v)
    })
    .expect("total")
}

/// Concrete tuples of `tag^arity` drawn from a pool around the atoms.
pub fn random_point(r: &mut Rng8, theory: Theory, tag: &str, arity: usize) -> Tuple {
    let values = (0..arity)
        .map(|_| {
            Value::Atom(match theory {
                Theory::Eq => Atom::int(r.gen_range(-2..8)),
                Theory::Dlo => Atom::frac(r.gen_range(-12..12), r.gen_range(1..5)),
            })
        })
        .collect();
    Tuple::new(tag, values)
}

/// A measure on `base` with up to four random types whose parameters come
/// from the truncation.
pub fn random_measure(r: &mut Rng8, base: &DefSet, t: &Truncation) -> Measure {
    let types: Vec<_> = materialize(&compactify(base), t)
        .expect("pool covers the base")
        .into_iter()
        .map(|x| decode(&x).expect("type tag"))
        .collect();
    let k = r.gen_range(1..=4.min(types.len()));
    let picked: Vec<_> = types.choose_multiple(r, k).cloned().collect();
    let weights: Vec<i64> = picked.iter().map(|_| r.gen_range(1..=5)).collect();
    let total: i64 = weights.iter().sum();
    Measure::new(
        base,
        picked.into_iter().zip(weights).map(|(p, w)| (p, Rational::new(w.into(), total.into()))),
    )
    .expect("normalized")
}

/// A truncation covering every atom of [`atom_pool`] with room to spare.
pub fn wide_pool(theory: Theory) -> Truncation {
    match theory {
        Theory::Eq => Truncation::eq(7),
        Theory::Dlo => Truncation::dlo(&atom_pool(theory)),
    }
}

/// A random total map `x^n -> y^k`; each cell picks input coordinates or
/// support atoms for its outputs.
pub fn random_deffun(r: &mut Rng8, theory: Theory, n: usize, k: usize, support: &Support) -> DefFun {
    let domain = DefSet::power(theory, "x", n);
    let codomain = DefSet::power(theory, "y", k);
    DefFun::from_fn(domain, codomain, support, |x| {
        let mut choices: Vec<Value> = x.values.clone();
        choices.extend(support.atoms().iter().cloned().map(Value::Atom));
        let values = (0..k).map(|_| choices.choose(r).expect("nonempty").clone()).collect();
        Ok(Tuple::new("y", values))
    })
    .expect("projections and constants")
}

/// Every type of `compactify(s)` whose parameters lie in the pool.
pub fn pooled_types(s: &DefSet, t: &Truncation) -> Vec<TypeDesc> {
    materialize(&compactify(s), t)
        .expect("pool covers the set")
        .iter()
        .map(|x| decode(x).expect("type tag"))
        .collect()
}
