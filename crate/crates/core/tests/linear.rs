mod common;

use atomcompact::compact::decode;
use atomcompact::freelin::eval_basis;
use atomcompact::types::{EqComp, TypeBody};
use atomcompact::{
    decompose, materialize, Atom, BasisElem, BasisExpansion, DefSet, EndoAlgebra, FreeVec, HomSpace, Rational,
    ScalarFun, Support, Theory, Truncation, Tuple, TypeDesc,
};
use common::*;
use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn a(tag: &str) -> DefSet {
    DefSet::power(Theory::Eq, tag, 1)
}

fn hom_type(a0: Option<i64>, b0: Option<i64>) -> TypeDesc {
    let comp = |c: Option<i64>| c.map_or(EqComp::Fresh(0), |v| EqComp::Const(Atom::int(v)));
    TypeDesc::new("(x,y)", TypeBody::Eq(vec![comp(a0), comp(b0)]))
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

#[test]
fn hom_apply_examples() {
    let h = HomSpace::new(&a("x"), &a("y")).unwrap();
    let v = FreeVec::new(h.source(), [(Tuple::atoms("x", &[1]), int(2)), (Tuple::atoms("x", &[2]), int(3))]).unwrap();

    let constant = hom_type(None, Some(7));
    let out = h.apply(&constant, &v).unwrap();
    assert_eq!(out, FreeVec::new(h.target(), [(Tuple::atoms("y", &[7]), int(5))]).unwrap());

    let identity = hom_type(None, None);
    let out = h.apply(&identity, &v).unwrap();
    assert_eq!(out, FreeVec::new(h.target(), [(Tuple::atoms("y", &[1]), int(2)), (Tuple::atoms("y", &[2]), int(3))]).unwrap());

    let singleton = hom_type(Some(1), Some(4));
    assert_eq!(h.apply(&singleton, &v).unwrap(), FreeVec::new(h.target(), [(Tuple::atoms("y", &[4]), int(2))]).unwrap());

    let excluded = TypeDesc::new("(x,y)", TypeBody::Eq(vec![EqComp::Const(Atom::int(1)), EqComp::Fresh(0)]));
    assert!(!h.contains(&excluded).unwrap());
    assert!(h.apply(&excluded, &v).is_err());
}

#[test]
fn dlo_interval_expansion() {
    let q = DefSet::power(Theory::Dlo, "q", 1);
    let support = Support::new(vec![Atom::int(0), Atom::int(1)]);
    let f = ScalarFun::from_fn(q, &support, |x| {
        let v = x.values[0].as_atom().unwrap().value().clone();
        Ok(if v > int(0) && v < int(1) { int(1) } else { int(0) })
    })
    .unwrap();
    let e = decompose(&f).unwrap();
    let mut expect = BasisExpansion::default();
    expect.add(BasisElem::rect1("q", true, Some(Atom::int(1))), int(1));
    expect.add(BasisElem::rect1("q", true, Some(Atom::int(0))), int(-1));
    expect.add(BasisElem::rect1("q", false, Some(Atom::int(0))), int(-1));
    assert_eq!(e, expect);
    for (x, want) in [(-1, 0), (0, 0), (1, 0), (2, 0)] {
        let t = Tuple::new("q", vec![atomcompact::Value::Atom(Atom::int(x))]);
        assert_eq!(e.eval(&t).unwrap(), int(want));
    }
    let half = Tuple::new("q", vec![atomcompact::Value::Atom(Atom::frac(1, 2))]);
    assert_eq!(e.eval(&half).unwrap(), int(1));
}

#[test]
fn hom_maps_compose_like_functions_exhaustively() {
    let x = a("x");
    let alg = EndoAlgebra::new(&x).unwrap();
    let basis: Vec<TypeDesc> = materialize(alg.space().basis(), &Truncation::new(Theory::Eq, vec![Atom::int(1), Atom::int(2)]).unwrap())
        .unwrap()
        .iter()
        .map(|t| decode(t).unwrap())
        .collect();
    assert_eq!(basis.len(), 7);
    let v = FreeVec::new(&x, (0..4).map(|i| (Tuple::atoms("x", &[i]), int(i + 1)))).unwrap();
    let id = alg.identity();
    for b1 in &basis {
        let e1 = BasisExpansion::single(BasisElem::Type(b1.clone()));
        assert_eq!(alg.compose(&id, &e1).unwrap(), e1);
        assert_eq!(alg.compose(&e1, &id).unwrap(), e1);
        for b2 in &basis {
            let e2 = BasisExpansion::single(BasisElem::Type(b2.clone()));
            let composed = alg.compose(&e2, &e1).unwrap();
            assert_eq!(alg.apply(&composed, &v).unwrap(), alg.apply(&e2, &alg.apply(&e1, &v).unwrap()).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn eq_decomposition_round_trips(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let f = random_scalarfun(&mut r, Theory::Eq, n);
        let e = decompose(&f).unwrap();
        e.verify(&f).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut r, Theory::Eq, "x", n);
            prop_assert_eq!(e.eval(&x).unwrap(), f.eval(&x).unwrap());
        }
        for b in e.terms.keys() {
            prop_assert!(matches!(b, BasisElem::Type(_)));
        }
    }

    #[test]
    fn dlo_decomposition_round_trips(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let f = random_scalarfun(&mut r, Theory::Dlo, n);
        let e = decompose(&f).unwrap();
        e.verify(&f).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut r, Theory::Dlo, "x", n);
            prop_assert_eq!(e.eval(&x).unwrap(), f.eval(&x).unwrap());
        }
        if n == 1 {
            // Only the three one-dimensional families occur: x < q, x = q and 1.
            for b in e.terms.keys() {
                let BasisElem::Rect { rect, .. } = b else { panic!("{b} is not a rectangle") };
                prop_assert_eq!(rect.arity(), 1);
                prop_assert!(rect.strict[0] || rect.bounds[0].is_some());
            }
        }
    }

    #[test]
    fn basis_vectors_are_indicators(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let f = random_scalarfun(&mut r, Theory::Eq, n);
        let e = decompose(&f).unwrap();
        for b in e.terms.keys() {
            let one = decompose(&indicator_of(b, n)).unwrap();
            prop_assert_eq!(one, BasisExpansion::single(b.clone()));
        }
    }

    #[test]
    fn hom_expansions_act_linearly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = a("x");
        let alg = EndoAlgebra::new(&x).unwrap();
        let basis: Vec<TypeDesc> = materialize(alg.space().basis(), &Truncation::eq(3)).unwrap().iter().map(|t| decode(t).unwrap()).collect();
        let mut pick = || {
            let mut e = BasisExpansion::default();
            for b in basis.choose_multiple(&mut r, 2) {
                e.add(BasisElem::Type(b.clone()), Rational::new(r.gen_range(-3..=3).into(), 1.into()));
            }
            e
        };
        let (e1, e2) = (pick(), pick());
        let v = FreeVec::new(&x, (0..4).map(|i| (Tuple::atoms("x", &[i]), Rational::one()))).unwrap();
        let composed = alg.compose(&e2, &e1).unwrap();
        prop_assert_eq!(alg.apply(&composed, &v).unwrap(), alg.apply(&e2, &alg.apply(&e1, &v).unwrap()).unwrap());
    }
}

fn indicator_of(b: &BasisElem, n: usize) -> ScalarFun {
    let BasisElem::Type(p) = b else { unreachable!("equality expansion") };
    let domain = DefSet::power(Theory::Eq, "x", n);
    let support = Support::new(p.support());
    ScalarFun::from_fn(domain, &support, |x| Ok(if eval_basis(b, x)? { Rational::one() } else { int(0) })).unwrap()
}
