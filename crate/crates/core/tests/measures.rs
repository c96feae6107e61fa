mod common;

use atomcompact::measure::product_integral;
use atomcompact::{
    kleisli_compose, materialize, product_measure, pushforward, DefFun, DefSet, Kernel, Measure, ProductOrder, Rational,
    ScalarFun, Support, Theory, Truncation, Tuple, TypeDesc,
};
use common::*;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn theory_of(bit: bool) -> Theory {
    if bit {
        Theory::Dlo
    } else {
        Theory::Eq
    }
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

fn a() -> DefSet {
    DefSet::power(Theory::Eq, "a", 1)
}

/// A kernel `x^1 -> tag^1` whose values mix up to two types with parameters
/// among the input and `support`.
fn random_kernel(r: &mut Rng8, theory: Theory, from: &str, to: &str, support: &Support) -> Kernel {
    let dom = DefSet::power(theory, from, 1);
    let cod = DefSet::power(theory, to, 1);
    Kernel::from_fn(&dom, &cod, support, |x| {
        let pool = Support::new(x.standard_atoms()).union(support);
        let t = Truncation::new(theory, pool.atoms().to_vec()).expect("sorted, distinct");
        let types = pooled_types(&cod, &t);
        let k = r.gen_range(1..=2.min(types.len()));
        let picked: Vec<TypeDesc> = types.choose_multiple(r, k).cloned().collect();
        Ok(if k == 1 {
            vec![(picked[0].clone(), Rational::one())]
        } else {
            let w = Rational::new(r.gen_range(1..=3).into(), 4.into());
            vec![(picked[0].clone(), w.clone()), (picked[1].clone(), Rational::one() - w)]
        })
    })
    .expect("definable kernel")
}

fn same_kernel(k1: &Kernel, k2: &Kernel, t: &Truncation) -> Result<(), TestCaseError> {
    for x in materialize(k1.domain(), t).unwrap() {
        prop_assert_eq!(k1.at(&x).unwrap(), k2.at(&x).unwrap(), "at {}", x);
    }
    Ok(())
}

#[test]
fn evaluation_and_expectation_examples() {
    let three = DefSet::finite(Theory::Eq, &[Tuple::atoms("a", &[3])]).unwrap();
    let mu = Measure::new(
        &a(),
        [
            (TypeDesc::principal(Theory::Eq, &Tuple::atoms("a", &[3])).unwrap(), half()),
            (TypeDesc::fresh("a"), half()),
        ],
    )
    .unwrap();
    assert_eq!(mu.eval(&three).unwrap(), half());
    assert_eq!(mu.eval(&a().difference(&three).unwrap()).unwrap(), half());
    assert_eq!(mu.eval(&a()).unwrap(), Rational::one());

    let c = Rational::new(7.into(), 3.into());
    assert_eq!(mu.expectation(&ScalarFun::constant(&a(), c.clone())).unwrap(), c);
    assert_eq!(mu.expectation(&ScalarFun::indicator(&a(), &three, Rational::one()).unwrap()).unwrap(), half());
    let twice = ScalarFun::indicator(&a(), &a().difference(&three).unwrap(), Rational::from_integer(2.into())).unwrap();
    assert_eq!(mu.expectation(&twice).unwrap(), Rational::one());

    let point = Measure::point(&a(), &Tuple::atoms("a", &[4])).unwrap();
    assert_eq!(point.eval(&three).unwrap(), Rational::zero());
}

#[test]
fn fresh_product_misses_the_diagonal() {
    let fresh = Measure::dirac(&a(), TypeDesc::fresh("a")).unwrap();
    let diag = DefSet::new(
        Theory::Eq,
        Support::empty(),
        [(
            "(a,a)".to_string(),
            atomcompact::Cell::Eq(vec![atomcompact::cell::EqSlot::Block(0), atomcompact::cell::EqSlot::Block(0)]),
        )],
    )
    .unwrap();
    for order in [ProductOrder::LeftFirst, ProductOrder::RightFirst] {
        let m = product_measure(&fresh, &fresh, order).unwrap();
        assert_eq!(m.eval(&diag).unwrap(), Rational::zero());
        assert_eq!(m.eval(&diag.complement(Some(m.base())).unwrap()).unwrap(), Rational::one());
    }
}

#[test]
fn point_mass_kernels_compose_like_maps() {
    let mut r = rng(11);
    let t = wide_pool(Theory::Eq);
    for _ in 0..10 {
        let support = random_support(&mut r, Theory::Eq, 2);
        let f = random_deffun(&mut r, Theory::Eq, 1, 2, &support);
        let g = DefFun::from_fn(f.codomain().clone(), DefSet::power(Theory::Eq, "z", 1), &support, |y| {
            Ok(Tuple::new("z", vec![y.values[1].clone()]))
        })
        .unwrap();
        let composed = kleisli_compose(&Kernel::from_deffun(&f).unwrap(), &Kernel::from_deffun(&g).unwrap()).unwrap();
        let direct = Kernel::from_deffun(&f.then(&g).unwrap()).unwrap();
        same_kernel(&composed, &direct, &t).unwrap();
        for p in pooled_types(f.domain(), &t) {
            let mu = Measure::dirac(f.domain(), p.clone()).unwrap();
            let pushed = Measure::dirac(g.codomain(), pushforward(&f.then(&g).unwrap(), &p).unwrap()).unwrap();
            assert_eq!(composed.extend(&mu).unwrap(), pushed);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn finite_additivity_and_monotonicity(seed in any::<u64>(), dlo in any::<bool>(), n in 1usize..=2) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let base = DefSet::power(theory, "x", n);
        let t = match theory {
            Theory::Eq => Truncation::eq(3),
            Theory::Dlo => Truncation::new(theory, atom_pool(theory)[..2].to_vec()).unwrap(),
        };
        let mu = random_measure(&mut r, &base, &t);
        let s1 = random_support(&mut r, theory, 2);
        let s2 = random_support(&mut r, theory, 2);
        let d1 = random_set(&mut r, theory, "x", n, &s1);
        let d2 = random_set(&mut r, theory, "x", n, &s2).difference(&d1).unwrap();
        let u = d1.union(&d2).unwrap();
        prop_assert_eq!(mu.eval(&u).unwrap(), mu.eval(&d1).unwrap() + mu.eval(&d2).unwrap());
        prop_assert!(mu.eval(&d1).unwrap() <= mu.eval(&u).unwrap());
        prop_assert_eq!(mu.eval(&base).unwrap(), Rational::one());
        prop_assert_eq!(mu.eval(&DefSet::empty(theory)).unwrap(), Rational::zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eq_products_are_symmetric(seed in any::<u64>(), n in 1usize..=2, k in 1usize..=2) {
        let mut r = rng(seed);
        let t = Truncation::eq(3);
        let p = random_measure(&mut r, &DefSet::power(Theory::Eq, "x", n), &t);
        let q = random_measure(&mut r, &DefSet::power(Theory::Eq, "y", k), &t);
        prop_assert_eq!(
            product_measure(&p, &q, ProductOrder::LeftFirst).unwrap(),
            product_measure(&p, &q, ProductOrder::RightFirst).unwrap()
        );
    }

    #[test]
    fn products_match_the_integral_on_cells(seed in any::<u64>(), dlo in any::<bool>(), left in any::<bool>()) {
        let theory = theory_of(dlo);
        let order = if left { ProductOrder::LeftFirst } else { ProductOrder::RightFirst };
        let mut r = rng(seed);
        let t = match theory {
            Theory::Eq => Truncation::eq(2),
            Theory::Dlo => Truncation::new(theory, atom_pool(theory)[..2].to_vec()).unwrap(),
        };
        let p = random_measure(&mut r, &DefSet::power(theory, "x", 1), &t);
        let q = random_measure(&mut r, &DefSet::power(theory, "y", 1), &t);
        let m = product_measure(&p, &q, order).unwrap();
        let support = Support::new(t.pool().to_vec());
        let refined = m.base().refine(&support).unwrap();
        for cell in refined.cells() {
            let d = DefSet::new(theory, support.clone(), [cell.clone()]).unwrap();
            prop_assert_eq!(m.eval(&d).unwrap(), product_integral(&p, &q, order, &d).unwrap());
        }
    }

    #[test]
    fn kleisli_unit_laws(seed in any::<u64>(), dlo in any::<bool>()) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let support = random_support(&mut r, theory, 2);
        let k = random_kernel(&mut r, theory, "x", "y", &support);
        let t = wide_pool(theory);
        same_kernel(&kleisli_compose(&Kernel::unit(k.domain()), &k).unwrap(), &k, &t)?;
        same_kernel(&kleisli_compose(&k, &Kernel::unit(k.codomain())).unwrap(), &k, &t)?;
    }

    #[test]
    fn kleisli_associativity(seed in any::<u64>(), dlo in any::<bool>()) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let s1 = random_support(&mut r, theory, 1);
        let s2 = random_support(&mut r, theory, 1);
        let s3 = random_support(&mut r, theory, 1);
        let f = random_kernel(&mut r, theory, "x", "y", &s1);
        let g = random_kernel(&mut r, theory, "y", "z", &s2);
        let h = random_kernel(&mut r, theory, "z", "w", &s3);
        let lhs = kleisli_compose(&kleisli_compose(&f, &g).unwrap(), &h).unwrap();
        let rhs = kleisli_compose(&f, &kleisli_compose(&g, &h).unwrap()).unwrap();
        same_kernel(&lhs, &rhs, &wide_pool(theory))?;
    }
}
