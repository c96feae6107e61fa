//! Small example machines, used by the tests, the CLI samples and the
//! benchmarks.

use num_traits::One;

use crate::atom::{ratio, Atom, Rational, Support, Theory, Value};
use crate::automata::{DetAutomaton, ProbAutomaton, UltraAutomaton, WeightedAutomaton};
use crate::compact::{compactify, encode_tuple, parse_type_tag};
use crate::defset::{DefSet, Tuple};
use crate::error::Result;
use crate::freelin::FreeVec;
use crate::measure::{template_of, Kernel, Measure};
use crate::piecewise::{DefFun, Piecewise, ScalarFun, Term};
use crate::types::{DloComp, OneType, Type, TypeBody, TypeDesc};

fn one() -> Rational {
    Rational::one()
}

fn atoms(theory: Theory, tag: &str) -> DefSet {
    DefSet::power(theory, tag, 1)
}

fn point(tag: &str) -> DefSet {
    DefSet::power(Theory::Eq, tag, 0)
}

fn union(sets: &[DefSet]) -> DefSet {
    sets.iter()
        .skip(1)
        .fold(sets[0].clone(), |acc, s| acc.union(s).expect("same theory"))
}

fn ultra_delta(
    alphabet: &DefSet,
    states: &DefSet,
    mut f: impl FnMut(&Tuple) -> TypeDesc,
) -> Result<Piecewise<crate::types::TypeTemplate>> {
    let dom = alphabet.product(states)?;
    let support = dom.support().clone();
    Piecewise::from_fn(dom, &support, |x| template_of(&f(x), &x.values, &support))
}

/// Last letter equals first: states `⊥ ⊔ y(A) ⊔ n(A)`, remembering the first
/// letter and whether the latest one matched it.
pub fn last_equals_first() -> DetAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = union(&[point("start"), atoms(Theory::Eq, "y"), atoms(Theory::Eq, "n")]);
    let dom = alphabet.product(&states).expect("same theory");
    let delta = DefFun::from_fn(dom, states.clone(), &Support::empty(), |x| {
        let b = x.values[0].clone();
        Ok(match x.tag.as_str() {
            "(a,start)" => Tuple::new("y", vec![b]),
            _ if x.values[1] == b => Tuple::new("y", vec![b]),
            _ => Tuple::new("n", vec![x.values[1].clone()]),
        })
    })
    .expect("total");
    let finals = atoms(Theory::Eq, "y");
    DetAutomaton::new(states, alphabet, delta, Tuple::new("start", vec![]), finals).expect("well formed")
}

/// Parity of the word length over a one-letter alphabet.
pub fn parity() -> DetAutomaton {
    let alphabet = point("t");
    let states = union(&[point("even"), point("odd")]);
    let dom = alphabet.product(&states).expect("same theory");
    let delta = DefFun::from_fn(dom, states.clone(), &Support::empty(), |x| {
        Ok(Tuple::new(if x.tag == "(t,even)" { "odd" } else { "even" }, vec![]))
    })
    .expect("total");
    DetAutomaton::new(states, alphabet, delta, Tuple::new("even", vec![]), point("even")).expect("well formed")
}

fn fresh_finals(tag: &str) -> DefSet {
    DefSet::finite(Theory::Eq, &[encode_tuple(&TypeDesc::fresh(tag))]).expect("standard")
}

/// Holds the last atom read; `#` erases it. Accepts words ending in `#`.
pub fn erase_register() -> UltraAutomaton {
    let alphabet = union(&[atoms(Theory::Eq, "a"), point("#")]);
    let states = atoms(Theory::Eq, "r");
    let delta = ultra_delta(&alphabet, &states, |x| {
        if x.tag.starts_with("(#,") {
            TypeDesc::fresh("r")
        } else {
            TypeDesc::principal(Theory::Eq, &Tuple::new("r", vec![x.values[0].clone()])).expect("standard")
        }
    })
    .expect("total");
    UltraAutomaton::new(states, alphabet, delta, Tuple::atoms("r", &[0]), fresh_finals("r")).expect("well formed")
}

/// Holds the last atom read and erases it when the same atom is read twice
/// in a row. Accepts after such a repetition.
pub fn erase_on_repeat() -> UltraAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = atoms(Theory::Eq, "r");
    let delta = ultra_delta(&alphabet, &states, |x| {
        if x.values[0] == x.values[1] {
            TypeDesc::fresh("r")
        } else {
            TypeDesc::principal(Theory::Eq, &Tuple::new("r", vec![x.values[0].clone()])).expect("standard")
        }
    })
    .expect("total");
    UltraAutomaton::new(states, alphabet, delta, Tuple::atoms("r", &[0]), fresh_finals("r")).expect("well formed")
}

/// Over the rationals: after reading `c`, the state sits just above `c` if
/// `c` exceeded the previous state and just below it otherwise. Accepts in
/// the first case.
pub fn rise_or_fall() -> UltraAutomaton {
    let alphabet = atoms(Theory::Dlo, "a");
    let states = atoms(Theory::Dlo, "q");
    let delta = ultra_delta(&alphabet, &states, |x| {
        let Value::Atom(c) = &x.values[0] else { unreachable!("standard representative") };
        let one = if crate::atom::dlo_cmp(&x.values[0], &x.values[1]).is_gt() {
            OneType::Right(c.clone())
        } else {
            OneType::Left(c.clone())
        };
        Type::new("q", TypeBody::Dlo(vec![DloComp::new(one, 0)]))
    })
    .expect("total");
    let all = compactify(&states);
    let finals = DefSet::new(
        Theory::Dlo,
        all.support().clone(),
        all.cells()
            .filter(|(t, _)| {
                matches!(parse_type_tag(t), Some((_, _, TypeBody::Dlo(c))) if matches!(c[0].one, OneType::Right(_)))
            })
            .cloned(),
    )
    .expect("cells of a compactification");
    UltraAutomaton::new(states, alphabet, delta, Tuple::new("q", vec![Value::Atom(Atom::int(0))]), finals)
        .expect("well formed")
}

/// Every state is kept as is; the value of every word is 1.
pub fn counting() -> WeightedAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = atoms(Theory::Eq, "s");
    let dom = alphabet.product(&states).expect("same theory");
    let delta = Piecewise::from_fn(dom, &Support::empty(), |_| Ok(vec![("s".to_string(), vec![Term::In(1)], one())]))
        .expect("total");
    let initial = FreeVec::unit(&states, Tuple::atoms("s", &[0])).expect("state");
    let final_weight = ScalarFun::constant(&states, one());
    WeightedAutomaton::new(states, alphabet, delta, initial, final_weight).expect("well formed")
}

/// The number of positions carrying the first letter. `u(a)` remembers the
/// first letter, `v(a)` holds one unit per counted position.
pub fn count_first_letter() -> WeightedAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = union(&[point("start"), atoms(Theory::Eq, "u"), atoms(Theory::Eq, "v")]);
    let dom = alphabet.product(&states).expect("same theory");
    let out = |tag: &str, i| (tag.to_string(), vec![Term::In(i)], one());
    let delta = Piecewise::from_fn(dom, &Support::empty(), |x| {
        Ok(match x.tag.as_str() {
            "(a,start)" => vec![out("u", 0), out("v", 0)],
            "(a,u)" if x.values[0] == x.values[1] => vec![out("u", 1), out("v", 1)],
            "(a,u)" => vec![out("u", 1)],
            _ => vec![out("v", 1)],
        })
    })
    .expect("total");
    let initial = FreeVec::unit(&states, Tuple::new("start", vec![])).expect("state");
    let final_weight = ScalarFun::indicator(&states, &atoms(Theory::Eq, "v"), one()).expect("subset");
    WeightedAutomaton::new(states, alphabet, delta, initial, final_weight).expect("well formed")
}

/// Every letter flips a fair coin between the states `h` and `t`.
pub fn coin_flip() -> ProbAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = union(&[point("h"), point("t")]);
    let dom = alphabet.product(&states).expect("same theory");
    let half = ratio(1, 2);
    let delta = Kernel::from_fn(&dom, &states, &Support::empty(), |_| {
        Ok(vec![
            (TypeDesc::principal(Theory::Eq, &Tuple::new("h", vec![]))?, half.clone()),
            (TypeDesc::principal(Theory::Eq, &Tuple::new("t", vec![]))?, half.clone()),
        ])
    })
    .expect("total");
    let initial = Measure::point(&states, &Tuple::new("h", vec![])).expect("state");
    let final_weight = ScalarFun::indicator(&states, &point("h"), one()).expect("subset");
    ProbAutomaton::new(states, alphabet, delta, initial, final_weight).expect("well formed")
}

/// Every letter moves the register to a fresh atom. Starts at 3 and accepts
/// at 3.
pub fn erase_uniformly() -> ProbAutomaton {
    let alphabet = atoms(Theory::Eq, "a");
    let states = atoms(Theory::Eq, "s");
    let dom = alphabet.product(&states).expect("same theory");
    let delta = Kernel::from_fn(&dom, &states, &Support::empty(), |_| Ok(vec![(TypeDesc::fresh("s"), one())]))
        .expect("total");
    let three = Tuple::atoms("s", &[3]);
    let initial = Measure::point(&states, &three).expect("state");
    let at_three = DefSet::finite(Theory::Eq, &[three]).expect("standard");
    let final_weight = ScalarFun::indicator(&states, &at_three, one()).expect("subset");
    ProbAutomaton::new(states, alphabet, delta, initial, final_weight).expect("well formed")
}

pub fn det_machines() -> Vec<(&'static str, DetAutomaton)> {
    vec![("last-equals-first", last_equals_first()), ("parity", parity())]
}

pub fn ultra_machines() -> Vec<(&'static str, UltraAutomaton)> {
    vec![
        ("erase-register", erase_register()),
        ("erase-on-repeat", erase_on_repeat()),
        ("rise-or-fall", rise_or_fall()),
    ]
}

pub fn weighted_machines() -> Vec<(&'static str, WeightedAutomaton)> {
    vec![("counting", counting()), ("count-first-letter", count_first_letter())]
}

pub fn prob_machines() -> Vec<(&'static str, ProbAutomaton)> {
    vec![("coin-flip", coin_flip()), ("erase-uniformly", erase_uniformly())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::rat;

    #[test]
    fn parity_counts() {
        let m = parity();
        let t = Tuple::new("t", vec![]);
        assert!(m.run(&[]).unwrap());
        assert!(!m.run(std::slice::from_ref(&t)).unwrap());
        assert!(m.run(&[t.clone(), t]).unwrap());
    }

    #[test]
    fn rise_or_fall_runs() {
        let m = rise_or_fall();
        let w = |xs: &[i64]| xs.iter().map(|&x| Tuple::atoms("a", &[x])).collect::<Vec<_>>();
        assert!(m.accepts(&w(&[1])).unwrap());
        assert!(!m.accepts(&w(&[-1])).unwrap());
        assert!(!m.accepts(&w(&[1, 1])).unwrap());
        assert!(m.accepts(&w(&[2, 1, 1])).unwrap());
        assert!(!m.accepts(&w(&[2, 1])).unwrap());
    }

    #[test]
    fn counting_is_one() {
        let m = counting();
        let w: Vec<Tuple> = [4, 5].iter().map(|&x| Tuple::atoms("a", &[x])).collect();
        assert_eq!(m.run(&w).unwrap(), rat(1));
        assert_eq!(m.run(&[]).unwrap(), rat(1));
    }

    #[test]
    fn erase_uniformly_drops_to_zero() {
        let m = erase_uniformly();
        assert_eq!(m.run(&[]).unwrap(), rat(1));
        assert_eq!(m.run(&[Tuple::atoms("a", &[3])]).unwrap(), rat(0));
    }
}
