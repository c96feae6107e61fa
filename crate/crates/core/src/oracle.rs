//! Brute-force checks over a finite pool of concrete atoms.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atom::{format_rational, Atom, Rational, Support, Theory, Value};
use crate::automata::{Automaton, DetAutomaton, ProbAutomaton, UltraAutomaton, WeightedAutomaton};
use crate::cell::enumerate_cells;
use crate::defset::{pair, DefSet, Tuple};
use crate::error::{Error, Result};
use crate::freelin::{eval_basis, BasisElem};
use crate::linalg;
use crate::piecewise::ScalarFun;

/// A finite pool of atoms standing in for the whole structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    theory: Theory,
    pool: Vec<Atom>,
}

impl Truncation {
    /// The equality atoms `0..m`.
    pub fn eq(m: usize) -> Truncation {
        Truncation {
            theory: Theory::Eq,
            pool: (0..m as i64).map(Atom::int).collect(),
        }
    }

    /// The given rationals, the midpoints between neighbours, and one point
    /// beyond each end.
    pub fn dlo(points: &[Atom]) -> Truncation {
        let sorted: Vec<Atom> = points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let mut pool = Vec::new();
        match (sorted.first(), sorted.last()) {
            (Some(lo), Some(hi)) => {
                let one = Rational::from_integer(1.into());
                pool.push(Atom(&lo.0 - &one));
                for w in sorted.windows(2) {
                    pool.push(w[0].clone());
                    pool.push(Atom((&w[0].0 + &w[1].0) / Rational::from_integer(2.into())));
                }
                pool.push(hi.clone());
                pool.push(Atom(&hi.0 + &one));
            }
            _ => pool.push(Atom::int(0)),
        }
        Truncation {
            theory: Theory::Dlo,
            pool,
        }
    }

    /// A pool containing `support`: over equality atoms together with `room`
    /// atoms outside it, over the rationals as in [`Truncation::dlo`].
    pub fn around(theory: Theory, support: &Support, room: usize) -> Truncation {
        match theory {
            Theory::Eq => {
                let base = support.fresh_base();
                let mut pool = support.atoms().to_vec();
                pool.extend((0..room).map(|i| Atom(Rational::from_integer(&base + i))));
                Truncation { theory, pool }
            }
            Theory::Dlo => Truncation::dlo(support.atoms()),
        }
    }

    /// An explicit pool; DLO pools must be strictly increasing.
    pub fn new(theory: Theory, pool: Vec<Atom>) -> Result<Truncation> {
        for a in &pool {
            a.check_theory(theory)?;
        }
        let ok = match theory {
            Theory::Dlo => pool.windows(2).all(|w| w[0] < w[1]),
            Theory::Eq => pool.iter().collect::<BTreeSet<_>>().len() == pool.len(),
        };
        if !ok {
            return Err(Error::PoolTooSmall("pool has repeated or unordered atoms".into()));
        }
        Ok(Truncation { theory, pool })
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    pub fn pool(&self) -> &[Atom] {
        &self.pool
    }

    pub fn covers(&self, support: &Support) -> bool {
        support.atoms().iter().all(|a| self.pool.contains(a))
    }

    fn check_covers(&self, support: &Support) -> Result<()> {
        match support.atoms().iter().find(|a| !self.pool.contains(a)) {
            Some(a) => Err(Error::PoolTooSmall(format!("support atom {a} is not in the pool"))),
            None => Ok(()),
        }
    }

    fn tuples(&self, n: usize) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|t| {
                    self.pool.iter().map(move |a| {
                        let mut t = t.clone();
                        t.push(Value::Atom(a.clone()));
                        t
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pool {{", self.theory.name())?;
        for (i, a) in self.pool.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// All tuples over the pool that belong to `s`.
pub fn materialize(s: &DefSet, t: &Truncation) -> Result<BTreeSet<Tuple>> {
    s.theory().expect(t.theory)?;
    t.check_covers(s.support())?;
    let mut out = BTreeSet::new();
    for (tag, n) in s.tags() {
        for values in t.tuples(n) {
            let x = Tuple::new(tag.clone(), values);
            if s.member(&x)? {
                out.insert(x);
            }
        }
    }
    Ok(out)
}

/// A dual vector to be evaluated on concrete points.
#[derive(Debug, Clone)]
pub enum Probe {
    Fun(ScalarFun),
    Basis(BasisElem),
}

impl Probe {
    fn support(&self) -> Support {
        match self {
            Probe::Fun(f) => f.support().clone(),
            Probe::Basis(BasisElem::Type(p)) => Support::new(p.support()),
            Probe::Basis(BasisElem::Rect { rect, .. }) => Support::new(rect.bounds.iter().flatten().cloned().collect()),
        }
    }

    fn eval(&self, x: &Tuple) -> Result<Rational> {
        match self {
            Probe::Fun(f) => {
                if f.domain().member(x)? {
                    f.eval(x)
                } else {
                    Ok(Rational::zero())
                }
            }
            Probe::Basis(b) => Ok(if b.arity() == x.arity() && eval_basis(b, x)? {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            }),
        }
    }

    fn rank_and_arity(&self) -> (usize, usize) {
        match self {
            Probe::Basis(BasisElem::Type(p)) => (p.rank(), p.arity()),
            Probe::Basis(b) => (0, b.arity()),
            Probe::Fun(f) => (0, f.domain().tags().values().copied().max().unwrap_or(0)),
        }
    }
}

/// Pool size needed for equality-atom independence checks: the parameters,
/// room for every generic coordinate, and two spare atoms.
pub fn eq_pool_size(probes: &[Probe]) -> usize {
    let params: BTreeSet<Atom> = probes.iter().flat_map(|p| p.support().atoms().to_vec()).collect();
    let (rank, arity) = probes
        .iter()
        .map(Probe::rank_and_arity)
        .fold((0, 0), |(r, a), (r2, a2)| (r.max(r2), a.max(a2)));
    params.len() + 2 * rank * arity + 2
}

/// Exact rank of the matrix of `probes` evaluated on the materialized points
/// of `domain`. Every cell of `domain` over the joint support must have a
/// point in the pool.
pub fn rank_of(domain: &DefSet, probes: &[Probe], t: &Truncation) -> Result<usize> {
    let mut support = domain.support().clone();
    for p in probes {
        support = support.union(&p.support());
    }
    t.check_covers(&support)?;
    let points = materialize(domain, t)?;
    let refined = domain.refine(&support)?;
    for (tag, cell) in refined.cells() {
        if !points.iter().any(|x| &x.tag == tag && cell.contains(&support, &x.values)) {
            return Err(Error::PoolTooSmall(format!("cell {tag}{cell} has no point in the pool")));
        }
    }
    let rows = points
        .iter()
        .map(|x| probes.iter().map(|p| p.eval(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(linalg::rank(&rows))
}

/// `n_words` words over the materialized alphabet with lengths up to
/// `max_len`, from a seeded generator.
pub fn sample_words(alphabet: &DefSet, t: &Truncation, n_words: usize, max_len: usize, seed: u64) -> Result<Vec<Vec<Tuple>>> {
    let letters: Vec<Tuple> = materialize(alphabet, t)?.into_iter().collect();
    if letters.is_empty() {
        return Ok(vec![Vec::new(); n_words]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_words)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            (0..len).map(|_| letters[rng.gen_range(0..letters.len())].clone()).collect()
        })
        .collect())
}

/// Agreement counts of a differential run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub kind: String,
    pub check: String,
    pub truncation: Truncation,
    pub seed: u64,
    pub words: usize,
    pub agreements: usize,
    pub disagreements: Vec<String>,
}

impl DiffReport {
    pub fn all_agree(&self) -> bool {
        self.agreements == self.words
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind: {}", self.kind)?;
        writeln!(f, "check: {}", self.check)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "{}", self.truncation)?;
        write!(f, "agreement: {}/{}", self.agreements, self.words)?;
        for w in &self.disagreements {
            write!(f, "\ndisagree: {w}")?;
        }
        Ok(())
    }
}

fn show_word(w: &[Tuple]) -> String {
    w.iter().map(Tuple::to_string).collect::<Vec<_>>().join(" ")
}

/// The det automaton as a finite table over the pool.
fn det_table_run(a: &DetAutomaton, states: &BTreeSet<Tuple>, w: &[Tuple]) -> Result<bool> {
    let mut s = a.initial.clone();
    for l in w {
        if !states.contains(&s) {
            return Err(Error::PoolTooSmall(format!("state {s} left the pool")));
        }
        s = a.delta.apply(&pair(l, &s))?;
    }
    a.finals.member(&s)
}

/// The weighted automaton as a matrix over the pool states.
fn weighted_matrix_run(a: &WeightedAutomaton, states: &[Tuple], w: &[Tuple]) -> Result<Rational> {
    let mut v: Vec<Rational> = states.iter().map(|s| a.initial.get(s)).collect();
    for l in w {
        let k = a.letter_kernel(l)?;
        let mut next = vec![Rational::zero(); states.len()];
        for (i, s) in states.iter().enumerate() {
            if v[i].is_zero() {
                continue;
            }
            for (j, y) in states.iter().enumerate() {
                next[j] += &v[i] * k.eval(&pair(s, y))?;
            }
        }
        v = next;
    }
    let mut sum = Rational::zero();
    for (s, c) in states.iter().zip(&v) {
        sum += c * a.final_weight.eval(s)?;
    }
    Ok(sum)
}

fn ultra_check(a: &UltraAutomaton, words: &[Vec<Tuple>]) -> Result<(String, Vec<bool>, Vec<String>)> {
    let d = a.determinize()?;
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for w in words {
        let (x, y) = (a.accepts(w)?, d.run(w)?);
        if x != y {
            bad.push(format!("{}: ultra {x}, determinized {y}", show_word(w)));
        }
        ok.push(x == y);
    }
    Ok(("ultra run vs determinized run".into(), ok, bad))
}

fn prob_check(a: &ProbAutomaton, words: &[Vec<Tuple>]) -> Result<(String, Vec<bool>, Vec<String>)> {
    let wa = a.to_weighted()?;
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for w in words {
        let (x, y) = (a.run(w)?, wa.run(w)?);
        if x != y {
            bad.push(format!("{}: prob {}, weighted {}", show_word(w), format_rational(&x), format_rational(&y)));
        }
        ok.push(x == y);
    }
    Ok(("prob run vs weighted run over types".into(), ok, bad))
}

/// Runs sampled words through the automaton and an independent route, and
/// counts agreements. Det machines are compared with their finite table over
/// the pool, ultra machines with their determinization, weighted machines
/// with the matrix over the pool (and the monoid for equality atoms), and
/// probabilistic machines with their weighted form.
pub fn differential_run(a: &Automaton, t: &Truncation, n_words: usize, max_len: usize, seed: u64) -> Result<DiffReport> {
    let words = sample_words(a.alphabet(), t, n_words, max_len, seed)?;
    let (check, ok, bad) = match a {
        Automaton::Det(d) => {
            let states = materialize(&d.states, t)?;
            let mut ok = Vec::new();
            let mut bad = Vec::new();
            for w in &words {
                let (x, y) = (d.run(w)?, det_table_run(d, &states, w)?);
                if x != y {
                    bad.push(format!("{}: run {x}, table {y}", show_word(w)));
                }
                ok.push(x == y);
            }
            ("det run vs finite table".to_string(), ok, bad)
        }
        Automaton::Ultra(u) => ultra_check(u, &words)?,
        Automaton::Weighted(wa) => {
            let states: Vec<Tuple> = materialize(&wa.states, t)?.into_iter().collect();
            let monoid = if wa.states.theory() == Theory::Eq { Some(wa.to_monoid()?) } else { None };
            let mut ok = Vec::new();
            let mut bad = Vec::new();
            for w in &words {
                let x = wa.run(w)?;
                let y = weighted_matrix_run(wa, &states, w)?;
                let z = match &monoid {
                    Some(m) => m.run(w)?,
                    None => x.clone(),
                };
                if x != y || x != z {
                    bad.push(format!(
                        "{}: run {}, matrix {}, monoid {}",
                        show_word(w),
                        format_rational(&x),
                        format_rational(&y),
                        format_rational(&z)
                    ));
                }
                ok.push(x == y && x == z);
            }
            let check = if monoid.is_some() { "weighted run vs pool matrix vs monoid" } else { "weighted run vs pool matrix" };
            (check.to_string(), ok, bad)
        }
        Automaton::Prob(p) => prob_check(p, &words)?,
    };
    Ok(DiffReport {
        kind: a.kind().into(),
        check,
        truncation: t.clone(),
        seed,
        words: words.len(),
        agreements: ok.iter().filter(|b| **b).count(),
        disagreements: bad,
    })
}

/// Every orbit cell of arity `n` over the empty support has a point in the
/// pool.
pub fn inhabits_all_cells(t: &Truncation, n: usize) -> bool {
    let points = t.tuples(n);
    enumerate_cells(t.theory, &Support::empty(), n)
        .iter()
        .all(|c| points.iter().any(|p| c.contains(&Support::empty(), p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::ratio;
    use crate::freelin::BasisElem;
    use crate::machines;
    use crate::types::TypeDesc;

    #[test]
    fn materialize_examples() {
        let a = DefSet::power(Theory::Eq, "a", 1);
        assert_eq!(materialize(&a, &Truncation::eq(4)).unwrap().len(), 4);
        let a2 = DefSet::power(Theory::Eq, "p", 2);
        let distinct = a2.difference(&DefSet::new(Theory::Eq, Support::empty(), [("p".to_string(), crate::cell::Cell::Eq(vec![crate::cell::EqSlot::Block(0), crate::cell::EqSlot::Block(0)]))]).unwrap()).unwrap();
        assert_eq!(materialize(&distinct, &Truncation::eq(3)).unwrap().len(), 6);
        let unit = DefSet::new(
            Theory::Dlo,
            Support::new(vec![Atom::int(0), Atom::int(1)]),
            [("q".to_string(), crate::cell::Cell::Dlo(vec![crate::cell::DloSlot::Gap { gap: 1, pos: 0 }]))],
        )
        .unwrap();
        let t = Truncation::new(Theory::Dlo, vec![Atom::int(0), Atom::frac(1, 2), Atom::int(1)]).unwrap();
        let pts = materialize(&unit, &t).unwrap();
        assert_eq!(pts.into_iter().collect::<Vec<_>>(), vec![Tuple::new("q", vec![Value::Atom(Atom::frac(1, 2))])]);
        assert!(matches!(materialize(&unit, &Truncation::eq(3)), Err(Error::TheoryMismatch { .. })));
        let far = Truncation::new(Theory::Dlo, vec![Atom::int(5)]).unwrap();
        assert!(matches!(materialize(&unit, &far), Err(Error::PoolTooSmall(_))));
    }

    #[test]
    fn rank_examples() {
        let a = DefSet::power(Theory::Eq, "a", 1);
        let fresh = Probe::Basis(BasisElem::Type(TypeDesc::fresh("a")));
        let zero = Probe::Basis(BasisElem::Type(TypeDesc::principal(Theory::Eq, &Tuple::atoms("a", &[0])).unwrap()));
        assert_eq!(eq_pool_size(&[fresh.clone(), zero.clone()]), 5);
        assert_eq!(rank_of(&a, &[fresh.clone(), zero.clone()], &Truncation::eq(3)).unwrap(), 2);
        assert_eq!(rank_of(&a, &[fresh.clone(), zero.clone()], &Truncation::eq(5)).unwrap(), 2);
        assert_eq!(rank_of(&a, &[zero.clone(), zero.clone()], &Truncation::eq(5)).unwrap(), 1);
        assert!(matches!(rank_of(&a, &[fresh, zero], &Truncation::eq(1)), Err(Error::PoolTooSmall(_))));

        let q = DefSet::power(Theory::Dlo, "q", 1);
        let one = Probe::Basis(BasisElem::rect1("q", true, None));
        let star = Probe::Basis(BasisElem::rect1("q", false, Some(Atom::int(0))));
        let below = Probe::Basis(BasisElem::rect1("q", true, Some(Atom::int(0))));
        let t = Truncation::new(Theory::Dlo, vec![Atom::int(-1), Atom::int(0), Atom::int(1)]).unwrap();
        assert_eq!(rank_of(&q, &[one, star, below], &t).unwrap(), 3);
    }

    #[test]
    fn pools_around_a_support() {
        let s = Support::new(vec![Atom::int(5), Atom::int(9)]);
        let t = Truncation::around(Theory::Eq, &s, 2);
        assert!(t.covers(&s));
        assert_eq!(t.pool().len(), 4);
        assert_eq!(Truncation::around(Theory::Dlo, &s, 2).pool().len(), 5);
    }

    #[test]
    fn dlo_pool_has_midpoints() {
        let t = Truncation::dlo(&[Atom::int(0), Atom::int(1)]);
        assert_eq!(t.pool().len(), 5);
        assert_eq!(t.pool()[2], Atom(ratio(1, 2)));
        assert!(inhabits_all_cells(&Truncation::dlo(&[Atom::int(0), Atom::int(1), Atom::int(2)]), 2));
    }

    #[test]
    fn differential_examples() {
        let t = Truncation::eq(5);
        let m = Automaton::Ultra(machines::erase_register());
        let r = differential_run(&m, &t, 100, 6, 7).unwrap();
        assert_eq!((r.words, r.agreements), (100, 100));
        let empty = differential_run(&m, &t, 0, 6, 7).unwrap();
        assert_eq!(empty.words, 0);
        assert!(empty.all_agree());
        let det = Automaton::Det(machines::last_equals_first());
        assert!(differential_run(&det, &t, 50, 5, 1).unwrap().all_agree());
        let w = Automaton::Weighted(machines::count_first_letter());
        assert!(differential_run(&w, &Truncation::eq(4), 30, 4, 2).unwrap().all_agree());
        let p = Automaton::Prob(machines::coin_flip());
        assert!(differential_run(&p, &t, 30, 4, 3).unwrap().all_agree());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = DefSet::power(Theory::Eq, "a", 1);
        let t = Truncation::eq(4);
        assert_eq!(sample_words(&a, &t, 20, 5, 9).unwrap(), sample_words(&a, &t, 20, 5, 9).unwrap());
        assert_ne!(sample_words(&a, &t, 20, 5, 9).unwrap(), sample_words(&a, &t, 20, 5, 10).unwrap());
    }
}
