//! Definable automata: deterministic, ultra (erasing), weighted and
//! probabilistic, over letters that are tuples of atoms.

use std::fmt;

use num_traits::{One, Zero};

use crate::atom::{Rational, Support, Theory};
use crate::compact::{compactify, decode, encode_tuple};
use crate::defset::{pair, DefSet, Tuple};
use crate::error::{Error, Result};
use crate::freelin::{split_pair_tag, BasisExpansion, EndoAlgebra, FreeVec};
use crate::measure::{Kernel, Measure};
use crate::piecewise::{DefFun, Piecewise, ScalarFun, Term};
use crate::types::{read_back, type_member, Realizer, TypeDesc, TypeTemplate};

fn check_letter(alphabet: &DefSet, l: &Tuple) -> Result<()> {
    if alphabet.member(l).unwrap_or(false) {
        Ok(())
    } else {
        Err(Error::LetterNotInAlphabet(l.to_string()))
    }
}

/// A deterministic automaton with a definable transition function on
/// `alphabet × states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetAutomaton {
    pub states: DefSet,
    pub alphabet: DefSet,
    pub delta: DefFun,
    pub initial: Tuple,
    pub finals: DefSet,
}

impl DetAutomaton {
    pub fn new(states: DefSet, alphabet: DefSet, delta: DefFun, initial: Tuple, finals: DefSet) -> Result<DetAutomaton> {
        let dom = alphabet.product(&states)?;
        if !delta.domain().same_as(&dom)? {
            return Err(Error::NotTotal("transition domain is not alphabet × states".into()));
        }
        if !delta.codomain().is_subset(&states)? {
            return Err(Error::NotWellDefined("transitions leave the states".into()));
        }
        if !states.member(&initial)? {
            return Err(Error::NotInDomain(format!("initial state {initial}")));
        }
        if !finals.is_subset(&states)? {
            return Err(Error::NotASubset("final states".into()));
        }
        Ok(DetAutomaton {
            states,
            alphabet,
            delta,
            initial,
            finals,
        })
    }

    pub fn state_after(&self, word: &[Tuple]) -> Result<Tuple> {
        let mut s = self.initial.clone();
        for l in word {
            check_letter(&self.alphabet, l)?;
            s = self.delta.apply(&pair(l, &s))?;
        }
        Ok(s)
    }

    pub fn run(&self, word: &[Tuple]) -> Result<bool> {
        self.finals.member(&self.state_after(word)?)
    }
}

/// A deterministic automaton whose transitions land in the compactification
/// of the state set, i.e. may forget registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UltraAutomaton {
    pub states: DefSet,
    pub alphabet: DefSet,
    pub delta: Piecewise<TypeTemplate>,
    pub initial: Tuple,
    /// A subset of the compactification of the states.
    pub finals: DefSet,
}

impl UltraAutomaton {
    pub fn new(
        states: DefSet,
        alphabet: DefSet,
        delta: Piecewise<TypeTemplate>,
        initial: Tuple,
        finals: DefSet,
    ) -> Result<UltraAutomaton> {
        let dom = alphabet.product(&states)?;
        if !delta.domain().same_as(&dom)? {
            return Err(Error::NotTotal("transition domain is not alphabet × states".into()));
        }
        let delta = delta.refine(states.support())?;
        let support = delta.support().clone();
        for ((tag, cell), t) in delta.pieces() {
            let rep = cell.representative(&support);
            t.check(&rep, &support)?;
            let p = read_back(states.theory(), &Realizer::new().realize_type(&t.instantiate(&rep)));
            if !type_member(&p, &states)? {
                return Err(Error::NotWellDefined(format!("{t} on {tag}{cell} is not a type of a state")));
            }
        }
        if !states.member(&initial)? {
            return Err(Error::NotInDomain(format!("initial state {initial}")));
        }
        if !finals.is_subset(&compactify(&states))? {
            return Err(Error::NotASubsetOfCompactification("final states".into()));
        }
        Ok(UltraAutomaton {
            states,
            alphabet,
            delta,
            initial,
            finals,
        })
    }

    /// One step on a type-valued state.
    pub fn step(&self, p: &TypeDesc, l: &Tuple) -> Result<TypeDesc> {
        check_letter(&self.alphabet, l)?;
        let mut r = Realizer::new();
        let s = p.realize(&mut r);
        let x = pair(l, &s);
        r.observe(&x.values);
        let t = self.delta.lookup(&x)?;
        let y = r.realize_type(&t.instantiate(&x.values));
        Ok(read_back(self.states.theory(), &y))
    }

    pub fn run(&self, word: &[Tuple]) -> Result<TypeDesc> {
        let mut p = TypeDesc::principal(self.states.theory(), &self.initial)?;
        for l in word {
            p = self.step(&p, l)?;
        }
        Ok(p)
    }

    pub fn accepts(&self, word: &[Tuple]) -> Result<bool> {
        self.finals.member(&encode_tuple(&self.run(word)?))
    }

    /// The equivalent deterministic automaton on the compactification.
    pub fn determinize(&self) -> Result<DetAutomaton> {
        let states = compactify(&self.states);
        let dom = self.alphabet.product(&states)?;
        let support = self.delta.support().union(self.finals.support());
        let ltags: Vec<String> = self.alphabet.tags().into_keys().collect();
        let delta = DefFun::from_fn(dom, states.clone(), &support, |x| {
            let (lt, st) = split_pair_tag(&x.tag, &ltags).expect("pair tag");
            let n = self.alphabet.arity_of(&lt).expect("letter tag");
            let letter = Tuple::new(lt, x.values[..n].to_vec());
            let p = decode(&Tuple::new(st, x.values[n..].to_vec()))?;
            Ok(encode_tuple(&self.step(&p, &letter)?))
        })?;
        let initial = encode_tuple(&TypeDesc::principal(self.states.theory(), &self.initial)?);
        DetAutomaton::new(states, self.alphabet.clone(), delta, initial, self.finals.clone())
    }
}

/// One weighted output of a transition: a state given by terms, and a weight.
pub type WeightedOut = (String, Vec<Term>, Rational);

/// A weighted automaton with finitely many weighted successors per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAutomaton {
    pub states: DefSet,
    pub alphabet: DefSet,
    pub delta: Piecewise<Vec<WeightedOut>>,
    pub initial: FreeVec,
    pub final_weight: ScalarFun,
}

impl WeightedAutomaton {
    pub fn new(
        states: DefSet,
        alphabet: DefSet,
        delta: Piecewise<Vec<WeightedOut>>,
        initial: FreeVec,
        final_weight: ScalarFun,
    ) -> Result<WeightedAutomaton> {
        let dom = alphabet.product(&states)?;
        if !delta.domain().same_as(&dom)? {
            return Err(Error::NotTotal("transition domain is not alphabet × states".into()));
        }
        let delta = delta.refine(states.support())?;
        let support = delta.support().clone();
        for ((tag, cell), outs) in delta.pieces() {
            let rep = cell.representative(&support);
            for (t, terms, _) in outs {
                for term in terms {
                    term.check(rep.len(), &support)?;
                }
                let y = Tuple::new(t.clone(), terms.iter().map(|x| x.eval(&rep)).collect());
                if !states.member(&y)? {
                    return Err(Error::NotWellDefined(format!("{tag}{cell} goes to {y}, not a state")));
                }
            }
        }
        if !initial.base().same_as(&states)? {
            return Err(Error::BasisMismatch("initial vector is not over the states".into()));
        }
        if !states.is_subset(final_weight.domain())? {
            return Err(Error::NotTotal("final weight is not defined on every state".into()));
        }
        Ok(WeightedAutomaton {
            states,
            alphabet,
            delta,
            initial,
            final_weight,
        })
    }

    pub fn step(&self, v: &FreeVec, l: &Tuple) -> Result<FreeVec> {
        check_letter(&self.alphabet, l)?;
        let mut out = FreeVec::zero(&self.states);
        for (s, c) in v.entries() {
            let x = pair(l, s);
            for (t, terms, w) in self.delta.lookup(&x)? {
                let y = Tuple::new(t.clone(), terms.iter().map(|term| term.eval(&x.values)).collect());
                out.add_entry(y, c * w)?;
            }
        }
        Ok(out)
    }

    pub fn vector_after(&self, word: &[Tuple]) -> Result<FreeVec> {
        let mut v = self.initial.clone();
        for l in word {
            v = self.step(&v, l)?;
        }
        Ok(v)
    }

    pub fn run(&self, word: &[Tuple]) -> Result<Rational> {
        self.vector_after(word)?.pair_with(&self.final_weight)
    }

    fn support(&self) -> Support {
        let mut s = self.delta.support().union(self.final_weight.support());
        for (x, _) in self.initial.entries() {
            s = s.with(x.standard_atoms());
        }
        s
    }

    /// The transition matrix of one letter as a kernel on `states × states`.
    pub fn letter_kernel(&self, l: &Tuple) -> Result<ScalarFun> {
        check_letter(&self.alphabet, l)?;
        let ss = self.states.product(&self.states)?;
        let support = self.support().with(l.standard_atoms());
        let stags: Vec<String> = self.states.tags().into_keys().collect();
        Piecewise::from_fn(ss, &support, |w| {
            let (lt, rt) = split_pair_tag(&w.tag, &stags).expect("pair tag");
            let n = self.states.arity_of(&lt).expect("state tag");
            let s = Tuple::new(lt, w.values[..n].to_vec());
            let target = Tuple::new(rt, w.values[n..].to_vec());
            let mut sum = Rational::zero();
            for (t, terms, c) in self.delta.lookup(&pair(l, &s))? {
                let y = Tuple::new(t.clone(), terms.iter().map(|term| term.eval(&pair(l, &s).values)).collect());
                if y == target {
                    sum += c;
                }
            }
            Ok(sum)
        })
    }

    /// The linear monoid recognizing the same function.
    pub fn to_monoid(&self) -> Result<Monoid<'_>> {
        if self.states.theory() != Theory::Eq {
            return Err(Error::UnsupportedTheory("linear monoids need equality atoms".into()));
        }
        Ok(Monoid {
            automaton: self,
            algebra: EndoAlgebra::new(&self.states)?,
        })
    }
}

/// Word semantics of a weighted automaton through its hom-basis expansions.
pub struct Monoid<'a> {
    automaton: &'a WeightedAutomaton,
    algebra: EndoAlgebra,
}

impl fmt::Debug for Monoid<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Monoid").finish_non_exhaustive()
    }
}

impl Monoid<'_> {
    pub fn algebra(&self) -> &EndoAlgebra {
        &self.algebra
    }

    /// The expansion of one letter's transition map.
    pub fn letter(&self, l: &Tuple) -> Result<BasisExpansion> {
        self.algebra.space().decompose_kernel(&self.automaton.letter_kernel(l)?)
    }

    /// The element of a word: letter maps composed left to right.
    pub fn word(&self, word: &[Tuple]) -> Result<BasisExpansion> {
        let mut e = self.algebra.identity();
        for l in word {
            e = self.algebra.compose(&self.letter(l)?, &e)?;
        }
        Ok(e)
    }

    /// The functional `h ↦ final(h(initial))`.
    pub fn value(&self, e: &BasisExpansion) -> Result<Rational> {
        let v = self.algebra.apply(e, &self.automaton.initial)?;
        v.pair_with(&self.automaton.final_weight)
    }

    pub fn run(&self, word: &[Tuple]) -> Result<Rational> {
        self.value(&self.word(word)?)
    }
}

/// A probabilistic automaton with measure-valued transitions and a final
/// weight function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbAutomaton {
    pub states: DefSet,
    pub alphabet: DefSet,
    pub delta: Kernel,
    pub initial: Measure,
    pub final_weight: ScalarFun,
}

impl ProbAutomaton {
    pub fn new(
        states: DefSet,
        alphabet: DefSet,
        delta: Kernel,
        initial: Measure,
        final_weight: ScalarFun,
    ) -> Result<ProbAutomaton> {
        let dom = alphabet.product(&states)?;
        if !delta.domain().same_as(&dom)? || !delta.codomain().same_as(&states)? {
            return Err(Error::NotTotal("transition kernel is not alphabet × states → states".into()));
        }
        if !initial.base().same_as(&states)? {
            return Err(Error::InvalidMeasure("initial measure is not on the states".into()));
        }
        if !states.is_subset(final_weight.domain())? {
            return Err(Error::NotTotal("final weight is not defined on every state".into()));
        }
        if final_weight.values().iter().any(|v| *v < Rational::zero() || *v > Rational::one()) {
            return Err(Error::InvalidMeasure("final weights must lie in [0,1]".into()));
        }
        Ok(ProbAutomaton {
            states,
            alphabet,
            delta,
            initial,
            final_weight,
        })
    }

    pub fn measure_after(&self, word: &[Tuple]) -> Result<Measure> {
        let mut mu = self.initial.clone();
        for l in word {
            check_letter(&self.alphabet, l)?;
            mu = self.delta.extend_with(Some(l), &mu)?;
        }
        Ok(mu)
    }

    pub fn run(&self, word: &[Tuple]) -> Result<Rational> {
        self.measure_after(word)?.expectation(&self.final_weight)
    }

    /// The same machine as a weighted automaton whose states are the types
    /// of the original states.
    pub fn to_weighted(&self) -> Result<WeightedAutomaton> {
        let states = compactify(&self.states);
        let dom = self.alphabet.product(&states)?;
        let support = self
            .delta
            .support()
            .union(self.final_weight.support());
        let ltags: Vec<String> = self.alphabet.tags().into_keys().collect();
        let delta = Piecewise::from_fn(dom, &support, |x| {
            let (lt, st) = split_pair_tag(&x.tag, &ltags).expect("pair tag");
            let n = self.alphabet.arity_of(&lt).expect("letter tag");
            let letter = Tuple::new(lt, x.values[..n].to_vec());
            let p = decode(&Tuple::new(st, x.values[n..].to_vec()))?;
            let mu = Measure::dirac(&self.states, p)?;
            let next = self.delta.extend_with(Some(&letter), &mu)?;
            next.atoms()
                .map(|(q, w)| {
                    let y = encode_tuple(q);
                    let terms = y
                        .values
                        .iter()
                        .map(|v| Term::express(v, &x.values, &support))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((y.tag, terms, w.clone()))
                })
                .collect()
        })?;
        let initial = FreeVec::new(&states, self.initial.atoms().map(|(p, w)| (encode_tuple(p), w.clone())))?;
        let final_weight = Piecewise::from_fn(states.clone(), &support, |x| {
            let p = decode(x)?;
            Measure::dirac(&self.states, p)?.expectation(&self.final_weight)
        })?;
        WeightedAutomaton::new(states, self.alphabet.clone(), delta, initial, final_weight)
    }
}

/// The point-mass kernel of a deterministic transition function.
pub fn det_to_prob(a: &DetAutomaton) -> Result<ProbAutomaton> {
    let delta = Kernel::from_deffun(&a.delta)?;
    let initial = Measure::point(&a.states, &a.initial)?;
    let final_weight = ScalarFun::indicator(&a.states, &a.finals, Rational::one())?;
    ProbAutomaton::new(a.states.clone(), a.alphabet.clone(), delta, initial, final_weight)
}

/// Any of the four machine kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Automaton {
    Det(DetAutomaton),
    Ultra(UltraAutomaton),
    Weighted(WeightedAutomaton),
    Prob(ProbAutomaton),
}

/// The result of running a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accept(bool),
    /// Final state of an ultra run and whether it is accepting.
    Type(TypeDesc, bool),
    Value(Rational),
}

impl Outcome {
    /// Acceptance for det and ultra runs; `None` for numeric runs.
    pub fn accepted(&self) -> Option<bool> {
        match self {
            Outcome::Accept(b) | Outcome::Type(_, b) => Some(*b),
            Outcome::Value(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |b: bool| if b { "accept" } else { "reject" };
        match self {
            Outcome::Accept(b) => f.write_str(verdict(*b)),
            Outcome::Type(p, b) => write!(f, "{} {p}", verdict(*b)),
            Outcome::Value(r) => f.write_str(&crate::atom::format_rational(r)),
        }
    }
}

impl Automaton {
    pub fn kind(&self) -> &'static str {
        match self {
            Automaton::Det(_) => "det",
            Automaton::Ultra(_) => "ultra",
            Automaton::Weighted(_) => "weighted",
            Automaton::Prob(_) => "prob",
        }
    }

    pub fn states(&self) -> &DefSet {
        match self {
            Automaton::Det(a) => &a.states,
            Automaton::Ultra(a) => &a.states,
            Automaton::Weighted(a) => &a.states,
            Automaton::Prob(a) => &a.states,
        }
    }

    pub fn alphabet(&self) -> &DefSet {
        match self {
            Automaton::Det(a) => &a.alphabet,
            Automaton::Ultra(a) => &a.alphabet,
            Automaton::Weighted(a) => &a.alphabet,
            Automaton::Prob(a) => &a.alphabet,
        }
    }

    pub fn theory(&self) -> Theory {
        self.states().theory()
    }

    /// Every atom the machine mentions: supports of its sets and maps and the
    /// atoms of its initial state or distribution.
    pub fn support(&self) -> Support {
        let base = self.states().support().union(self.alphabet().support());
        match self {
            Automaton::Det(a) => base
                .union(a.delta.support())
                .union(a.finals.support())
                .with(a.initial.standard_atoms()),
            Automaton::Ultra(a) => base
                .union(a.delta.support())
                .union(a.finals.support())
                .with(a.initial.standard_atoms()),
            Automaton::Weighted(a) => base
                .union(a.delta.support())
                .union(a.final_weight.support())
                .with(a.initial.entries().flat_map(|(x, _)| x.standard_atoms())),
            Automaton::Prob(a) => base
                .union(a.delta.support())
                .union(a.final_weight.support())
                .with(a.initial.atoms().flat_map(|(p, _)| p.support())),
        }
    }

    pub fn run(&self, word: &[Tuple]) -> Result<Outcome> {
        Ok(match self {
            Automaton::Det(a) => Outcome::Accept(a.run(word)?),
            Automaton::Ultra(a) => {
                let p = a.run(word)?;
                let ok = a.finals.member(&encode_tuple(&p))?;
                Outcome::Type(p, ok)
            }
            Automaton::Weighted(a) => Outcome::Value(a.run(word)?),
            Automaton::Prob(a) => Outcome::Value(a.run(word)?),
        })
    }
}
