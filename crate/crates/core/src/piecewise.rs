//! Functions defined cell by cell: definable maps, scalar functions and the
//! generic container they share.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::atom::{Atom, Rational, Support, Theory, Value};
use crate::cell::{refine_cell, Cell, EqSlot};
use crate::defset::{DefSet, Tuple};
use crate::error::{Error, Result};

/// An output coordinate: a projection of the input or a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    In(usize),
    Atom(Atom),
}

impl Term {
    pub fn eval(&self, input: &[Value]) -> Value {
        match self {
            Term::In(i) => input[*i].clone(),
            Term::Atom(a) => Value::Atom(a.clone()),
        }
    }

    /// Checks the term against the input arity and the support.
    pub fn check(&self, arity: usize, support: &Support) -> Result<()> {
        match self {
            Term::In(i) if *i >= arity => Err(Error::KernelNotDefinable(format!(
                "term refers to coordinate {i} of an input of arity {arity}"
            ))),
            Term::Atom(a) if !support.contains(a) => Err(Error::KernelNotDefinable(format!(
                "constant {a} is outside the support"
            ))),
            _ => Ok(()),
        }
    }

    /// Expresses `v` as a term over `input`, preferring support constants.
    pub fn express(v: &Value, input: &[Value], support: &Support) -> Result<Term> {
        if let Value::Atom(a) = v {
            if support.contains(a) {
                return Ok(Term::Atom(a.clone()));
            }
        }
        input
            .iter()
            .position(|w| w == v)
            .map(Term::In)
            .ok_or_else(|| {
                Error::KernelNotDefinable(format!("value {v} is neither an input nor a constant"))
            })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::In(i) => write!(f, "in:{i}"),
            Term::Atom(a) => write!(f, "atom:{a}"),
        }
    }
}

/// A value attached to every cell of a domain refined to a support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piecewise<T> {
    domain: DefSet,
    refined: DefSet,
    pieces: BTreeMap<(String, Cell), T>,
}

impl<T: Clone> Piecewise<T> {
    /// Pieces must cover exactly the cells of `domain` over `support`.
    pub fn new(
        domain: DefSet,
        support: &Support,
        pieces: impl IntoIterator<Item = ((String, Cell), T)>,
    ) -> Result<Piecewise<T>> {
        let support = support.union(domain.support());
        let refined = domain.refine(&support)?;
        let mut map = BTreeMap::new();
        for ((tag, cell), v) in pieces {
            domain.theory().expect(cell.theory())?;
            cell.validate(&support)?;
            if !refined.cell_set().contains(&(tag.clone(), cell.clone())) {
                return Err(Error::NotInDomain(format!("piece {tag}{cell} is outside the domain")));
            }
            if map.insert((tag.clone(), cell.clone()), v).is_some() {
                return Err(Error::NotWellDefined(format!("cell {tag}{cell} has two pieces")));
            }
        }
        if let Some((t, c)) = refined.cells().find(|k| !map.contains_key(*k)) {
            return Err(Error::NotTotal(format!("no piece covers {t}{c}")));
        }
        Ok(Piecewise {
            domain,
            refined,
            pieces: map,
        })
    }

    /// Builds pieces from a representative of every cell.
    pub fn from_fn(
        domain: DefSet,
        support: &Support,
        mut f: impl FnMut(&Tuple) -> Result<T>,
    ) -> Result<Piecewise<T>> {
        let support = support.union(domain.support());
        let refined = domain.refine(&support)?;
        let mut pieces = BTreeMap::new();
        for (tag, cell) in refined.cells() {
            let rep = Tuple::new(tag.clone(), cell.representative(&support));
            pieces.insert((tag.clone(), cell.clone()), f(&rep)?);
        }
        Ok(Piecewise {
            domain,
            refined,
            pieces,
        })
    }

    pub fn domain(&self) -> &DefSet {
        &self.domain
    }

    pub fn support(&self) -> &Support {
        self.refined.support()
    }

    pub fn theory(&self) -> Theory {
        self.domain.theory()
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&(String, Cell), &T)> {
        self.pieces.iter()
    }

    /// The piece whose cell contains `x` (standard or generic).
    pub fn lookup(&self, x: &Tuple) -> Result<&T> {
        if self.refined.arity_of(&x.tag) != Some(x.arity()) {
            return Err(Error::NotInDomain(x.to_string()));
        }
        self.pieces
            .get(&self.refined.locate(x))
            .ok_or_else(|| Error::NotInDomain(x.to_string()))
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(&T) -> U) -> Piecewise<U> {
        Piecewise {
            domain: self.domain.clone(),
            refined: self.refined.clone(),
            pieces: self.pieces.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// The same function over a larger support.
    pub fn refine(&self, support: &Support) -> Result<Piecewise<T>> {
        let support = support.union(self.support());
        if &support == self.support() {
            return Ok(self.clone());
        }
        let mut pieces = BTreeMap::new();
        for ((tag, cell), v) in &self.pieces {
            for c in refine_cell(cell, self.support(), &support) {
                pieces.insert((tag.clone(), c), v.clone());
            }
        }
        Piecewise::new(self.domain.clone(), &support, pieces)
    }
}

/// A definable map given by projections and constants on each cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefFun {
    codomain: DefSet,
    pieces: Piecewise<(String, Vec<Term>)>,
}

impl DefFun {
    /// Checks totality, that terms only use coordinates and support atoms,
    /// and that every cell is mapped into the codomain.
    pub fn new(codomain: DefSet, pieces: Piecewise<(String, Vec<Term>)>) -> Result<DefFun> {
        pieces.theory().expect(codomain.theory())?;
        let pieces = pieces.refine(codomain.support())?;
        let support = pieces.support().clone();
        for ((tag, cell), (out_tag, terms)) in pieces.pieces() {
            for t in terms {
                t.check(cell.arity(), &support)
                    .map_err(|e| Error::NotWellDefined(e.to_string()))?;
            }
            let rep = cell.representative(&support);
            let out = Tuple::new(out_tag.clone(), terms.iter().map(|t| t.eval(&rep)).collect());
            if !codomain.member(&out)? {
                return Err(Error::NotWellDefined(format!(
                    "cell {tag}{cell} is mapped to {out}, outside the codomain"
                )));
            }
        }
        Ok(DefFun { codomain, pieces })
    }

    /// Builds a function from its value on a representative of every cell.
    /// Outputs are expressed through coordinates and support constants.
    pub fn from_fn(
        domain: DefSet,
        codomain: DefSet,
        support: &Support,
        mut f: impl FnMut(&Tuple) -> Result<Tuple>,
    ) -> Result<DefFun> {
        let support = support.union(codomain.support());
        let pieces = Piecewise::from_fn(domain, &support, |x| {
            let y = f(x)?;
            let terms = y
                .values
                .iter()
                .map(|v| Term::express(v, &x.values, &support))
                .collect::<Result<Vec<_>>>()?;
            Ok((y.tag, terms))
        })?;
        DefFun::new(codomain, pieces)
    }

    pub fn identity(domain: &DefSet) -> DefFun {
        let pieces = Piecewise::from_fn(domain.clone(), &Support::empty(), |x| {
            Ok((x.tag.clone(), (0..x.arity()).map(Term::In).collect()))
        })
        .expect("identity is total");
        DefFun::new(domain.clone(), pieces).expect("identity is well defined")
    }

    pub fn domain(&self) -> &DefSet {
        self.pieces.domain()
    }

    pub fn codomain(&self) -> &DefSet {
        &self.codomain
    }

    pub fn support(&self) -> &Support {
        self.pieces.support()
    }

    pub fn pieces(&self) -> &Piecewise<(String, Vec<Term>)> {
        &self.pieces
    }

    pub fn apply(&self, x: &Tuple) -> Result<Tuple> {
        if !self.domain().member(x)? {
            return Err(Error::NotInDomain(x.to_string()));
        }
        self.apply_unchecked(x)
    }

    /// Applies the piece located by `x` without a domain check; valid for
    /// generic tuples whose cell lies in the domain.
    pub fn apply_unchecked(&self, x: &Tuple) -> Result<Tuple> {
        let (tag, terms) = self.pieces.lookup(x)?;
        Ok(Tuple::new(tag.clone(), terms.iter().map(|t| t.eval(&x.values)).collect()))
    }

    /// Evaluates the function at the generic point of a domain cell. Over
    /// equality atoms the blocks become distinct fresh witnesses.
    pub fn apply_generic(&self, tag: &str, cell: &Cell) -> Result<Tuple> {
        let x = Tuple::new(tag, generic_point(cell, self.support()));
        let located = self.pieces.refined.locate(&x);
        if !self.pieces.refined.cell_set().contains(&located) {
            return Err(Error::NotInDomain(format!("{tag}{cell}")));
        }
        self.apply_unchecked(&x)
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &DefFun) -> Result<DefFun> {
        let support = self.support().union(g.support());
        let pieces = Piecewise::from_fn(self.domain().clone(), &support, |x| {
            let (tag, terms) = self.pieces.lookup(x)?;
            let y = Tuple::new(tag.clone(), terms.iter().map(|t| t.eval(&x.values)).collect());
            let (out_tag, out_terms) = g.pieces.lookup(&y)?;
            let composed = out_terms
                .iter()
                .map(|t| match t {
                    Term::In(j) => terms[*j].clone(),
                    c => c.clone(),
                })
                .collect();
            Ok((out_tag.clone(), composed))
        })?;
        DefFun::new(g.codomain.clone(), pieces)
    }

    /// The preimage of a subset of the codomain.
    pub fn preimage(&self, d: &DefSet) -> Result<DefSet> {
        let support = self.support().union(d.support());
        let refined = self.domain().refine(&support)?;
        let mut cells = Vec::new();
        for x in refined.representatives() {
            if d.member(&self.apply_unchecked(&x)?)? {
                cells.push(refined.locate(&x));
            }
        }
        DefSet::new(self.domain().theory(), support, cells)
    }
}

/// A generic point of a cell: fresh witnesses for equality blocks, the
/// standard representative for ordered cells.
pub fn generic_point(cell: &Cell, support: &Support) -> Vec<Value> {
    match cell {
        Cell::Eq(slots) => slots
            .iter()
            .map(|s| match s {
                EqSlot::Const(a) => Value::Atom(a.clone()),
                EqSlot::Block(b) => Value::Fresh(*b as u64),
            })
            .collect(),
        Cell::Dlo(_) => cell.representative(support),
    }
}

/// A piecewise-constant rational function.
pub type ScalarFun = Piecewise<Rational>;

impl Piecewise<Rational> {
    pub fn constant(domain: &DefSet, value: Rational) -> ScalarFun {
        Piecewise::from_fn(domain.clone(), &Support::empty(), |_| Ok(value.clone()))
            .expect("constant is total")
    }

    /// `value` on `set`, zero elsewhere in `domain`.
    pub fn indicator(domain: &DefSet, set: &DefSet, value: Rational) -> Result<ScalarFun> {
        Piecewise::from_fn(domain.clone(), set.support(), |x| {
            Ok(if set.member(x)? {
                value.clone()
            } else {
                Rational::zero()
            })
        })
    }

    pub fn eval(&self, x: &Tuple) -> Result<Rational> {
        self.lookup(x).cloned()
    }

    /// The distinct values taken.
    pub fn values(&self) -> BTreeSet<Rational> {
        self.pieces().map(|(_, v)| v.clone()).collect()
    }

    pub fn level_set(&self, r: &Rational) -> DefSet {
        let cells: Vec<(String, Cell)> = self
            .pieces()
            .filter(|(_, v)| *v == r)
            .map(|(k, _)| k.clone())
            .collect();
        DefSet::new(self.theory(), self.support().clone(), cells)
            .expect("cells come from a valid set")
    }

    pub fn combine(&self, other: &ScalarFun, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<ScalarFun> {
        if !self.domain().same_as(other.domain())? {
            return Err(Error::NotInDomain("scalar functions on different domains".into()));
        }
        let support = self.support().union(other.support());
        let a = self.refine(&support)?;
        let b = other.refine(&support)?;
        Piecewise::from_fn(self.domain().clone(), &support, |x| Ok(f(a.lookup(x)?, b.lookup(x)?)))
    }
}
