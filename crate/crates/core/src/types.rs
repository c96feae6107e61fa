//! Type descriptors: complete definable types (definable ultrafilters) of
//! tuples, their templates over input coordinates, and their realization in
//! an elementary extension.
//!
//! A type is decided by realizing it: equality types get fresh witnesses and
//! ordered types get infinitesimally close or infinite [`Hyper`] values. Each
//! realization happens one level deeper than everything seen before, so later
//! witnesses are generic over earlier ones. Reading a tuple of such values
//! back as a type over the standard atoms is the inverse operation; the pair
//! implements pushforward, flattening of nested types and Kleisli extension.
//!
//! [`Hyper`]: crate::atom::Hyper

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::atom::{dlo_cmp, hyper_below, hyper_infinite, rat, Atom, Ext, Theory, Value};
use crate::defset::{DefSet, Tuple};
use crate::error::{Error, Result};
use crate::piecewise::Term;

/// Component of an equality type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqComp<P> {
    Const(P),
    /// A generic atom; equal indices denote the same witness.
    Fresh(usize),
}

/// Position of one coordinate of an ordered type relative to the parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OneType<P> {
    MinusInf,
    Left(P),
    Point(P),
    Right(P),
    PlusInf,
}

impl<P> OneType<P> {
    pub fn param(&self) -> Option<&P> {
        match self {
            OneType::Left(p) | OneType::Point(p) | OneType::Right(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, OneType::Point(_))
    }

    fn map<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> OneType<Q> {
        match self {
            OneType::MinusInf => OneType::MinusInf,
            OneType::Left(p) => OneType::Left(f(p)),
            OneType::Point(p) => OneType::Point(f(p)),
            OneType::Right(p) => OneType::Right(f(p)),
            OneType::PlusInf => OneType::PlusInf,
        }
    }
}

/// Component of an ordered type. Coordinates with the same non-point
/// one-type are ordered by `rank`; equal ranks denote equal coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DloComp<P> {
    pub one: OneType<P>,
    pub rank: usize,
}

impl<P> DloComp<P> {
    pub fn new(one: OneType<P>, rank: usize) -> DloComp<P> {
        DloComp { one, rank }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeBody<P> {
    Eq(Vec<EqComp<P>>),
    Dlo(Vec<DloComp<P>>),
}

impl<P: Clone + Ord> TypeBody<P> {
    pub fn theory(&self) -> Theory {
        match self {
            TypeBody::Eq(_) => Theory::Eq,
            TypeBody::Dlo(_) => Theory::Dlo,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            TypeBody::Eq(c) => c.len(),
            TypeBody::Dlo(c) => c.len(),
        }
    }

    /// Parameters in order of first occurrence, without repetition.
    pub fn params(&self) -> Vec<P> {
        let mut out: Vec<P> = Vec::new();
        let mut push = |p: &P| {
            if !out.contains(p) {
                out.push(p.clone());
            }
        };
        match self {
            TypeBody::Eq(cs) => cs.iter().for_each(|c| {
                if let EqComp::Const(p) = c {
                    push(p)
                }
            }),
            TypeBody::Dlo(cs) => cs.iter().for_each(|c| {
                if let Some(p) = c.one.param() {
                    push(p)
                }
            }),
        }
        out
    }

    pub fn map<Q>(&self, mut f: impl FnMut(&P) -> Q) -> TypeBody<Q> {
        match self {
            TypeBody::Eq(cs) => TypeBody::Eq(
                cs.iter()
                    .map(|c| match c {
                        EqComp::Const(p) => EqComp::Const(f(p)),
                        EqComp::Fresh(j) => EqComp::Fresh(*j),
                    })
                    .collect(),
            ),
            TypeBody::Dlo(cs) => TypeBody::Dlo(
                cs.iter()
                    .map(|c| DloComp::new(c.one.map(&mut f), c.rank))
                    .collect(),
            ),
        }
    }

    pub fn try_map<Q>(&self, mut f: impl FnMut(&P) -> Result<Q>) -> Result<TypeBody<Q>> {
        Ok(match self {
            TypeBody::Eq(cs) => TypeBody::Eq(
                cs.iter()
                    .map(|c| {
                        Ok(match c {
                            EqComp::Const(p) => EqComp::Const(f(p)?),
                            EqComp::Fresh(j) => EqComp::Fresh(*j),
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            TypeBody::Dlo(cs) => TypeBody::Dlo(
                cs.iter()
                    .map(|c| {
                        let one = match &c.one {
                            OneType::MinusInf => OneType::MinusInf,
                            OneType::Left(p) => OneType::Left(f(p)?),
                            OneType::Point(p) => OneType::Point(f(p)?),
                            OneType::Right(p) => OneType::Right(f(p)?),
                            OneType::PlusInf => OneType::PlusInf,
                        };
                        Ok(DloComp::new(one, c.rank))
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Number of generic blocks: fresh witnesses, or distinct non-point
    /// components.
    pub fn rank(&self) -> usize {
        match self {
            TypeBody::Eq(cs) => {
                let mut ids: Vec<usize> = cs
                    .iter()
                    .filter_map(|c| match c {
                        EqComp::Fresh(j) => Some(*j),
                        _ => None,
                    })
                    .collect();
                ids.sort();
                ids.dedup();
                ids.len()
            }
            TypeBody::Dlo(cs) => {
                let mut blocks: Vec<&DloComp<P>> = cs.iter().filter(|c| !c.one.is_point()).collect();
                blocks.sort();
                blocks.dedup();
                blocks.len()
            }
        }
    }

    /// Checks canonical form: fresh indices numbered by first occurrence,
    /// point ranks zero, and contiguous ranks inside every one-type group.
    pub fn validate(&self) -> Result<()> {
        match self {
            TypeBody::Eq(cs) => {
                let mut next = 0;
                for c in cs {
                    if let EqComp::Fresh(j) = c {
                        if *j > next {
                            return Err(Error::InvalidType(format!(
                                "fresh block {j} appears before block {next}"
                            )));
                        }
                        if *j == next {
                            next += 1;
                        }
                    }
                }
            }
            TypeBody::Dlo(cs) => {
                let mut groups: BTreeMap<&OneType<P>, Vec<usize>> = BTreeMap::new();
                for c in cs {
                    if c.one.is_point() && c.rank != 0 {
                        return Err(Error::InvalidType("a point component has nonzero rank".into()));
                    }
                    groups.entry(&c.one).or_default().push(c.rank);
                }
                for ranks in groups.values_mut() {
                    ranks.sort();
                    ranks.dedup();
                    if ranks.iter().enumerate().any(|(i, r)| i != *r) {
                        return Err(Error::InvalidType("ranks of a one-type group are not contiguous".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A type with a tag, generic in its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Type<P> {
    pub tag: String,
    pub body: TypeBody<P>,
}

/// A type over standard atoms.
pub type TypeDesc = Type<Atom>;
/// A type whose parameters are terms over some input tuple.
pub type TypeTemplate = Type<Term>;

impl<P: Clone + Ord> Type<P> {
    pub fn new(tag: impl Into<String>, body: TypeBody<P>) -> Type<P> {
        Type {
            tag: tag.into(),
            body,
        }
    }

    pub fn arity(&self) -> usize {
        self.body.arity()
    }

    pub fn rank(&self) -> usize {
        self.body.rank()
    }

    pub fn theory(&self) -> Theory {
        self.body.theory()
    }
}

impl TypeDesc {
    /// The principal type of a standard tuple.
    pub fn principal(theory: Theory, x: &Tuple) -> Result<TypeDesc> {
        if !x.values.iter().all(Value::is_standard) {
            return Err(Error::InvalidType(format!("{x} is not a standard tuple")));
        }
        Ok(read_back(theory, x))
    }

    /// The single fresh type of one equality coordinate.
    pub fn fresh(tag: &str) -> TypeDesc {
        Type::new(tag, TypeBody::Eq(vec![EqComp::Fresh(0)]))
    }

    pub fn support(&self) -> Vec<Atom> {
        self.body.params()
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.body.params() {
            a.check_theory(self.theory())?;
        }
        self.body.validate()
    }

    pub fn realize(&self, r: &mut Realizer) -> Tuple {
        let body = self.body.map(|a| Value::Atom(a.clone()));
        Tuple::new(self.tag.clone(), r.realize(&body))
    }

    /// The standard tuple of a rank-zero type.
    pub fn as_point(&self) -> Option<Tuple> {
        if self.rank() != 0 {
            return None;
        }
        let mut r = Realizer::new();
        Some(self.realize(&mut r))
    }
}

impl TypeTemplate {
    pub fn instantiate(&self, input: &[Value]) -> Type<Value> {
        Type::new(self.tag.clone(), self.body.map(|t| t.eval(input)))
    }

    /// Checks term ranges and consistency of the instantiation at `rep`.
    pub fn check(&self, rep: &[Value], support: &crate::atom::Support) -> Result<()> {
        for t in self.body.params() {
            t.check(rep.len(), support)?;
        }
        let inst = self.instantiate(rep);
        if let TypeBody::Dlo(_) = inst.body {
            inst.body.validate().map_err(|e| Error::KernelNotDefinable(e.to_string()))?;
        }
        Ok(())
    }
}

/// Builds witnesses for types, each realization generic over all values
/// produced or observed before it.
#[derive(Debug, Clone)]
pub struct Realizer {
    depth: usize,
    next_fresh: u64,
}

impl Default for Realizer {
    fn default() -> Self {
        Realizer::new()
    }
}

impl Realizer {
    pub fn new() -> Realizer {
        Realizer {
            depth: 1,
            next_fresh: 0,
        }
    }

    /// Records context values so that later witnesses avoid them.
    pub fn observe(&mut self, values: &[Value]) {
        for v in values {
            match v {
                Value::Fresh(id) => self.next_fresh = self.next_fresh.max(id + 1),
                Value::Hyper(_) => self.depth = self.depth.max(v.depth()),
                Value::Atom(_) => {}
            }
        }
    }

    pub fn realize(&mut self, body: &TypeBody<Value>) -> Vec<Value> {
        self.observe(&body.params());
        match body {
            TypeBody::Eq(cs) => {
                let base = self.next_fresh;
                let mut used = 0;
                let out = cs
                    .iter()
                    .map(|c| match c {
                        EqComp::Const(v) => v.clone(),
                        EqComp::Fresh(j) => {
                            used = used.max(*j as u64 + 1);
                            Value::Fresh(base + *j as u64)
                        }
                    })
                    .collect();
                self.next_fresh += used;
                out
            }
            TypeBody::Dlo(cs) => {
                let d = self.depth;
                let mut sizes: BTreeMap<&OneType<Value>, usize> = BTreeMap::new();
                for c in cs {
                    let m = sizes.entry(&c.one).or_insert(0);
                    *m = (*m).max(c.rank + 1);
                }
                let out = cs
                    .iter()
                    .map(|c| {
                        let m = sizes[&c.one] as i64;
                        let r = c.rank as i64;
                        match &c.one {
                            OneType::Point(v) => v.clone(),
                            OneType::Right(v) => hyper_below(v, d, Ext::Fin(rat(r + 1))),
                            OneType::Left(v) => hyper_below(v, d, Ext::Fin(rat(r - m))),
                            OneType::PlusInf => hyper_infinite(true, d, r + 1),
                            OneType::MinusInf => hyper_infinite(false, d, r - m),
                        }
                    })
                    .collect();
                self.depth = d + 1;
                out
            }
        }
    }

    pub fn realize_type(&mut self, t: &Type<Value>) -> Tuple {
        Tuple::new(t.tag.clone(), self.realize(&t.body))
    }
}

/// The type over the standard atoms of a tuple of (possibly generic) values.
pub fn read_back(theory: Theory, x: &Tuple) -> TypeDesc {
    let body = match theory {
        Theory::Eq => {
            let mut seen: Vec<&Value> = Vec::new();
            TypeBody::Eq(
                x.values
                    .iter()
                    .map(|v| match v {
                        Value::Atom(a) => EqComp::Const(a.clone()),
                        _ => match seen.iter().position(|w| *w == v) {
                            Some(j) => EqComp::Fresh(j),
                            None => {
                                seen.push(v);
                                EqComp::Fresh(seen.len() - 1)
                            }
                        },
                    })
                    .collect(),
            )
        }
        Theory::Dlo => {
            let ones: Vec<OneType<Atom>> = x
                .values
                .iter()
                .map(|v| match v.standard_part() {
                    (Ext::NegInf, _) => OneType::MinusInf,
                    (Ext::PosInf, _) => OneType::PlusInf,
                    (Ext::Fin(q), Ordering::Equal) => OneType::Point(Atom(q)),
                    (Ext::Fin(q), Ordering::Greater) => OneType::Right(Atom(q)),
                    (Ext::Fin(q), Ordering::Less) => OneType::Left(Atom(q)),
                })
                .collect();
            let mut groups: BTreeMap<&OneType<Atom>, Vec<&Value>> = BTreeMap::new();
            for (one, v) in ones.iter().zip(&x.values) {
                if !one.is_point() {
                    groups.entry(one).or_default().push(v);
                }
            }
            for vs in groups.values_mut() {
                vs.sort_by(|a, b| dlo_cmp(a, b));
                vs.dedup_by(|a, b| dlo_cmp(a, b) == Ordering::Equal);
            }
            TypeBody::Dlo(
                ones.iter()
                    .zip(&x.values)
                    .map(|(one, v)| {
                        let rank = if one.is_point() {
                            0
                        } else {
                            groups[one]
                                .binary_search_by(|w| dlo_cmp(w, v))
                                .expect("value is in its group")
                        };
                        DloComp::new(one.clone(), rank)
                    })
                    .collect(),
            )
        }
    };
    Type::new(x.tag.clone(), body)
}

/// Whether the definable set `s` belongs to the type `p`.
pub fn type_member(p: &TypeDesc, s: &DefSet) -> Result<bool> {
    p.theory().expect(s.theory())?;
    if let Some(n) = s.arity_of(&p.tag) {
        if n != p.arity() {
            return Err(Error::ArityMismatch {
                tag: p.tag.clone(),
                expected: n,
                found: p.arity(),
            });
        }
    }
    let mut r = Realizer::new();
    s.member(&p.realize(&mut r))
}

impl<P: fmt::Display> fmt::Display for Type<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.tag)?;
        match &self.body {
            TypeBody::Eq(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    match c {
                        EqComp::Const(p) => write!(f, "{p}")?,
                        EqComp::Fresh(j) => write!(f, "F{j}")?,
                    }
                }
            }
            TypeBody::Dlo(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    match &c.one {
                        OneType::Point(p) => write!(f, "{p}")?,
                        OneType::Left(p) => write!(f, "{p}-#{}", c.rank)?,
                        OneType::Right(p) => write!(f, "{p}+#{}", c.rank)?,
                        OneType::MinusInf => write!(f, "-inf#{}", c.rank)?,
                        OneType::PlusInf => write!(f, "+inf#{}", c.rank)?,
                    }
                }
            }
        }
        f.write_str("]")
    }
}
