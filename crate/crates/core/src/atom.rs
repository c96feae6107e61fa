//! Atoms, supports and generic values.
//!
//! Two atom theories are supported: pure equality atoms (`Eq`) whose names are
//! integers, and densely ordered atoms (`Dlo`) which are exact rationals. The
//! theory is carried by the containing set, an [`Atom`] is just its value.
//!
//! A [`Value`] is an element of an elementary extension of the atoms: either a
//! standard atom, a fresh equality witness, or a non-standard ordered witness
//! (a [`Hyper`]). Type descriptors are realized as tuples of values, which is
//! how membership of a definable set in an ultrafilter is decided.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parse `"3"`, `"-2"` or `"1/3"` into a rational in lowest terms.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theory {
    /// Pure sets: atoms compare by equality only.
    Eq,
    /// Dense linear order on the rationals.
    Dlo,
}

impl Theory {
    pub fn name(self) -> &'static str {
        match self {
            Theory::Eq => "eq",
            Theory::Dlo => "dlo",
        }
    }

    pub fn parse(s: &str) -> Result<Theory> {
        match s {
            "eq" | "EQ" => Ok(Theory::Eq),
            "dlo" | "DLO" => Ok(Theory::Dlo),
            "graph" | "random-graph" => Err(Error::UnsupportedTheory(
                "random-graph atoms: their ultrafilters form infinitely many orbits, \
                 so compactifications are not definable"
                    .into(),
            )),
            other => Err(Error::Parse(format!("unknown theory `{other}`"))),
        }
    }

    pub fn expect(self, other: Theory) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::TheoryMismatch {
                expected: self.name().into(),
                found: other.name().into(),
            })
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A standard atom. Equality atoms are integer names, ordered atoms rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(pub Rational);

impl Atom {
    pub fn int(n: i64) -> Atom {
        Atom(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Atom {
        Atom(ratio(n, d))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn parse(s: &str) -> Result<Atom> {
        parse_rational(s).map(Atom)
    }

    pub fn check_theory(&self, theory: Theory) -> Result<()> {
        if theory == Theory::Eq && !self.0.is_integer() {
            return Err(Error::TheoryMismatch {
                expected: "eq atom (integer name)".into(),
                found: self.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// A finite sorted set of atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Support(Vec<Atom>);

impl Support {
    pub fn empty() -> Support {
        Support(Vec::new())
    }

    pub fn new(mut atoms: Vec<Atom>) -> Support {
        atoms.sort();
        atoms.dedup();
        Support(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.0.binary_search(a).is_ok()
    }

    pub fn union(&self, other: &Support) -> Support {
        Support::new(self.0.iter().chain(other.0.iter()).cloned().collect())
    }

    pub fn with(&self, extra: impl IntoIterator<Item = Atom>) -> Support {
        Support::new(self.0.iter().cloned().chain(extra).collect())
    }

    pub fn is_subset(&self, other: &Support) -> bool {
        self.0.iter().all(|a| other.contains(a))
    }

    /// A name not in the support, used to build equality representatives.
    pub fn fresh_base(&self) -> BigInt {
        self.0
            .iter()
            .map(|a| a.0.ceil().to_integer())
            .max()
            .map(|m| m + 1)
            .unwrap_or_else(BigInt::zero)
    }
}

/// One coordinate of a hyper value: a rational or one of the two infinities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    NegInf,
    Fin(Rational),
    PosInf,
}

impl Ext {
    fn zero() -> Ext {
        Ext::Fin(Rational::zero())
    }

    fn is_zero(&self) -> bool {
        matches!(self, Ext::Fin(q) if q.is_zero())
    }

    fn sign(&self) -> Ordering {
        match self {
            Ext::NegInf => Ordering::Less,
            Ext::PosInf => Ordering::Greater,
            Ext::Fin(q) => {
                if q.is_positive() {
                    Ordering::Greater
                } else if q.is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            }
        }
    }
}

/// A non-standard element of the ordered atoms, compared lexicographically.
///
/// Entry 0 is the standard part (or an infinity); later entries are
/// coefficients of ever smaller infinitesimals (or ever larger infinities when
/// the standard part is infinite). Trailing zeros are trimmed, and a hyper
/// that is just a rational is always represented as [`Value::Atom`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyper(Vec<Ext>);

impl Hyper {
    pub fn entries(&self) -> &[Ext] {
        &self.0
    }
}

/// An element of an elementary extension of the atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Atom(Atom),
    /// An equality-theory witness distinct from every atom and every other id.
    Fresh(u64),
    Hyper(Hyper),
}

impl Value {
    pub fn atom(n: i64) -> Value {
        Value::Atom(Atom::int(n))
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_standard(&self) -> bool {
        matches!(self, Value::Atom(_))
    }

    /// Builds a value from hyper entries, normalizing trailing zeros.
    pub fn from_entries(mut entries: Vec<Ext>) -> Value {
        while entries.len() > 1 && entries.last().is_some_and(Ext::is_zero) {
            entries.pop();
        }
        match entries.as_slice() {
            [Ext::Fin(q)] => Value::Atom(Atom(q.clone())),
            _ => Value::Hyper(Hyper(entries)),
        }
    }

    pub fn entries(&self) -> Vec<Ext> {
        match self {
            Value::Atom(a) => vec![Ext::Fin(a.0.clone())],
            Value::Hyper(h) => h.0.clone(),
            Value::Fresh(_) => panic!("fresh equality witness used in an ordered context"),
        }
    }

    /// Depth of the value, i.e. the number of hyper entries it occupies.
    pub fn depth(&self) -> usize {
        match self {
            Value::Hyper(h) => h.0.len(),
            _ => 1,
        }
    }

    /// Standard part of an ordered value and the sign of its offset from it.
    pub fn standard_part(&self) -> (Ext, Ordering) {
        let e = self.entries();
        let sign = e[1..]
            .iter()
            .map(Ext::sign)
            .find(|s| *s != Ordering::Equal)
            .unwrap_or(Ordering::Equal);
        (e[0].clone(), sign)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Fresh(id) => write!(f, "#{id}"),
            Value::Hyper(h) => {
                f.write_str("<")?;
                for (i, e) in h.0.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    match e {
                        Ext::NegInf => f.write_str("-inf")?,
                        Ext::PosInf => f.write_str("+inf")?,
                        Ext::Fin(q) => f.write_str(&format_rational(q))?,
                    }
                }
                f.write_str(">")
            }
        }
    }
}

/// Order of two ordered values (standard or hyper).
pub fn dlo_cmp(a: &Value, b: &Value) -> Ordering {
    if let (Value::Atom(x), Value::Atom(y)) = (a, b) {
        return x.cmp(y);
    }
    let (ea, eb) = (a.entries(), b.entries());
    let n = ea.len().max(eb.len());
    for i in 0..n {
        let x = ea.get(i).cloned().unwrap_or_else(Ext::zero);
        let y = eb.get(i).cloned().unwrap_or_else(Ext::zero);
        match x.cmp(&y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Entries of `base` padded with zeros up to `depth`, followed by `last`.
pub(crate) fn hyper_below(base: &Value, depth: usize, last: Ext) -> Value {
    let mut e = base.entries();
    while e.len() < depth {
        e.push(Ext::zero());
    }
    e.push(last);
    Value::from_entries(e)
}

/// An infinite value at the given depth: `depth` copies of the infinity
/// followed by an ordering coefficient.
pub(crate) fn hyper_infinite(positive: bool, depth: usize, coeff: i64) -> Value {
    let inf = if positive { Ext::PosInf } else { Ext::NegInf };
    let mut e = vec![inf; depth.max(1)];
    e.push(Ext::Fin(rat(coeff)));
    Value::from_entries(e)
}
