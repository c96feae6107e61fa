//! Definable sets: finite unions of tagged orbit cells over a finite support.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::atom::{Atom, Support, Theory, Value};
use crate::cell::{cell_of, enumerate_cells, product_cells, refine_cell, Cell};
use crate::error::{Error, Result};

/// A tagged tuple. Tags make disjoint unions explicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tuple {
    pub tag: String,
    pub values: Vec<Value>,
}

impl Tuple {
    pub fn new(tag: impl Into<String>, values: Vec<Value>) -> Tuple {
        Tuple {
            tag: tag.into(),
            values,
        }
    }

    pub fn atoms(tag: impl Into<String>, atoms: &[i64]) -> Tuple {
        Tuple::new(tag, atoms.iter().map(|&a| Value::atom(a)).collect())
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    /// Standard atoms occurring in the tuple.
    pub fn standard_atoms(&self) -> Vec<Atom> {
        self.values.iter().filter_map(|v| v.as_atom().cloned()).collect()
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.tag)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Tag of a pair built by [`DefSet::product`].
pub fn pair_tag(left: &str, right: &str) -> String {
    format!("({left},{right})")
}

/// The concatenation of two tuples, tagged as a pair.
pub fn pair(left: &Tuple, right: &Tuple) -> Tuple {
    let mut values = left.values.clone();
    values.extend(right.values.iter().cloned());
    Tuple::new(pair_tag(&left.tag, &right.tag), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    Finite(usize),
    CountablyInfinite,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Finite(n) => write!(f, "{n}"),
            Cardinality::CountablyInfinite => f.write_str("countably infinite"),
        }
    }
}

/// A definable set, stored as canonical cells over its own support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefSet {
    theory: Theory,
    support: Support,
    cells: BTreeSet<(String, Cell)>,
}

impl DefSet {
    pub fn empty(theory: Theory) -> DefSet {
        DefSet {
            theory,
            support: Support::empty(),
            cells: BTreeSet::new(),
        }
    }

    /// Validates and canonicalizes a cell list over `support`.
    pub fn new(
        theory: Theory,
        support: Support,
        cells: impl IntoIterator<Item = (String, Cell)>,
    ) -> Result<DefSet> {
        for a in support.atoms() {
            a.check_theory(theory)?;
        }
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        let mut set = BTreeSet::new();
        for (tag, cell) in cells {
            theory.expect(cell.theory())?;
            cell.validate(&support)?;
            let n = cell.arity();
            match arities.get(&tag) {
                Some(&m) if m != n => {
                    return Err(Error::ArityMismatch {
                        tag,
                        expected: m,
                        found: n,
                    })
                }
                _ => {
                    arities.insert(tag.clone(), n);
                }
            }
            set.insert((tag, cell));
        }
        Ok(DefSet {
            theory,
            support,
            cells: set,
        })
    }

    /// `A^n` under a single tag.
    pub fn power(theory: Theory, tag: &str, n: usize) -> DefSet {
        let cells = enumerate_cells(theory, &Support::empty(), n)
            .into_iter()
            .map(|c| (tag.to_string(), c));
        DefSet::new(theory, Support::empty(), cells).expect("enumerated cells are canonical")
    }

    /// A finite set of standard tuples.
    pub fn finite(theory: Theory, tuples: &[Tuple]) -> Result<DefSet> {
        let support = Support::new(tuples.iter().flat_map(Tuple::standard_atoms).collect());
        let mut cells = Vec::new();
        for t in tuples {
            if !t.values.iter().all(Value::is_standard) {
                return Err(Error::InvalidCell(format!("{t} is not a standard tuple")));
            }
            cells.push((t.tag.clone(), cell_of(theory, &support, &t.values)));
        }
        DefSet::new(theory, support, cells)
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn cells(&self) -> impl Iterator<Item = &(String, Cell)> {
        self.cells.iter()
    }

    pub fn cell_set(&self) -> &BTreeSet<(String, Cell)> {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Arity of every tag occurring in the set.
    pub fn tags(&self) -> BTreeMap<String, usize> {
        self.cells
            .iter()
            .map(|(t, c)| (t.clone(), c.arity()))
            .collect()
    }

    pub fn arity_of(&self, tag: &str) -> Option<usize> {
        self.cells
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, c)| c.arity())
    }

    /// A representative tuple of every cell.
    pub fn representatives(&self) -> Vec<Tuple> {
        self.cells
            .iter()
            .map(|(t, c)| Tuple::new(t.clone(), c.representative(&self.support)))
            .collect()
    }

    /// The same set described by cells over a larger support.
    pub fn refine(&self, support: &Support) -> Result<DefSet> {
        for a in support.atoms() {
            a.check_theory(self.theory)?;
        }
        if !self.support.is_subset(support) {
            let missing = self
                .support
                .atoms()
                .iter()
                .find(|a| !support.contains(a))
                .expect("not a subset");
            return Err(Error::SupportTooSmall(missing.to_string()));
        }
        if *support == self.support {
            return Ok(self.clone());
        }
        let mut cells = BTreeSet::new();
        for (tag, cell) in &self.cells {
            for c in refine_cell(cell, &self.support, support) {
                cells.insert((tag.clone(), c));
            }
        }
        Ok(DefSet {
            theory: self.theory,
            support: support.clone(),
            cells,
        })
    }

    fn joint(&self, other: &DefSet) -> Result<(DefSet, DefSet)> {
        self.theory.expect(other.theory)?;
        let s = self.support.union(&other.support);
        Ok((self.refine(&s)?, other.refine(&s)?))
    }

    fn check_arities(&self, other: &DefSet) -> Result<()> {
        let mine = self.tags();
        for (tag, n) in other.tags() {
            if let Some(&m) = mine.get(&tag) {
                if m != n {
                    return Err(Error::ArityMismatch {
                        tag,
                        expected: m,
                        found: n,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn union(&self, other: &DefSet) -> Result<DefSet> {
        self.check_arities(other)?;
        let (a, b) = self.joint(other)?;
        Ok(DefSet {
            cells: a.cells.union(&b.cells).cloned().collect(),
            ..a
        })
    }

    pub fn intersect(&self, other: &DefSet) -> Result<DefSet> {
        self.check_arities(other)?;
        let (a, b) = self.joint(other)?;
        Ok(DefSet {
            cells: a.cells.intersection(&b.cells).cloned().collect(),
            ..a
        })
    }

    pub fn difference(&self, other: &DefSet) -> Result<DefSet> {
        self.check_arities(other)?;
        let (a, b) = self.joint(other)?;
        Ok(DefSet {
            cells: a.cells.difference(&b.cells).cloned().collect(),
            ..a
        })
    }

    /// Complement inside an ambient set.
    pub fn complement(&self, ambient: Option<&DefSet>) -> Result<DefSet> {
        let ambient = ambient.ok_or(Error::AmbientMissing)?;
        if !self.is_subset(ambient)? {
            return Err(Error::NotASubset("complement of a set outside its ambient".into()));
        }
        ambient.difference(self)
    }

    /// Cartesian product; the tag of a pair is `(left,right)`.
    pub fn product(&self, other: &DefSet) -> Result<DefSet> {
        let (a, b) = self.joint(other)?;
        let mut cells = BTreeSet::new();
        for (ta, ca) in &a.cells {
            for (tb, cb) in &b.cells {
                for c in product_cells(ca, cb, &a.support) {
                    cells.insert((pair_tag(ta, tb), c));
                }
            }
        }
        Ok(DefSet {
            theory: a.theory,
            support: a.support,
            cells,
        })
    }

    /// Renames every tag by `f`. Distinct tags must stay distinct.
    pub fn retag(&self, f: impl Fn(&str) -> String) -> DefSet {
        DefSet {
            theory: self.theory,
            support: self.support.clone(),
            cells: self.cells.iter().map(|(t, c)| (f(t), c.clone())).collect(),
        }
    }

    /// Cells carrying the given tag.
    pub fn restrict_tag(&self, tag: &str) -> DefSet {
        DefSet {
            theory: self.theory,
            support: self.support.clone(),
            cells: self.cells.iter().filter(|(t, _)| t == tag).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &DefSet) -> Result<bool> {
        let (a, b) = self.joint(other)?;
        Ok(a.cells.is_subset(&b.cells))
    }

    /// Semantic equality, independent of the chosen supports.
    pub fn same_as(&self, other: &DefSet) -> Result<bool> {
        let (a, b) = self.joint(other)?;
        Ok(a.cells == b.cells)
    }

    pub fn member(&self, x: &Tuple) -> Result<bool> {
        if let Some(n) = self.arity_of(&x.tag) {
            if n != x.arity() {
                return Err(Error::ArityMismatch {
                    tag: x.tag.clone(),
                    expected: n,
                    found: x.arity(),
                });
            }
        } else {
            return Ok(false);
        }
        for v in &x.values {
            match (self.theory, v) {
                (Theory::Eq, Value::Hyper(_)) | (Theory::Dlo, Value::Fresh(_)) => {
                    return Err(Error::TheoryMismatch {
                        expected: self.theory.name().into(),
                        found: v.to_string(),
                    })
                }
                (t, Value::Atom(a)) => a.check_theory(t)?,
                _ => {}
            }
        }
        let c = cell_of(self.theory, &self.support, &x.values);
        Ok(self.cells.contains(&(x.tag.clone(), c)))
    }

    /// The cell of `x` over the set's support, whether or not `x` is a member.
    pub fn locate(&self, x: &Tuple) -> (String, Cell) {
        (x.tag.clone(), cell_of(self.theory, &self.support, &x.values))
    }

    pub fn orbit_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cardinality(&self) -> Cardinality {
        if self.cells.iter().all(|(_, c)| c.is_point()) {
            Cardinality::Finite(self.cells.len())
        } else {
            Cardinality::CountablyInfinite
        }
    }

    /// Drops support atoms that no cell needs, yielding the smallest support
    /// over which the same set is a union of cells.
    pub fn minimize(&self) -> DefSet {
        let mut current = self.clone();
        for a in self.support.atoms() {
            let smaller = Support::new(
                current
                    .support
                    .atoms()
                    .iter()
                    .filter(|b| *b != a)
                    .cloned()
                    .collect(),
            );
            if let Some(d) = current.coarsen(&smaller) {
                current = d;
            }
        }
        current
    }

    /// The set as cells over a smaller support, if it is definable there.
    fn coarsen(&self, smaller: &Support) -> Option<DefSet> {
        let mut coarse = BTreeSet::new();
        let mut tags: BTreeSet<(String, usize)> = BTreeSet::new();
        for (t, c) in &self.cells {
            tags.insert((t.clone(), c.arity()));
        }
        for (tag, n) in tags {
            for c in enumerate_cells(self.theory, smaller, n) {
                let parts = refine_cell(&c, smaller, &self.support);
                let inside = parts
                    .iter()
                    .filter(|p| self.cells.contains(&(tag.clone(), (*p).clone())))
                    .count();
                if inside == parts.len() {
                    coarse.insert((tag.clone(), c));
                } else if inside > 0 {
                    return None;
                }
            }
        }
        Some(DefSet {
            theory: self.theory,
            support: smaller.clone(),
            cells: coarse,
        })
    }
}

impl fmt::Display for DefSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} set over {{", self.theory)?;
        for (i, a) in self.support.atoms().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}:")?;
        for (t, c) in &self.cells {
            write!(f, " {t}{c}")?;
        }
        Ok(())
    }
}
