//! Orbit cells: complete descriptions of one orbit of `A^n` under the
//! automorphisms fixing a finite support.
//!
//! A cell is always read relative to a [`Support`]. Canonical cells over the
//! same support are pairwise disjoint and tile `A^n`, which turns most set
//! operations into syntactic comparisons.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::atom::{dlo_cmp, rat, Atom, Rational, Support, Theory, Value};
use crate::error::{Error, Result};

/// A coordinate of an equality cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqSlot {
    /// Pinned to a support atom.
    Const(Atom),
    /// Member of an equality block; blocks are numbered by first occurrence
    /// and their values avoid every support atom.
    Block(usize),
}

/// A coordinate of an ordered cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DloSlot {
    /// Pinned to a support atom.
    Point(Atom),
    /// Strictly inside interval `gap` (between support atoms `gap-1` and
    /// `gap`, with infinite sentinels), at block position `pos` of the
    /// interval's ordered partition.
    Gap { gap: usize, pos: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Eq(Vec<EqSlot>),
    Dlo(Vec<DloSlot>),
}

impl Cell {
    pub fn unit(theory: Theory) -> Cell {
        match theory {
            Theory::Eq => Cell::Eq(Vec::new()),
            Theory::Dlo => Cell::Dlo(Vec::new()),
        }
    }

    pub fn theory(&self) -> Theory {
        match self {
            Cell::Eq(_) => Theory::Eq,
            Cell::Dlo(_) => Theory::Dlo,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Cell::Eq(s) => s.len(),
            Cell::Dlo(s) => s.len(),
        }
    }

    /// Number of free blocks (equality) or interval blocks (order).
    pub fn dimension(&self) -> usize {
        match self {
            Cell::Eq(s) => s
                .iter()
                .filter_map(|x| match x {
                    EqSlot::Block(b) => Some(*b + 1),
                    _ => None,
                })
                .max()
                .unwrap_or(0),
            Cell::Dlo(s) => {
                let mut blocks: Vec<(usize, usize)> = s
                    .iter()
                    .filter_map(|x| match x {
                        DloSlot::Gap { gap, pos } => Some((*gap, *pos)),
                        _ => None,
                    })
                    .collect();
                blocks.sort();
                blocks.dedup();
                blocks.len()
            }
        }
    }

    /// True when the cell is a single tuple.
    pub fn is_point(&self) -> bool {
        self.dimension() == 0
    }

    /// Support atoms mentioned by the cell.
    pub fn constants(&self) -> Vec<Atom> {
        match self {
            Cell::Eq(s) => s
                .iter()
                .filter_map(|x| match x {
                    EqSlot::Const(a) => Some(a.clone()),
                    _ => None,
                })
                .collect(),
            Cell::Dlo(s) => s
                .iter()
                .filter_map(|x| match x {
                    DloSlot::Point(a) => Some(a.clone()),
                    _ => None,
                })
                .collect(),
        }
    }

    /// A concrete tuple of standard atoms lying in the cell.
    pub fn representative(&self, support: &Support) -> Vec<Value> {
        match self {
            Cell::Eq(slots) => {
                let base = support.fresh_base();
                slots
                    .iter()
                    .map(|s| match s {
                        EqSlot::Const(a) => Value::Atom(a.clone()),
                        EqSlot::Block(b) => {
                            Value::Atom(Atom(Rational::from_integer(&base + BigInt::from(*b))))
                        }
                    })
                    .collect()
            }
            Cell::Dlo(slots) => {
                let mut width: BTreeMap<usize, usize> = BTreeMap::new();
                for s in slots {
                    if let DloSlot::Gap { gap, pos } = s {
                        let w = width.entry(*gap).or_insert(0);
                        *w = (*w).max(pos + 1);
                    }
                }
                let atoms = support.atoms();
                slots
                    .iter()
                    .map(|s| match s {
                        DloSlot::Point(a) => Value::Atom(a.clone()),
                        DloSlot::Gap { gap, pos } => {
                            let t = width[gap];
                            let lo = gap.checked_sub(1).map(|i| atoms[i].0.clone());
                            let hi = atoms.get(*gap).map(|a| a.0.clone());
                            Value::Atom(Atom(point_in_interval(lo, hi, *pos, t)))
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn contains(&self, support: &Support, values: &[Value]) -> bool {
        values.len() == self.arity() && cell_of(self.theory(), support, values) == *self
    }

    /// Canonical cell of the projection onto `coords`.
    pub fn project(&self, support: &Support, coords: &[usize]) -> Cell {
        let rep = self.representative(support);
        let sub: Vec<Value> = coords.iter().map(|&i| rep[i].clone()).collect();
        cell_of(self.theory(), support, &sub)
    }

    /// Checks canonical form relative to `support`.
    pub fn validate(&self, support: &Support) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCell(m));
        match self {
            Cell::Eq(slots) => {
                let mut next = 0;
                for s in slots {
                    match s {
                        EqSlot::Const(a) if !support.contains(a) => {
                            return bad(format!("constant {a} is not in the support"))
                        }
                        EqSlot::Block(b) if *b > next => {
                            return bad(format!("block {b} appears before block {next}"))
                        }
                        EqSlot::Block(b) if *b == next => next += 1,
                        _ => {}
                    }
                }
            }
            Cell::Dlo(slots) => {
                for s in slots {
                    match s {
                        DloSlot::Point(a) if !support.contains(a) => {
                            return bad(format!("point {a} is not in the support"))
                        }
                        DloSlot::Gap { gap, .. } if *gap > support.len() => {
                            return bad(format!("interval {gap} does not exist"))
                        }
                        _ => {}
                    }
                }
                let mut used: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for s in slots {
                    if let DloSlot::Gap { gap, pos } = s {
                        used.entry(*gap).or_default().push(*pos);
                    }
                }
                for (gap, mut ps) in used {
                    ps.sort();
                    ps.dedup();
                    if ps.iter().enumerate().any(|(i, p)| i != *p) {
                        return bad(format!("interval {gap} has non-contiguous block positions"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        match self {
            Cell::Eq(slots) => {
                for (i, s) in slots.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match s {
                        EqSlot::Const(a) => write!(f, "{a}")?,
                        EqSlot::Block(b) => write!(f, "b{b}")?,
                    }
                }
            }
            Cell::Dlo(slots) => {
                for (i, s) in slots.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match s {
                        DloSlot::Point(a) => write!(f, "{a}")?,
                        DloSlot::Gap { gap, pos } => write!(f, "g{gap}.{pos}")?,
                    }
                }
            }
        }
        f.write_str(")")
    }
}

/// The `pos`-th of `t` evenly spread points strictly inside `(lo, hi)`.
pub(crate) fn point_in_interval(lo: Option<Rational>, hi: Option<Rational>, pos: usize, t: usize) -> Rational {
    let pos = rat(pos as i64);
    let t = rat(t as i64);
    let one = rat(1);
    match (lo, hi) {
        (Some(l), Some(h)) => &l + (&h - &l) * (&pos + &one) / (&t + &one),
        (None, Some(h)) => h - (&t - &pos),
        (Some(l), None) => l + pos + one,
        (None, None) => pos,
    }
}

/// The canonical cell containing `values` over `support`. Works for
/// non-standard values as well.
pub fn cell_of(theory: Theory, support: &Support, values: &[Value]) -> Cell {
    match theory {
        Theory::Eq => {
            let mut seen: Vec<&Value> = Vec::new();
            let slots = values
                .iter()
                .map(|v| match v {
                    Value::Atom(a) if support.contains(a) => EqSlot::Const(a.clone()),
                    _ => match seen.iter().position(|w| *w == v) {
                        Some(b) => EqSlot::Block(b),
                        None => {
                            seen.push(v);
                            EqSlot::Block(seen.len() - 1)
                        }
                    },
                })
                .collect();
            Cell::Eq(slots)
        }
        Theory::Dlo => {
            let atoms = support.atoms();
            let mut located: Vec<std::result::Result<Atom, usize>> = Vec::with_capacity(values.len());
            let mut per_gap: BTreeMap<usize, Vec<&Value>> = BTreeMap::new();
            for v in values {
                // Binary search for the position of v among the support atoms.
                let (mut lo, mut hi) = (0usize, atoms.len());
                let mut hit = None;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    match dlo_cmp(&Value::Atom(atoms[mid].clone()), v) {
                        Ordering::Less => lo = mid + 1,
                        Ordering::Greater => hi = mid,
                        Ordering::Equal => {
                            hit = Some(mid);
                            break;
                        }
                    }
                }
                match hit {
                    Some(i) => located.push(Ok(atoms[i].clone())),
                    None => {
                        located.push(Err(lo));
                        per_gap.entry(lo).or_default().push(v);
                    }
                }
            }
            for vs in per_gap.values_mut() {
                vs.sort_by(|a, b| dlo_cmp(a, b));
                vs.dedup_by(|a, b| dlo_cmp(a, b) == Ordering::Equal);
            }
            let slots = located
                .into_iter()
                .zip(values)
                .map(|(loc, v)| match loc {
                    Ok(a) => DloSlot::Point(a),
                    Err(gap) => {
                        let pos = per_gap[&gap]
                            .binary_search_by(|w| dlo_cmp(w, v))
                            .expect("value was inserted above");
                        DloSlot::Gap { gap, pos }
                    }
                })
                .collect();
            Cell::Dlo(slots)
        }
    }
}

/// All one-coordinate extensions of a canonical cell.
fn extensions(cell: &Cell, support: &Support) -> Vec<Cell> {
    match cell {
        Cell::Eq(slots) => {
            let blocks = cell.dimension();
            let mut out = Vec::new();
            for a in support.atoms() {
                let mut s = slots.clone();
                s.push(EqSlot::Const(a.clone()));
                out.push(Cell::Eq(s));
            }
            for b in 0..=blocks {
                let mut s = slots.clone();
                s.push(EqSlot::Block(b));
                out.push(Cell::Eq(s));
            }
            out
        }
        Cell::Dlo(slots) => {
            let mut out = Vec::new();
            for a in support.atoms() {
                let mut s = slots.clone();
                s.push(DloSlot::Point(a.clone()));
                out.push(Cell::Dlo(s));
            }
            for gap in 0..=support.len() {
                let width = slots
                    .iter()
                    .filter_map(|s| match s {
                        DloSlot::Gap { gap: g, pos } if *g == gap => Some(pos + 1),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(0);
                // Join an existing block.
                for pos in 0..width {
                    let mut s = slots.clone();
                    s.push(DloSlot::Gap { gap, pos });
                    out.push(Cell::Dlo(s));
                }
                // Open a new block at every position.
                for pos in 0..=width {
                    let mut s: Vec<DloSlot> = slots
                        .iter()
                        .map(|x| match x {
                            DloSlot::Gap { gap: g, pos: p } if *g == gap && *p >= pos => {
                                DloSlot::Gap { gap, pos: p + 1 }
                            }
                            other => other.clone(),
                        })
                        .collect();
                    s.push(DloSlot::Gap { gap, pos });
                    out.push(Cell::Dlo(s));
                }
            }
            out
        }
    }
}

/// Enumerates canonical cells of the given arity over `support`, extending
/// `start` one coordinate at a time. `keep` is called on every partial cell
/// (with its representative) and prunes the search when it returns false.
pub fn enumerate_cells_from(
    start: Cell,
    support: &Support,
    arity: usize,
    keep: &mut dyn FnMut(&Cell, &[Value]) -> bool,
) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut stack = vec![start];
    while let Some(c) = stack.pop() {
        if c.arity() == arity {
            out.push(c);
            continue;
        }
        for e in extensions(&c, support) {
            let rep = e.representative(support);
            if keep(&e, &rep) {
                stack.push(e);
            }
        }
    }
    out.sort();
    out
}

/// All canonical cells of `A^arity` over `support`.
pub fn enumerate_cells(theory: Theory, support: &Support, arity: usize) -> Vec<Cell> {
    enumerate_cells_from(Cell::unit(theory), support, arity, &mut |_, _| true)
}

/// Splits a cell over `from` into the cells over the larger support `to`.
pub fn refine_cell(cell: &Cell, from: &Support, to: &Support) -> Vec<Cell> {
    if from == to {
        return vec![cell.clone()];
    }
    let n = cell.arity();
    let prefixes: Vec<Cell> = (0..=n)
        .map(|k| cell.project(from, &(0..k).collect::<Vec<_>>()))
        .collect();
    let theory = cell.theory();
    enumerate_cells_from(Cell::unit(theory), to, n, &mut |partial, rep| {
        cell_of(theory, from, rep) == prefixes[partial.arity()]
    })
}

/// Cells over `support` of the concatenation of a tuple in `left` and a
/// tuple in `right` (both cells over the same support).
pub fn product_cells(left: &Cell, right: &Cell, support: &Support) -> Vec<Cell> {
    let n1 = left.arity();
    let n2 = right.arity();
    let prefixes: Vec<Cell> = (0..=n2)
        .map(|k| right.project(support, &(0..k).collect::<Vec<_>>()))
        .collect();
    let theory = left.theory();
    enumerate_cells_from(left.clone(), support, n1 + n2, &mut |partial, rep| {
        let k = partial.arity() - n1;
        cell_of(theory, support, &rep[n1..]) == prefixes[k]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup(xs: &[i64]) -> Support {
        Support::new(xs.iter().map(|&x| Atom::int(x)).collect())
    }

    #[test]
    fn eq_pairs_have_two_orbits() {
        let cells = enumerate_cells(Theory::Eq, &Support::empty(), 2);
        assert_eq!(cells.len(), 2);
    }

    #[test]
    fn eq_cell_counts_match_partition_counts() {
        // Over the empty support the orbits of A^n are set partitions of n:
        // Bell numbers 1, 1, 2, 5, 15.
        for (n, bell) in [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15)] {
            assert_eq!(enumerate_cells(Theory::Eq, &Support::empty(), n).len(), bell);
        }
    }

    #[test]
    fn dlo_cell_counts_match_weak_orders() {
        // Over the empty support the orbits of Q^n are weak orders of n
        // (Fubini numbers 1, 1, 3, 13, 75).
        for (n, fubini) in [(0, 1), (1, 1), (2, 3), (3, 13), (4, 75)] {
            assert_eq!(enumerate_cells(Theory::Dlo, &Support::empty(), n).len(), fubini);
        }
        // One atom: a single coordinate is below, at or above it.
        assert_eq!(enumerate_cells(Theory::Dlo, &sup(&[0]), 1).len(), 3);
    }

    #[test]
    fn representatives_lie_in_their_cells() {
        let s = sup(&[0, 2, 5]);
        for theory in [Theory::Eq, Theory::Dlo] {
            for n in 0..=3 {
                for c in enumerate_cells(theory, &s, n) {
                    let rep = c.representative(&s);
                    assert!(c.contains(&s, &rep), "{c} does not contain its representative");
                    c.validate(&s).unwrap();
                }
            }
        }
    }

    #[test]
    fn refine_splits_eq_block_on_new_constant() {
        let c = Cell::Eq(vec![EqSlot::Block(0)]);
        let parts = refine_cell(&c, &Support::empty(), &sup(&[5]));
        assert_eq!(parts.len(), 2);
        assert!(parts.contains(&Cell::Eq(vec![EqSlot::Const(Atom::int(5))])));
    }

    #[test]
    fn refine_splits_dlo_interval() {
        let s = sup(&[0, 1]);
        let c = Cell::Dlo(vec![DloSlot::Gap { gap: 1, pos: 0 }]);
        let t = Support::new(vec![Atom::int(0), Atom::int(1), Atom::frac(1, 2)]);
        let parts = refine_cell(&c, &s, &t);
        assert_eq!(parts.len(), 3);
        assert!(parts.contains(&Cell::Dlo(vec![DloSlot::Point(Atom::frac(1, 2))])));
    }

    #[test]
    fn refine_to_same_support_is_identity() {
        let s = sup(&[1]);
        let c = Cell::Eq(vec![EqSlot::Block(0), EqSlot::Const(Atom::int(1))]);
        assert_eq!(refine_cell(&c, &s, &s), vec![c]);
    }

    #[test]
    fn product_of_two_free_cells() {
        let a = Cell::Eq(vec![EqSlot::Block(0)]);
        assert_eq!(product_cells(&a, &a, &Support::empty()).len(), 2);
        let q = Cell::Dlo(vec![DloSlot::Gap { gap: 0, pos: 0 }]);
        assert_eq!(product_cells(&q, &q, &Support::empty()).len(), 3);
    }

    #[test]
    fn cell_of_nonstandard_values() {
        use crate::atom::{hyper_below, Ext};
        let s = sup(&[0, 1]);
        let eps = hyper_below(&Value::atom(0), 1, Ext::Fin(rat(1)));
        let c = cell_of(Theory::Dlo, &s, &[eps]);
        assert_eq!(c, Cell::Dlo(vec![DloSlot::Gap { gap: 1, pos: 0 }]));
        let e = cell_of(Theory::Eq, &s, &[Value::Fresh(3), Value::Fresh(3), Value::atom(1)]);
        assert_eq!(
            e,
            Cell::Eq(vec![EqSlot::Block(0), EqSlot::Block(0), EqSlot::Const(Atom::int(1))])
        );
    }
}
