//! Compactification of definable sets.
//!
//! The compactification of a set is again a definable set: every type is
//! encoded as a tuple of its parameters under a tag that records the original
//! tag and the shape of the type. For example the fresh type of the atoms
//! tagged `a` is the arity-zero element `type:eq:a:[F0]`, and the principal
//! type of atom `3` is `type:eq:a:[c0](3)`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use crate::atom::{Atom, Rational, Support, Theory, Value};
use crate::cell::{cell_of, point_in_interval, Cell, DloSlot, EqSlot};
use crate::defset::{DefSet, Tuple};
use crate::error::{Error, Result};
use crate::piecewise::DefFun;
use crate::types::{read_back, type_member, DloComp, EqComp, OneType, Realizer, Type, TypeBody, TypeDesc};

/// Shape of a type: its body with parameters replaced by their index in
/// order of first occurrence.
pub type Pattern = TypeBody<usize>;

fn pattern_string(p: &Pattern) -> String {
    let parts: Vec<String> = match p {
        TypeBody::Eq(cs) => cs
            .iter()
            .map(|c| match c {
                EqComp::Const(i) => format!("c{i}"),
                EqComp::Fresh(j) => format!("F{j}"),
            })
            .collect(),
        TypeBody::Dlo(cs) => cs
            .iter()
            .map(|c| match &c.one {
                OneType::Point(i) => format!("P{i}"),
                OneType::Left(i) => format!("L{i}#{}", c.rank),
                OneType::Right(i) => format!("R{i}#{}", c.rank),
                OneType::MinusInf => format!("-inf#{}", c.rank),
                OneType::PlusInf => format!("+inf#{}", c.rank),
            })
            .collect(),
    };
    parts.join("|")
}

fn parse_pattern(theory: Theory, s: &str) -> Option<Pattern> {
    if s.is_empty() {
        return Some(match theory {
            Theory::Eq => TypeBody::Eq(Vec::new()),
            Theory::Dlo => TypeBody::Dlo(Vec::new()),
        });
    }
    let tokens = s.split('|');
    match theory {
        Theory::Eq => tokens
            .map(|t| {
                if let Some(i) = t.strip_prefix('c') {
                    i.parse().ok().map(EqComp::Const)
                } else {
                    t.strip_prefix('F')?.parse().ok().map(EqComp::Fresh)
                }
            })
            .collect::<Option<Vec<_>>>()
            .map(TypeBody::Eq),
        Theory::Dlo => tokens
            .map(|t| {
                if let Some(i) = t.strip_prefix('P') {
                    return i.parse().ok().map(|i| DloComp::new(OneType::Point(i), 0));
                }
                let (head, rank) = t.split_once('#')?;
                let rank: usize = rank.parse().ok()?;
                let one = match head {
                    "-inf" => OneType::MinusInf,
                    "+inf" => OneType::PlusInf,
                    _ => {
                        let (kind, i) = head.split_at(1);
                        let i: usize = i.parse().ok()?;
                        match kind {
                            "L" => OneType::Left(i),
                            "R" => OneType::Right(i),
                            _ => return None,
                        }
                    }
                };
                Some(DloComp::new(one, rank))
            })
            .collect::<Option<Vec<_>>>()
            .map(TypeBody::Dlo),
    }
}

/// Splits a type tag into theory, original tag and pattern.
pub fn parse_type_tag(tag: &str) -> Option<(Theory, String, Pattern)> {
    let rest = tag.strip_prefix("type:")?;
    let (th, rest) = rest.split_once(':')?;
    let theory = match th {
        "eq" => Theory::Eq,
        "dlo" => Theory::Dlo,
        _ => return None,
    };
    let idx = rest.rfind(":[")?;
    let orig = &rest[..idx];
    let pat = rest[idx + 2..].strip_suffix(']')?;
    Some((theory, orig.to_string(), parse_pattern(theory, pat)?))
}

pub fn type_tag(theory: Theory, orig: &str, pattern: &Pattern) -> String {
    format!("type:{}:{}:[{}]", theory, orig, pattern_string(pattern))
}

/// Encodes a type as an element of the compactification.
pub fn encode<P: Clone + Ord>(p: &Type<P>) -> (String, Vec<P>) {
    let params = p.body.params();
    let pattern = p
        .body
        .map(|a| params.iter().position(|b| b == a).expect("parameter is listed"));
    (type_tag(p.theory(), &p.tag, &pattern), params)
}

pub fn encode_tuple(p: &TypeDesc) -> Tuple {
    let (tag, params) = encode(p);
    Tuple::new(tag, params.into_iter().map(Value::Atom).collect())
}

/// Decodes an element of a compactification back into its type.
pub fn decode(x: &Tuple) -> Result<TypeDesc> {
    let (_, orig, pattern) =
        parse_type_tag(&x.tag).ok_or_else(|| Error::InvalidType(format!("`{}` is not a type tag", x.tag)))?;
    let n = pattern.params().len();
    if n != x.arity() {
        return Err(Error::ArityMismatch {
            tag: x.tag.clone(),
            expected: n,
            found: x.arity(),
        });
    }
    let body = pattern.try_map(|i| {
        x.values[*i]
            .as_atom()
            .cloned()
            .ok_or_else(|| Error::InvalidType(format!("parameter {} is not standard", x.values[*i])))
    })?;
    let p = Type::new(orig, body);
    p.validate()?;
    Ok(p)
}

/// Rank of the types encoded under a tag, if it is a type tag.
pub fn tag_rank(tag: &str) -> Option<usize> {
    parse_type_tag(tag).map(|(_, _, p)| p.rank())
}

/// All types whose realization lies in the given cell, with new parameters
/// instantiated by concrete atoms of the cell's orbit.
fn types_in_cell(tag: &str, cell: &Cell, support: &Support) -> Vec<TypeDesc> {
    match cell {
        Cell::Eq(slots) => {
            let blocks = cell.dimension();
            let base = support.fresh_base();
            let mut out = Vec::new();
            for mask in 0u64..(1u64 << blocks) {
                let mut fresh_ids: BTreeMap<usize, usize> = BTreeMap::new();
                let comps = slots
                    .iter()
                    .map(|s| match s {
                        EqSlot::Const(a) => EqComp::Const(a.clone()),
                        EqSlot::Block(b) if mask & (1 << b) != 0 => {
                            EqComp::Const(Atom(Rational::from_integer(&base + BigInt::from(*b))))
                        }
                        EqSlot::Block(b) => {
                            let n = fresh_ids.len();
                            EqComp::Fresh(*fresh_ids.entry(*b).or_insert(n))
                        }
                    })
                    .collect();
                out.push(Type::new(tag, TypeBody::Eq(comps)));
            }
            out
        }
        Cell::Dlo(slots) => {
            let atoms = support.atoms();
            let mut width: BTreeMap<usize, usize> = BTreeMap::new();
            for s in slots {
                if let DloSlot::Gap { gap, pos } = s {
                    let w = width.entry(*gap).or_insert(0);
                    *w = (*w).max(pos + 1);
                }
            }
            // Per interval, every admissible list of one-types of its blocks.
            let mut per_gap: Vec<(usize, Vec<Vec<DloComp<Atom>>>)> = Vec::new();
            for (&gap, &t) in &width {
                let lo = gap.checked_sub(1).map(|i| atoms[i].clone());
                let hi = atoms.get(gap).cloned();
                per_gap.push((gap, gap_assignments(lo, hi, t)));
            }
            let mut out = Vec::new();
            let mut choice = vec![0usize; per_gap.len()];
            loop {
                let comps = slots
                    .iter()
                    .map(|s| match s {
                        DloSlot::Point(a) => DloComp::new(OneType::Point(a.clone()), 0),
                        DloSlot::Gap { gap, pos } => {
                            let k = per_gap.iter().position(|(g, _)| g == gap).expect("gap listed");
                            per_gap[k].1[choice[k]][*pos].clone()
                        }
                    })
                    .collect();
                out.push(Type::new(tag, TypeBody::Dlo(comps)));
                // Advance the mixed-radix counter.
                let mut i = 0;
                loop {
                    if i == choice.len() {
                        return out;
                    }
                    choice[i] += 1;
                    if choice[i] < per_gap[i].1.len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

/// One-types of `t` strictly increasing blocks inside the interval
/// `(lo, hi)`, for every number of new parameters.
fn gap_assignments(lo: Option<Atom>, hi: Option<Atom>, t: usize) -> Vec<Vec<DloComp<Atom>>> {
    let mut out = Vec::new();
    for k in 0..=t {
        let params: Vec<Atom> = (0..k)
            .map(|i| Atom(point_in_interval(lo.as_ref().map(|a| a.0.clone()), hi.as_ref().map(|a| a.0.clone()), i, k)))
            .collect();
        let mut shapes = vec![match &lo {
            Some(a) => OneType::Right(a.clone()),
            None => OneType::MinusInf,
        }];
        for v in &params {
            shapes.push(OneType::Left(v.clone()));
            shapes.push(OneType::Point(v.clone()));
            shapes.push(OneType::Right(v.clone()));
        }
        shapes.push(match &hi {
            Some(a) => OneType::Left(a.clone()),
            None => OneType::PlusInf,
        });
        let mut current = Vec::new();
        assign_shapes(&shapes, k, t, 0, &mut current, &mut out);
    }
    out
}

fn assign_shapes(
    shapes: &[OneType<Atom>],
    k: usize,
    t: usize,
    min: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<DloComp<Atom>>>,
) {
    if current.len() == t {
        let used: BTreeSet<usize> = current.iter().filter(|&&i| i > 0 && i <= 3 * k).map(|i| (i - 1) / 3).collect();
        if used.len() != k {
            return;
        }
        let mut comps = Vec::with_capacity(t);
        for (b, &s) in current.iter().enumerate() {
            let rank = current[..b].iter().filter(|&&x| x == s).count();
            comps.push(DloComp::new(shapes[s].clone(), rank));
        }
        out.push(comps);
        return;
    }
    for s in min..shapes.len() {
        if shapes[s].is_point() && current.last() == Some(&s) {
            continue;
        }
        current.push(s);
        assign_shapes(shapes, k, t, s, current, out);
        current.pop();
    }
}

/// The compactification of `s`: every type containing `s`, encoded as a
/// tagged tuple of parameters.
pub fn compactify(s: &DefSet) -> DefSet {
    let theory = s.theory();
    let support = s.support();
    let mut cells = Vec::new();
    for (tag, cell) in s.cells() {
        for p in types_in_cell(tag, cell, support) {
            let x = encode_tuple(&p);
            cells.push((x.tag.clone(), cell_of(theory, support, &x.values)));
        }
    }
    DefSet::new(theory, support.clone(), cells).expect("encoded cells are canonical")
}

/// Every type of the compactification, for sets whose orbits are finite.
pub fn types_of(compact: &DefSet) -> Result<Vec<TypeDesc>> {
    compact.representatives().iter().map(decode).collect()
}

/// Number of orbits of each rank in a compactification.
pub fn orbit_summary(compact: &DefSet) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (tag, _) in compact.cells() {
        if let Some(r) = tag_rank(tag) {
            *out.entry(r).or_insert(0) += 1;
        }
    }
    out
}

pub fn format_summary(summary: &BTreeMap<usize, usize>) -> String {
    let parts: Vec<String> = summary
        .iter()
        .map(|(r, n)| {
            if *r == 0 {
                format!("principal={n}")
            } else {
                format!("rank{r}={n}")
            }
        })
        .collect();
    format!("orbits: {}", parts.join(", "))
}

/// The image of a type under a definable map.
pub fn pushforward(f: &DefFun, p: &TypeDesc) -> Result<TypeDesc> {
    let mut r = Realizer::new();
    let x = p.realize(&mut r);
    if !f.domain().member(&x)? {
        return Err(Error::NotInDomain(p.to_string()));
    }
    let y = f.apply_unchecked(&x)?;
    Ok(read_back(f.codomain().theory(), &y))
}

fn check_compact_subset(z: &DefSet, s: &DefSet) -> Result<()> {
    if !z.is_subset(&compactify(s))? {
        return Err(Error::NotASubsetOfCompactification(z.to_string()));
    }
    Ok(())
}

/// Limit points of a subset of the compactification of `s`: the limits of
/// each parameterized family along non-principal types of its parameters.
pub fn derivative(z: &DefSet, s: &DefSet) -> Result<DefSet> {
    check_compact_subset(z, s)?;
    let theory = z.theory();
    let support = z.support().clone();
    let mut cells = Vec::new();
    for (tag, cell) in z.cells() {
        let (_, orig, pattern) = parse_type_tag(tag).expect("checked above");
        let params = DefSet::new(theory, support.clone(), [("p".to_string(), cell.clone())])?;
        let around = compactify(&params);
        for (utag, ucell) in around.cells() {
            if tag_rank(utag) == Some(0) {
                continue;
            }
            let u = decode(&Tuple::new(utag.clone(), ucell.representative(&support)))?;
            let mut r = Realizer::new();
            let c = u.realize(&mut r).values;
            let inner = pattern.map(|i| c[*i].clone());
            let x = Tuple::new(orig.clone(), r.realize(&inner));
            let q = encode_tuple(&read_back(theory, &x));
            cells.push((q.tag.clone(), cell_of(theory, &support, &q.values)));
        }
    }
    DefSet::new(theory, support, cells)
}

/// Iterated derivatives of the compactification of `s` until the empty set
/// or until `limit` steps; the first entry is the compactification itself.
pub fn derivative_chain(s: &DefSet, limit: usize) -> Result<Vec<DefSet>> {
    let mut chain = vec![compactify(s)];
    while chain.len() <= limit {
        let last = chain.last().expect("nonempty");
        if last.is_empty() {
            break;
        }
        let next = derivative(last, s)?;
        chain.push(next);
    }
    Ok(chain)
}

/// The compactification split by rank: entry `i` holds the types of rank `i`.
pub fn rank_stratify(s: &DefSet) -> Vec<DefSet> {
    let compact = compactify(s);
    let max = orbit_summary(&compact).keys().max().copied().unwrap_or(0);
    (0..=max)
        .map(|i| {
            let cells = compact
                .cells()
                .filter(|(t, _)| tag_rank(t) == Some(i))
                .cloned()
                .collect::<Vec<_>>();
            DefSet::new(s.theory(), compact.support().clone(), cells).expect("subset of a valid set")
        })
        .collect()
}

/// The canonical isolating set of an equality type: the orbit of its
/// generic point over its own parameters.
pub fn isolating_set(p: &TypeDesc) -> Result<DefSet> {
    let comps = match &p.body {
        TypeBody::Eq(cs) => cs,
        TypeBody::Dlo(_) => {
            return Err(Error::UnsupportedTheory(
                "isolating sets are defined for equality atoms; ordered atoms use truncated hyperrectangles".into(),
            ))
        }
    };
    let support = Support::new(p.support());
    let slots = comps
        .iter()
        .map(|c| match c {
            EqComp::Const(a) => EqSlot::Const(a.clone()),
            EqComp::Fresh(j) => EqSlot::Block(*j),
        })
        .collect();
    DefSet::new(Theory::Eq, support, [(p.tag.clone(), Cell::Eq(slots))])
}

/// Whether the type is in the compactification of `s`.
pub fn in_compactification(p: &TypeDesc, s: &DefSet) -> Result<bool> {
    type_member(p, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{Piecewise, Term};

    fn distinct_pairs() -> DefSet {
        DefSet::new(
            Theory::Eq,
            Support::empty(),
            [("p".to_string(), Cell::Eq(vec![EqSlot::Block(0), EqSlot::Block(1)]))],
        )
        .unwrap()
    }

    #[test]
    fn atoms_have_one_non_principal_type() {
        let c = compactify(&DefSet::power(Theory::Eq, "a", 1));
        assert_eq!(format_summary(&orbit_summary(&c)), "orbits: principal=1, rank1=1");
        assert!(c.member(&encode_tuple(&TypeDesc::fresh("a"))).unwrap());
    }

    #[test]
    fn distinct_pairs_have_two_n_plus_one() {
        let c = compactify(&distinct_pairs());
        let s = orbit_summary(&c);
        assert_eq!(s.get(&1), Some(&2));
        assert_eq!(s.get(&2), Some(&1));
    }

    #[test]
    fn rationals_compactify_to_three_lines_and_two_points() {
        let c = compactify(&DefSet::power(Theory::Dlo, "q", 1));
        assert_eq!(c.orbit_count(), 5);
        let infinite = c.cells().filter(|(_, cell)| !cell.is_point()).count();
        assert_eq!(infinite, 3);
    }

    #[test]
    fn empty_set_compactifies_to_empty() {
        assert!(compactify(&DefSet::empty(Theory::Eq)).is_empty());
    }

    #[test]
    fn encoding_round_trips() {
        let c = compactify(&DefSet::power(Theory::Dlo, "q", 2).refine(&Support::new(vec![Atom::int(0)])).unwrap());
        for x in c.representatives() {
            let p = decode(&x).unwrap();
            assert_eq!(encode_tuple(&p), x);
        }
    }

    #[test]
    fn pushforward_examples() {
        let a2 = DefSet::power(Theory::Eq, "p", 2);
        let a = DefSet::power(Theory::Eq, "a", 1);
        let proj = DefFun::new(
            a.clone(),
            Piecewise::from_fn(a2.clone(), &Support::empty(), |_| Ok(("a".to_string(), vec![Term::In(0)]))).unwrap(),
        )
        .unwrap();
        let p = Type::new("p", TypeBody::Eq(vec![EqComp::Fresh(0), EqComp::Fresh(1)]));
        assert_eq!(pushforward(&proj, &p).unwrap(), TypeDesc::fresh("a"));
        let swap = DefFun::new(
            a2.clone(),
            Piecewise::from_fn(a2.clone(), &Support::empty(), |_| Ok(("p".to_string(), vec![Term::In(1), Term::In(0)])))
                .unwrap(),
        )
        .unwrap();
        let q = Type::new("p", TypeBody::Eq(vec![EqComp::Const(Atom::int(3)), EqComp::Fresh(0)]));
        let expected = Type::new("p", TypeBody::Eq(vec![EqComp::Fresh(0), EqComp::Const(Atom::int(3))]));
        assert_eq!(pushforward(&swap, &q).unwrap(), expected);
        assert_eq!(pushforward(&DefFun::identity(&a2), &q).unwrap(), q);
    }

    #[test]
    fn derivative_of_atoms() {
        let a = DefSet::power(Theory::Eq, "a", 1);
        let chain = derivative_chain(&a, 5).unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[1].orbit_count(), 1);
        assert!(chain[1].member(&encode_tuple(&TypeDesc::fresh("a"))).unwrap());
        assert!(chain[2].is_empty());
    }

    #[test]
    fn finite_sets_have_no_limit_points() {
        let f = DefSet::finite(Theory::Eq, &[Tuple::atoms("a", &[1]), Tuple::atoms("a", &[2])]).unwrap();
        assert!(derivative(&compactify(&f), &f).unwrap().is_empty());
    }

    #[test]
    fn stratification_of_pairs() {
        let strata = rank_stratify(&DefSet::power(Theory::Eq, "p", 2));
        assert_eq!(strata.len(), 3);
        // Rank one: (c, F), (F, c) and the fresh diagonal.
        assert_eq!(strata[1].orbit_count(), 3);
        assert_eq!(strata[2].orbit_count(), 1);
    }

    #[test]
    fn isolating_sets() {
        let a = DefSet::power(Theory::Eq, "a", 1);
        assert!(isolating_set(&TypeDesc::fresh("a")).unwrap().same_as(&a).unwrap());
        let p = Type::new("p", TypeBody::Eq(vec![EqComp::Const(Atom::int(3)), EqComp::Fresh(0)]));
        let l = isolating_set(&p).unwrap();
        assert!(l.member(&Tuple::atoms("p", &[3, 4])).unwrap());
        assert!(!l.member(&Tuple::atoms("p", &[3, 3])).unwrap());
        assert!(!l.member(&Tuple::atoms("p", &[4, 5])).unwrap());
        let q = Type::new("q", TypeBody::Dlo(vec![DloComp::new(OneType::PlusInf, 0)]));
        assert!(matches!(isolating_set(&q), Err(Error::UnsupportedTheory(_))));
    }

    #[test]
    fn ordered_limits_of_points() {
        let q = DefSet::power(Theory::Dlo, "q", 1);
        let d = derivative(&compactify(&q), &q).unwrap();
        // Every non-principal type is a limit point; no principal one is.
        assert_eq!(d.orbit_count(), 4);
        assert!(d.cells().all(|(t, _)| tag_rank(t) == Some(1)));
    }
}
