//! Free vector spaces over definable sets, definable bases of their duals,
//! and the definable basis of spaces of linear maps.
//!
//! Over equality atoms a function `f: X -> Q` with finitely many values is a
//! finite combination of isolating sets of types; the coefficients come out
//! of a triangular sweep by decreasing rank. Over ordered atoms every orbit
//! collapses to strictly increasing tuples, where the truncated
//! hyperrectangles form a basis; coefficients come from an exact linear solve.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use num_traits::{One, Zero};

use crate::atom::{dlo_cmp, rat, Atom, Rational, Support, Theory, Value};
use crate::cell::{cell_of, enumerate_cells, Cell, EqSlot};
use crate::compact::{compactify, decode, isolating_set, parse_type_tag};
use crate::defset::{pair, pair_tag, DefSet, Tuple};
use crate::error::{Error, Result};
use crate::linalg;
use crate::piecewise::{Piecewise, ScalarFun};
use crate::types::{EqComp, Type, TypeBody, TypeDesc};

/// A finite formal combination of elements of `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeVec {
    base: DefSet,
    entries: BTreeMap<Tuple, Rational>,
}

impl FreeVec {
    pub fn zero(base: &DefSet) -> FreeVec {
        FreeVec {
            base: base.clone(),
            entries: BTreeMap::new(),
        }
    }

    pub fn new(base: &DefSet, entries: impl IntoIterator<Item = (Tuple, Rational)>) -> Result<FreeVec> {
        let mut v = FreeVec::zero(base);
        for (x, c) in entries {
            v.add_entry(x, c)?;
        }
        Ok(v)
    }

    pub fn unit(base: &DefSet, x: Tuple) -> Result<FreeVec> {
        FreeVec::new(base, [(x, Rational::one())])
    }

    pub fn base(&self) -> &DefSet {
        &self.base
    }

    pub fn add_entry(&mut self, x: Tuple, c: Rational) -> Result<()> {
        if !self.base.member(&x)? {
            return Err(Error::NotInDomain(format!("{x} is not in the base")));
        }
        let e = self.entries.entry(x).or_insert_with(Rational::zero);
        *e += c;
        self.entries.retain(|_, c| !c.is_zero());
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Tuple, &Rational)> {
        self.entries.iter()
    }

    pub fn get(&self, x: &Tuple) -> Rational {
        self.entries.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, c: &Rational) -> FreeVec {
        let mut out = FreeVec::zero(&self.base);
        if !c.is_zero() {
            out.entries = self.entries.iter().map(|(k, v)| (k.clone(), v * c)).collect();
        }
        out
    }

    pub fn plus(&self, other: &FreeVec) -> FreeVec {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            *out.entries.entry(k.clone()).or_insert_with(Rational::zero) += v;
        }
        out.entries.retain(|_, c| !c.is_zero());
        out
    }

    /// Pairing with a dual vector.
    pub fn pair_with(&self, f: &ScalarFun) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (x, c) in &self.entries {
            sum += c * f.eval(x)?;
        }
        Ok(sum)
    }
}

impl fmt::Display for FreeVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (i, (x, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*{x}", crate::atom::format_rational(c))?;
        }
        Ok(())
    }
}

/// An element of the dual space: a total scalar function on the base.
pub type DualVec = ScalarFun;

/// The truncated hyperrectangle `T^C(q)` inside strictly increasing tuples:
/// coordinates in `C` lie strictly below their bound, the others equal it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncRect {
    /// Whether each coordinate is strictly bounded (belongs to `C`).
    pub strict: Vec<bool>,
    /// Bounds; `None` is `+inf`.
    pub bounds: Vec<Option<Atom>>,
}

impl TruncRect {
    pub fn new(strict: Vec<bool>, bounds: Vec<Option<Atom>>) -> Result<TruncRect> {
        if strict.len() != bounds.len() {
            return Err(Error::ArityMismatch {
                tag: "rect".into(),
                expected: strict.len(),
                found: bounds.len(),
            });
        }
        for w in bounds.windows(2) {
            if bound_gt(&w[0], &w[1]) {
                return Err(Error::InvalidType("rectangle bounds must be weakly increasing".into()));
            }
        }
        for (s, b) in strict.iter().zip(&bounds) {
            if !s && b.is_none() {
                return Err(Error::InvalidType("a pinned coordinate needs a finite bound".into()));
            }
        }
        Ok(TruncRect { strict, bounds })
    }

    pub fn arity(&self) -> usize {
        self.strict.len()
    }

    /// Whether some strictly increasing tuple lies in the rectangle.
    pub fn is_nonempty(&self) -> bool {
        let mut last: Option<&Atom> = None;
        for (s, b) in self.strict.iter().zip(&self.bounds) {
            let above = match (b, last) {
                (_, None) => true,
                (None, Some(_)) => true,
                (Some(q), Some(l)) => q > l,
            };
            if !above {
                return false;
            }
            if !s {
                last = b.as_ref();
            }
        }
        true
    }

    /// Membership of a tuple (not necessarily increasing).
    pub fn contains(&self, y: &[Value]) -> bool {
        if y.len() != self.arity() {
            return false;
        }
        if y.windows(2).any(|w| dlo_cmp(&w[0], &w[1]) != std::cmp::Ordering::Less) {
            return false;
        }
        y.iter().zip(self.strict.iter().zip(&self.bounds)).all(|(v, (s, b))| match (s, b) {
            (true, None) => true,
            (true, Some(q)) => dlo_cmp(v, &Value::Atom(q.clone())) == std::cmp::Ordering::Less,
            (false, Some(q)) => dlo_cmp(v, &Value::Atom(q.clone())) == std::cmp::Ordering::Equal,
            (false, None) => false,
        })
    }

    /// Every nonempty rectangle of arity `m` with bounds from `support` and
    /// `+inf`.
    pub fn candidates(m: usize, support: &Support) -> Vec<TruncRect> {
        let mut values: Vec<Option<Atom>> = support.atoms().iter().cloned().map(Some).collect();
        values.push(None);
        let mut out = Vec::new();
        let mut bounds = Vec::new();
        fn rec(values: &[Option<Atom>], start: usize, m: usize, bounds: &mut Vec<Option<Atom>>, out: &mut Vec<TruncRect>) {
            if bounds.len() == m {
                for mask in 0u32..(1 << m) {
                    let strict: Vec<bool> = (0..m).map(|i| mask & (1 << i) != 0).collect();
                    if strict.iter().zip(bounds.iter()).any(|(s, b)| !s && b.is_none()) {
                        continue;
                    }
                    let r = TruncRect {
                        strict,
                        bounds: bounds.clone(),
                    };
                    if r.is_nonempty() {
                        out.push(r);
                    }
                }
                return;
            }
            for i in start..values.len() {
                bounds.push(values[i].clone());
                rec(values, i, m, bounds, out);
                bounds.pop();
            }
        }
        rec(&values, 0, m, &mut bounds, &mut out);
        out
    }
}

fn bound_gt(a: &Option<Atom>, b: &Option<Atom>) -> bool {
    match (a, b) {
        (None, Some(_)) => true,
        (Some(x), Some(y)) => x > y,
        _ => false,
    }
}

impl fmt::Display for TruncRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("T{")?;
        let c: Vec<String> = (0..self.arity()).filter(|&i| self.strict[i]).map(|i| (i + 1).to_string()).collect();
        write!(f, "{}}}(", c.join(","))?;
        let b: Vec<String> = self
            .bounds
            .iter()
            .map(|q| q.as_ref().map_or("+inf".to_string(), |a| a.to_string()))
            .collect();
        write!(f, "{})", b.join(","))
    }
}

/// A dual basis vector: the isolating set of an equality type, or a
/// truncated hyperrectangle on one order shape of a tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisElem {
    Type(TypeDesc),
    Rect {
        tag: String,
        /// Orbit of the tuples over the empty support; its blocks are the
        /// coordinates of the collapsed increasing tuple.
        shape: Cell,
        rect: TruncRect,
    },
}

impl BasisElem {
    /// A one-coordinate rectangle on the tag, shape `x`.
    pub fn rect1(tag: &str, strict: bool, bound: Option<Atom>) -> BasisElem {
        BasisElem::Rect {
            tag: tag.to_string(),
            shape: Cell::Dlo(vec![crate::cell::DloSlot::Gap { gap: 0, pos: 0 }]),
            rect: TruncRect {
                strict: vec![strict],
                bounds: vec![bound],
            },
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            BasisElem::Type(p) => p.arity(),
            BasisElem::Rect { shape, .. } => shape.arity(),
        }
    }

    pub fn theory(&self) -> Theory {
        match self {
            BasisElem::Type(p) => p.theory(),
            BasisElem::Rect { .. } => Theory::Dlo,
        }
    }
}

impl fmt::Display for BasisElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElem::Type(p) => write!(f, "lambda {p}"),
            BasisElem::Rect { tag, shape, rect } => write!(f, "{tag}{shape} {rect}"),
        }
    }
}

/// Collapses a tuple to its strictly increasing list of distinct values.
fn collapse(values: &[Value]) -> Vec<Value> {
    let mut y = values.to_vec();
    y.sort_by(dlo_cmp);
    y.dedup_by(|a, b| dlo_cmp(a, b) == std::cmp::Ordering::Equal);
    y
}

/// Value of a basis vector at a tuple: 1 inside, 0 outside.
pub fn eval_basis(b: &BasisElem, x: &Tuple) -> Result<bool> {
    if x.arity() != b.arity() {
        return Err(Error::ArityMismatch {
            tag: x.tag.clone(),
            expected: b.arity(),
            found: x.arity(),
        });
    }
    match b {
        BasisElem::Type(p) => {
            if x.tag != p.tag {
                return Ok(false);
            }
            isolating_set(p)?.member(x)
        }
        BasisElem::Rect { tag, shape, rect } => {
            if &x.tag != tag || cell_of(Theory::Dlo, &Support::empty(), &x.values) != *shape {
                return Ok(false);
            }
            Ok(rect.contains(&collapse(&x.values)))
        }
    }
}

/// A finite combination of dual basis vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BasisExpansion {
    pub terms: BTreeMap<BasisElem, Rational>,
}

impl BasisExpansion {
    pub fn single(b: BasisElem) -> BasisExpansion {
        BasisExpansion {
            terms: [(b, Rational::one())].into_iter().collect(),
        }
    }

    pub fn add(&mut self, b: BasisElem, c: Rational) {
        let e = self.terms.entry(b.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&b);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &Tuple) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (b, c) in &self.terms {
            if b.arity() == x.arity() && eval_basis(b, x)? {
                sum += c;
            }
        }
        Ok(sum)
    }

    /// Compares with `f` at every cell representative of the domain, and at
    /// generic points for equality atoms. Returns the number of points checked.
    pub fn verify(&self, f: &ScalarFun) -> Result<usize> {
        let refined = f.domain().refine(f.support())?;
        let mut checked = 0;
        for (tag, cell) in refined.cells() {
            let mut points = vec![Tuple::new(tag.clone(), cell.representative(f.support()))];
            if cell.theory() == Theory::Eq {
                points.push(Tuple::new(tag.clone(), crate::piecewise::generic_point(cell, f.support())));
            }
            for x in points {
                if self.eval(&x)? != f.eval(&x)? {
                    return Err(Error::NonzeroResidual(format!("expansion differs from the function at {x}")));
                }
                checked += 1;
            }
        }
        Ok(checked)
    }
}

impl fmt::Display for BasisExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (b, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*[{b}]", crate::atom::format_rational(c))?;
        }
        Ok(())
    }
}

/// The generic type of an equality cell.
fn generic_type(tag: &str, cell: &Cell) -> TypeDesc {
    let Cell::Eq(slots) = cell else {
        unreachable!("equality cell expected")
    };
    let comps = slots
        .iter()
        .map(|s| match s {
            EqSlot::Const(a) => EqComp::Const(a.clone()),
            EqSlot::Block(b) => EqComp::Fresh(*b),
        })
        .collect();
    Type::new(tag, TypeBody::Eq(comps))
}

/// Expansion of an equality-atom function in isolating sets of types.
pub fn decompose_eq(f: &ScalarFun) -> Result<BasisExpansion> {
    Theory::Eq.expect(f.theory())?;
    let support = f.support().clone();
    let mut residual: BTreeMap<(String, Cell), Rational> =
        f.pieces().map(|(k, v)| (k.clone(), v.clone())).collect();
    let reps: BTreeMap<(String, Cell), Tuple> = residual
        .keys()
        .map(|(t, c)| ((t.clone(), c.clone()), Tuple::new(t.clone(), c.representative(&support))))
        .collect();
    let mut order: Vec<(String, Cell)> = residual.keys().cloned().collect();
    order.sort_by_key(|(_, c)| std::cmp::Reverse(c.dimension()));
    let mut out = BasisExpansion::default();
    for key in order {
        let c = residual[&key].clone();
        if c.is_zero() {
            continue;
        }
        let p = generic_type(&key.0, &key.1);
        let lambda = isolating_set(&p)?;
        for (k, v) in residual.iter_mut() {
            if lambda.member(&reps[k])? {
                *v -= &c;
            }
        }
        out.add(BasisElem::Type(p), c);
    }
    if let Some(((t, c), v)) = residual.iter().find(|(_, v)| !v.is_zero()) {
        return Err(Error::NonzeroResidual(format!("{v} left on {t}{c}")));
    }
    Ok(out)
}

/// Expansion of an ordered-atom function in truncated hyperrectangles.
pub fn decompose_dlo(f: &ScalarFun) -> Result<BasisExpansion> {
    Theory::Dlo.expect(f.theory())?;
    let support = f.support().clone();
    let empty = Support::empty();
    let mut groups: BTreeMap<(String, Cell), ()> = BTreeMap::new();
    for ((tag, cell), _) in f.pieces() {
        let rep = cell.representative(&support);
        groups.insert((tag.clone(), cell_of(Theory::Dlo, &empty, &rep)), ());
    }
    let mut out = BasisExpansion::default();
    for (tag, shape) in groups.into_keys() {
        let (rows, cands, rhs) = dlo_system(f, &tag, &shape, &support)?;
        let coeffs = linalg::solve(&rows, &rhs).ok_or_else(|| {
            Error::SystemInsolvable(format!("no combination of rectangles matches {tag}{shape}"))
        })?;
        for (rect, c) in cands.into_iter().zip(coeffs) {
            if !c.is_zero() {
                out.add(
                    BasisElem::Rect {
                        tag: tag.clone(),
                        shape: shape.clone(),
                        rect,
                    },
                    c,
                );
            }
        }
    }
    Ok(out)
}

/// Expands a tuple of distinct increasing values along an order shape.
fn expand_shape(shape: &Cell, y: &[Value]) -> Vec<Value> {
    match shape {
        Cell::Dlo(slots) => slots
            .iter()
            .map(|s| match s {
                crate::cell::DloSlot::Gap { pos, .. } => y[*pos].clone(),
                crate::cell::DloSlot::Point(_) => unreachable!("shape has an empty support"),
            })
            .collect(),
        Cell::Eq(_) => unreachable!("ordered shape expected"),
    }
}

type System = (Vec<Vec<Rational>>, Vec<TruncRect>, Vec<Rational>);

/// The evaluation matrix of candidate rectangles on the cells of increasing
/// tuples, and the right-hand side given by `f` (zero off its domain).
fn dlo_system(f: &ScalarFun, tag: &str, shape: &Cell, support: &Support) -> Result<System> {
    let m = shape.dimension();
    let cands = TruncRect::candidates(m, support);
    let domain = f.domain().refine(support)?;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for cell in enumerate_cells(Theory::Dlo, support, m) {
        let y = cell.representative(support);
        if y.windows(2).any(|w| dlo_cmp(&w[0], &w[1]) != std::cmp::Ordering::Less) {
            continue;
        }
        let x = Tuple::new(tag, expand_shape(shape, &y));
        let v = if domain.member(&x)? { f.eval(&x)? } else { Rational::zero() };
        rows.push(
            cands
                .iter()
                .map(|r| if r.contains(&y) { Rational::one() } else { Rational::zero() })
                .collect(),
        );
        rhs.push(v);
    }
    Ok((rows, cands, rhs))
}

/// Rank of the evaluation matrix of the candidate rectangles for one
/// collapsed arity, and the number of candidates.
pub fn rect_independence(m: usize, support: &Support) -> (usize, usize) {
    let cands = TruncRect::candidates(m, support);
    let mut rows = Vec::new();
    for cell in enumerate_cells(Theory::Dlo, support, m) {
        let y = cell.representative(support);
        if y.windows(2).any(|w| dlo_cmp(&w[0], &w[1]) != std::cmp::Ordering::Less) {
            continue;
        }
        rows.push(cands.iter().map(|r| if r.contains(&y) { rat(1) } else { rat(0) }).collect());
    }
    (linalg::rank(&rows), cands.len())
}

/// The family of all rectangles of one collapsed arity as a definable set
/// over the empty support. The tag records which coordinates are strict and
/// which bounds are `+inf` or repeated; the coordinates are the distinct
/// finite bounds in increasing order.
pub fn rect_family(m: usize) -> DefSet {
    // Shapes of bound vectors: every weakly increasing vector over k finite
    // values followed by +inf, realized with the values 1..=k.
    let mut cells = Vec::new();
    for k in 0..=m {
        let support = Support::new((1..=k as i64).map(Atom::int).collect());
        for r in TruncRect::candidates(m, &support) {
            let finite: Vec<Atom> = {
                let mut v: Vec<Atom> = r.bounds.iter().flatten().cloned().collect();
                v.dedup();
                v
            };
            if finite.len() != k {
                continue;
            }
            let strict: String = r.strict.iter().map(|s| if *s { '1' } else { '0' }).collect();
            let bounds: Vec<String> = r
                .bounds
                .iter()
                .map(|b| match b {
                    None => "inf".to_string(),
                    Some(a) => format!("p{}", finite.iter().position(|x| x == a).expect("listed")),
                })
                .collect();
            let tag = format!("rect:{strict}:[{}]", bounds.join(","));
            let values: Vec<Value> = finite.into_iter().map(Value::Atom).collect();
            cells.push((tag, cell_of(Theory::Dlo, &Support::empty(), &values)));
        }
    }
    DefSet::new(Theory::Dlo, Support::empty(), cells).expect("cells over the empty support")
}

/// Expansion in the basis of the function's theory.
pub fn decompose(f: &ScalarFun) -> Result<BasisExpansion> {
    match f.theory() {
        Theory::Eq => decompose_eq(f),
        Theory::Dlo => decompose_dlo(f),
    }
}

/// Splits a pair tag `(l,r)` knowing the possible left tags.
pub fn split_pair_tag<'a>(tag: &'a str, left: impl IntoIterator<Item = &'a String>) -> Option<(String, String)> {
    let inner = tag.strip_prefix('(')?.strip_suffix(')')?;
    left.into_iter().find_map(|l| {
        let rest = inner.strip_prefix(l.as_str())?.strip_prefix(',')?;
        Some((l.clone(), rest.to_string()))
    })
}

/// Linear maps between free spaces over equality atoms, with the basis of
/// types of `x × y` whose fresh blocks all meet `x`.
#[derive(Debug)]
pub struct HomSpace {
    x: DefSet,
    y: DefSet,
    basis: DefSet,
}

impl HomSpace {
    pub fn new(x: &DefSet, y: &DefSet) -> Result<HomSpace> {
        for s in [x, y] {
            if s.theory() != Theory::Eq {
                return Err(Error::UnsupportedTheory(
                    "hom bases are built for equality atoms only".into(),
                ));
            }
        }
        let full = compactify(&x.product(y)?);
        let xtags: Vec<String> = x.tags().into_keys().collect();
        let cells: Vec<(String, Cell)> = full
            .cells()
            .filter(|(tag, _)| {
                let (_, orig, pattern) = parse_type_tag(tag).expect("type tag");
                let (lt, _) = split_pair_tag(&orig, &xtags).expect("pair tag");
                let nx = x.arity_of(&lt).expect("left tag");
                factors(&pattern, nx)
            })
            .cloned()
            .collect();
        let basis = DefSet::new(Theory::Eq, full.support().clone(), cells)?;
        Ok(HomSpace {
            x: x.clone(),
            y: y.clone(),
            basis,
        })
    }

    pub fn source(&self) -> &DefSet {
        &self.x
    }

    pub fn target(&self) -> &DefSet {
        &self.y
    }

    /// The basis as a definable set of encoded types.
    pub fn basis(&self) -> &DefSet {
        &self.basis
    }

    fn split(&self, b: &TypeDesc) -> Result<(String, String, usize)> {
        let xtags: Vec<String> = self.x.tags().into_keys().collect();
        let (lt, rt) = split_pair_tag(&b.tag, &xtags)
            .ok_or_else(|| Error::BasisMismatch(format!("{b} is not a type of a pair")))?;
        let nx = self.x.arity_of(&lt).expect("left tag");
        Ok((lt, rt, nx))
    }

    pub fn contains(&self, b: &TypeDesc) -> Result<bool> {
        self.basis.member(&crate::compact::encode_tuple(b))
    }

    fn check(&self, b: &TypeDesc) -> Result<()> {
        if !self.contains(b)? {
            return Err(Error::BasisMismatch(format!("{b} is not in the hom basis")));
        }
        Ok(())
    }

    /// The unique `y` with `(x0, y)` in the isolating set of `b`, if any.
    pub fn image(&self, b: &TypeDesc, x0: &Tuple) -> Result<Option<Tuple>> {
        let (lt, rt, nx) = self.split(b)?;
        if x0.tag != lt || x0.arity() != nx {
            return Ok(None);
        }
        let TypeBody::Eq(comps) = &b.body else {
            return Err(Error::UnsupportedTheory("ordered hom basis".into()));
        };
        let mut fresh: BTreeMap<usize, Value> = BTreeMap::new();
        for (c, v) in comps[..nx].iter().zip(&x0.values) {
            if let EqComp::Fresh(j) = c {
                fresh.entry(*j).or_insert_with(|| v.clone());
            }
        }
        let y: Vec<Value> = comps[nx..]
            .iter()
            .map(|c| match c {
                EqComp::Const(a) => Value::Atom(a.clone()),
                EqComp::Fresh(j) => fresh[j].clone(),
            })
            .collect();
        let y = Tuple::new(rt, y);
        if isolating_set(b)?.member(&pair(x0, &y))? {
            Ok(Some(y))
        } else {
            Ok(None)
        }
    }

    pub fn apply(&self, b: &TypeDesc, v: &FreeVec) -> Result<FreeVec> {
        self.check(b)?;
        if !v.base().same_as(&self.x)? {
            return Err(Error::BasisMismatch("vector is not over the source".into()));
        }
        let mut out = FreeVec::zero(&self.y);
        for (x0, c) in v.entries() {
            if let Some(y) = self.image(b, x0)? {
                out.add_entry(y, c.clone())?;
            }
        }
        Ok(out)
    }

    pub fn apply_expansion(&self, e: &BasisExpansion, v: &FreeVec) -> Result<FreeVec> {
        let mut out = FreeVec::zero(&self.y);
        for (b, c) in &e.terms {
            let BasisElem::Type(p) = b else {
                return Err(Error::BasisMismatch(format!("{b} is not a type")));
            };
            out = out.plus(&self.apply(p, v)?.scaled(c));
        }
        Ok(out)
    }

    /// Expansion of the map with kernel `k` on `x × y`.
    pub fn decompose_kernel(&self, k: &ScalarFun) -> Result<BasisExpansion> {
        let e = decompose_eq(k)?;
        for b in e.terms.keys() {
            let BasisElem::Type(p) = b else { unreachable!("equality expansion") };
            if !self.contains(p)? {
                return Err(Error::DecompositionOutsideHomBasis(p.to_string()));
            }
        }
        Ok(e)
    }
}

/// Every fresh block of the `y` part also occurs in the `x` part.
fn factors(pattern: &TypeBody<usize>, nx: usize) -> bool {
    let TypeBody::Eq(comps) = pattern else { return false };
    comps[nx..].iter().all(|c| match c {
        EqComp::Fresh(j) => comps[..nx].contains(&EqComp::Fresh(*j)),
        EqComp::Const(_) => true,
    })
}

/// `b2 ∘ b1` for `b1` in `Hom(x, y)` and `b2` in `Hom(y, z)`, expanded in
/// `Hom(x, z)`.
pub fn hom_compose(
    outer: &HomSpace,
    b2: &TypeDesc,
    inner: &HomSpace,
    b1: &TypeDesc,
    target: &HomSpace,
) -> Result<BasisExpansion> {
    if !inner.y.same_as(&outer.x)? || !target.x.same_as(&inner.x)? || !target.y.same_as(&outer.y)? {
        return Err(Error::BasisMismatch("hom spaces do not compose".into()));
    }
    inner.check(b1)?;
    outer.check(b2)?;
    let support = Support::new(b1.support())
        .union(&Support::new(b2.support()))
        .union(inner.x.support())
        .union(inner.y.support())
        .union(outer.y.support());
    let xz = inner.x.product(&outer.y)?;
    let xtags: Vec<String> = inner.x.tags().into_keys().collect();
    let k = Piecewise::from_fn(xz, &support, |w| {
        let (lt, _) = split_pair_tag(&w.tag, &xtags).expect("pair tag");
        let nx = inner.x.arity_of(&lt).expect("left tag");
        let x0 = Tuple::new(lt, w.values[..nx].to_vec());
        let z_values = &w.values[nx..];
        let hit = match inner.image(b1, &x0)? {
            Some(y) => match outer.image(b2, &y)? {
                Some(z) => z.values == z_values && pair_tag(&x0.tag, &z.tag) == w.tag,
                None => false,
            },
            None => false,
        };
        Ok(if hit { Rational::one() } else { Rational::zero() })
    })?;
    target.decompose_kernel(&k)
}

/// Endomorphisms of a free space with a memoized composition table.
#[derive(Debug)]
pub struct EndoAlgebra {
    space: HomSpace,
    cache: Mutex<HashMap<(TypeDesc, TypeDesc), BasisExpansion>>,
}

impl EndoAlgebra {
    pub fn new(x: &DefSet) -> Result<EndoAlgebra> {
        Ok(EndoAlgebra {
            space: HomSpace::new(x, x)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &HomSpace {
        &self.space
    }

    /// The identity map: the fresh diagonal type of every tag.
    pub fn identity(&self) -> BasisExpansion {
        let x = &self.space.x;
        let support = x.support().clone();
        let xx = x.product(x).expect("same theory");
        let xtags: Vec<String> = x.tags().into_keys().collect();
        let k = Piecewise::from_fn(xx, &support, |w| {
            let (lt, rt) = split_pair_tag(&w.tag, &xtags).expect("pair tag");
            let n = x.arity_of(&lt).expect("left tag");
            Ok(if lt == rt && w.values[..n] == w.values[n..] {
                Rational::one()
            } else {
                Rational::zero()
            })
        })
        .expect("identity kernel");
        self.space.decompose_kernel(&k).expect("identity decomposes")
    }

    fn compose_basis(&self, b2: &TypeDesc, b1: &TypeDesc) -> Result<BasisExpansion> {
        let key = (b2.clone(), b1.clone());
        if let Some(e) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(e.clone());
        }
        let e = hom_compose(&self.space, b2, &self.space, b1, &self.space)?;
        self.cache.lock().expect("cache lock").insert(key, e.clone());
        Ok(e)
    }

    /// `e2 ∘ e1`.
    pub fn compose(&self, e2: &BasisExpansion, e1: &BasisExpansion) -> Result<BasisExpansion> {
        let mut out = BasisExpansion::default();
        for (b2, c2) in &e2.terms {
            for (b1, c1) in &e1.terms {
                let (BasisElem::Type(p2), BasisElem::Type(p1)) = (b2, b1) else {
                    return Err(Error::BasisMismatch("hom expansions hold types".into()));
                };
                for (b, c) in self.compose_basis(p2, p1)?.terms {
                    out.add(b, c * c1 * c2);
                }
            }
        }
        Ok(out)
    }

    /// Applies an expansion to a vector.
    pub fn apply(&self, e: &BasisExpansion, v: &FreeVec) -> Result<FreeVec> {
        self.space.apply_expansion(e, v)
    }
}

/// Decodes every basis element of a hom space (the basis must be finite in
/// orbits, which it always is; this lists one type per cell representative).
pub fn hom_basis_types(h: &HomSpace) -> Result<Vec<TypeDesc>> {
    h.basis().representatives().iter().map(decode).collect()
}
