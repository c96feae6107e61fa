//! Versioned JSON documents for sets, functions, expansions, measures and
//! automata. Atoms and rationals are written as strings (`"5"`, `"1/3"`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::atom::{format_rational, parse_rational, Atom, Rational, Support, Theory, Value};
use crate::automata::{Automaton, DetAutomaton, ProbAutomaton, UltraAutomaton, WeightedAutomaton};
use crate::cell::{Cell, DloSlot, EqSlot};
use crate::compact::{encode, parse_type_tag};
use crate::defset::{DefSet, Tuple};
use crate::error::{Error, Result};
use crate::freelin::{BasisElem, BasisExpansion, FreeVec, TruncRect};
use crate::measure::{Kernel, Measure};
use crate::piecewise::{DefFun, Piecewise, ScalarFun, Term};
use crate::types::{Type, TypeDesc, TypeTemplate};

pub const DEFSET: &str = "atomcompact/defset-v1";
pub const DEFFUN: &str = "atomcompact/deffun-v1";
pub const SCALARFUN: &str = "atomcompact/scalarfun-v1";
pub const EXPANSION: &str = "atomcompact/expansion-v1";
pub const MEASURE: &str = "atomcompact/measure-v1";
pub const AUTOMATON: &str = "atomcompact/automaton-v1";

pub const SCHEMAS: [&str; 6] = [DEFSET, DEFFUN, SCALARFUN, EXPANSION, MEASURE, AUTOMATON];

fn schema_err(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    arity: usize,
    assign: Vec<String>,
    /// For ordered cells: per interval, the coordinates in that interval as
    /// an ordered partition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<Vec<Vec<usize>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaggedCell {
    tag: String,
    cell: CellDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    support: Vec<String>,
    cells: Vec<TaggedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleDoc {
    tag: String,
    values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Piece<T> {
    tag: String,
    cell: CellDoc,
    #[serde(flatten)]
    value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PiecewiseDoc<T> {
    domain: SetDoc,
    support: Vec<String>,
    pieces: Vec<Piece<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MapOut {
    out_tag: String,
    terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScalarOut {
    value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TypeOut {
    out_type: String,
    terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedTerm {
    out_tag: String,
    terms: Vec<String>,
    weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedType {
    out_type: String,
    terms: Vec<String>,
    weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightedOuts {
    outs: Vec<WeightedTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TypeOuts {
    outs: Vec<WeightedType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedTuple {
    tuple: TupleDoc,
    weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RectDoc {
    tag: String,
    shape: CellDoc,
    strict: Vec<bool>,
    /// `null` is `+inf`.
    bounds: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum BasisDoc {
    Type(TupleDoc),
    Rect(RectDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    basis: BasisDoc,
    coef: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefSetFile {
    schema: String,
    theory: String,
    #[serde(flatten)]
    set: SetDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefFunFile {
    schema: String,
    theory: String,
    codomain: SetDoc,
    #[serde(flatten)]
    map: PiecewiseDoc<MapOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScalarFunFile {
    schema: String,
    theory: String,
    #[serde(flatten)]
    fun: PiecewiseDoc<ScalarOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpansionFile {
    schema: String,
    theory: String,
    terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    schema: String,
    theory: String,
    base: SetDoc,
    atoms: Vec<WeightedTuple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum AutomatonBody {
    Det {
        states: SetDoc,
        alphabet: SetDoc,
        delta: PiecewiseDoc<MapOut>,
        initial: TupleDoc,
        finals: SetDoc,
    },
    Ultra {
        states: SetDoc,
        alphabet: SetDoc,
        delta: PiecewiseDoc<TypeOut>,
        initial: TupleDoc,
        finals: SetDoc,
    },
    Weighted {
        states: SetDoc,
        alphabet: SetDoc,
        delta: PiecewiseDoc<WeightedOuts>,
        initial: Vec<WeightedTuple>,
        #[serde(rename = "final")]
        final_weight: PiecewiseDoc<ScalarOut>,
    },
    Prob {
        states: SetDoc,
        alphabet: SetDoc,
        delta: PiecewiseDoc<TypeOuts>,
        initial: Vec<WeightedTuple>,
        #[serde(rename = "final")]
        final_weight: PiecewiseDoc<ScalarOut>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AutomatonFile {
    schema: String,
    theory: String,
    #[serde(flatten)]
    body: AutomatonBody,
}

// Leaves.

fn atom_str(a: &Atom) -> String {
    a.to_string()
}

fn parse_atom(s: &str, theory: Theory) -> Result<Atom> {
    let a = Atom::parse(s)?;
    a.check_theory(theory)?;
    Ok(a)
}

fn support_doc(s: &Support) -> Vec<String> {
    s.atoms().iter().map(atom_str).collect()
}

fn parse_support(v: &[String], theory: Theory) -> Result<Support> {
    Ok(Support::new(v.iter().map(|s| parse_atom(s, theory)).collect::<Result<_>>()?))
}

fn term_doc(t: &Term) -> String {
    match t {
        Term::In(i) => format!("in:{i}"),
        Term::Atom(a) => format!("const:{a}"),
    }
}

fn parse_term(s: &str, theory: Theory) -> Result<Term> {
    if let Some(i) = s.strip_prefix("in:") {
        return i.parse().map(Term::In).map_err(|_| Error::Parse(format!("bad term `{s}`")));
    }
    if let Some(a) = s.strip_prefix("const:") {
        return parse_atom(a, theory).map(Term::Atom);
    }
    Err(Error::Parse(format!("bad term `{s}`: expected in:<i> or const:<atom>")))
}

fn parse_terms(v: &[String], theory: Theory) -> Result<Vec<Term>> {
    v.iter().map(|s| parse_term(s, theory)).collect()
}

fn tuple_doc(x: &Tuple) -> Result<TupleDoc> {
    let values = x
        .values
        .iter()
        .map(|v| {
            v.as_atom()
                .map(atom_str)
                .ok_or_else(|| Error::InvalidType(format!("{x} is not a standard tuple")))
        })
        .collect::<Result<_>>()?;
    Ok(TupleDoc {
        tag: x.tag.clone(),
        values,
    })
}

fn parse_tuple(d: &TupleDoc, theory: Theory) -> Result<Tuple> {
    let values = d
        .values
        .iter()
        .map(|s| parse_atom(s, theory).map(Value::Atom))
        .collect::<Result<_>>()?;
    Ok(Tuple::new(d.tag.clone(), values))
}

fn cell_doc(c: &Cell, support: &Support) -> CellDoc {
    match c {
        Cell::Eq(slots) => CellDoc {
            arity: slots.len(),
            assign: slots
                .iter()
                .map(|s| match s {
                    EqSlot::Const(a) => format!("const:{a}"),
                    EqSlot::Block(b) => format!("block:{b}"),
                })
                .collect(),
            order: None,
        },
        Cell::Dlo(slots) => {
            let mut order: Vec<Vec<Vec<usize>>> = vec![Vec::new(); support.len() + 1];
            let assign = slots
                .iter()
                .enumerate()
                .map(|(i, s)| match s {
                    DloSlot::Point(a) => format!("point:{a}"),
                    DloSlot::Gap { gap, pos } => {
                        let blocks = &mut order[*gap];
                        if blocks.len() <= *pos {
                            blocks.resize(*pos + 1, Vec::new());
                        }
                        blocks[*pos].push(i);
                        format!("gap:{gap}")
                    }
                })
                .collect();
            CellDoc {
                arity: slots.len(),
                assign,
                order: Some(order),
            }
        }
    }
}

fn parse_cell(d: &CellDoc, theory: Theory, support: &Support) -> Result<Cell> {
    if d.assign.len() != d.arity {
        return Err(Error::InvalidCell(format!(
            "arity {} but {} assignments",
            d.arity,
            d.assign.len()
        )));
    }
    let bad = |s: &str| Error::InvalidCell(format!("bad assignment `{s}`"));
    let cell = match theory {
        Theory::Eq => {
            if d.order.is_some() {
                return Err(Error::InvalidCell("equality cells have no order".into()));
            }
            let slots = d
                .assign
                .iter()
                .map(|s| {
                    if let Some(a) = s.strip_prefix("const:") {
                        parse_atom(a, theory).map(EqSlot::Const)
                    } else if let Some(b) = s.strip_prefix("block:") {
                        b.parse().map(EqSlot::Block).map_err(|_| bad(s))
                    } else {
                        Err(bad(s))
                    }
                })
                .collect::<Result<_>>()?;
            Cell::Eq(slots)
        }
        Theory::Dlo => {
            let order = d.order.clone().unwrap_or_default();
            let mut pos_of: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
            for (gap, blocks) in order.iter().enumerate() {
                for (pos, block) in blocks.iter().enumerate() {
                    for &i in block {
                        if pos_of.insert(i, (gap, pos)).is_some() {
                            return Err(Error::InvalidCell(format!("coordinate {i} is ordered twice")));
                        }
                    }
                }
            }
            let slots = d
                .assign
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if let Some(a) = s.strip_prefix("point:") {
                        parse_atom(a, theory).map(DloSlot::Point)
                    } else if let Some(g) = s.strip_prefix("gap:") {
                        let gap: usize = g.parse().map_err(|_| bad(s))?;
                        match pos_of.remove(&i) {
                            Some((g2, pos)) if g2 == gap => Ok(DloSlot::Gap { gap, pos }),
                            _ => Err(Error::InvalidCell(format!("coordinate {i} is missing from the order of interval {gap}"))),
                        }
                    } else {
                        Err(bad(s))
                    }
                })
                .collect::<Result<_>>()?;
            if let Some(i) = pos_of.keys().next() {
                return Err(Error::InvalidCell(format!("coordinate {i} is ordered but not in an interval")));
            }
            Cell::Dlo(slots)
        }
    };
    cell.validate(support)?;
    Ok(cell)
}

fn set_doc(s: &DefSet) -> SetDoc {
    SetDoc {
        support: support_doc(s.support()),
        cells: s
            .cells()
            .map(|(tag, c)| TaggedCell {
                tag: tag.clone(),
                cell: cell_doc(c, s.support()),
            })
            .collect(),
    }
}

fn parse_set(d: &SetDoc, theory: Theory) -> Result<DefSet> {
    let support = parse_support(&d.support, theory)?;
    let cells = d
        .cells
        .iter()
        .map(|c| Ok((c.tag.clone(), parse_cell(&c.cell, theory, &support)?)))
        .collect::<Result<Vec<_>>>()?;
    DefSet::new(theory, support, cells)
}

fn piecewise_doc<T: Clone, U>(p: &Piecewise<T>, mut f: impl FnMut(&T) -> U) -> PiecewiseDoc<U> {
    PiecewiseDoc {
        domain: set_doc(p.domain()),
        support: support_doc(p.support()),
        pieces: p
            .pieces()
            .map(|((tag, cell), v)| Piece {
                tag: tag.clone(),
                cell: cell_doc(cell, p.support()),
                value: f(v),
            })
            .collect(),
    }
}

fn parse_piecewise<T: Clone, U>(
    d: &PiecewiseDoc<U>,
    theory: Theory,
    mut f: impl FnMut(&U) -> Result<T>,
) -> Result<Piecewise<T>> {
    let domain = parse_set(&d.domain, theory)?;
    let support = parse_support(&d.support, theory)?.union(domain.support());
    let pieces = d
        .pieces
        .iter()
        .map(|p| Ok(((p.tag.clone(), parse_cell(&p.cell, theory, &support)?), f(&p.value)?)))
        .collect::<Result<Vec<_>>>()?;
    Piecewise::new(domain, &support, pieces)
}

fn scalar_doc(f: &ScalarFun) -> PiecewiseDoc<ScalarOut> {
    piecewise_doc(f, |r| ScalarOut {
        value: format_rational(r),
    })
}

fn parse_scalar(d: &PiecewiseDoc<ScalarOut>, theory: Theory) -> Result<ScalarFun> {
    parse_piecewise(d, theory, |v| parse_rational(&v.value))
}

fn map_doc(f: &DefFun) -> PiecewiseDoc<MapOut> {
    piecewise_doc(f.pieces(), |(t, terms)| MapOut {
        out_tag: t.clone(),
        terms: terms.iter().map(term_doc).collect(),
    })
}

fn parse_map(d: &PiecewiseDoc<MapOut>, codomain: DefSet, theory: Theory) -> Result<DefFun> {
    let pieces = parse_piecewise(d, theory, |m| Ok((m.out_tag.clone(), parse_terms(&m.terms, theory)?)))?;
    DefFun::new(codomain, pieces)
}

fn template_doc(t: &TypeTemplate) -> (String, Vec<String>) {
    let (tag, params) = encode(t);
    (tag, params.iter().map(term_doc).collect())
}

fn parse_template(tag: &str, terms: &[String], theory: Theory) -> Result<TypeTemplate> {
    let (th, orig, pattern) =
        parse_type_tag(tag).ok_or_else(|| Error::InvalidType(format!("`{tag}` is not a type tag")))?;
    th.expect(theory)?;
    let terms = parse_terms(terms, theory)?;
    if pattern.params().len() != terms.len() {
        return Err(Error::ArityMismatch {
            tag: tag.to_string(),
            expected: pattern.params().len(),
            found: terms.len(),
        });
    }
    Ok(Type::new(orig, pattern.map(|i| terms[*i].clone())))
}

fn type_doc(p: &TypeDesc) -> TupleDoc {
    let (tag, params) = encode(p);
    TupleDoc {
        tag,
        values: params.iter().map(atom_str).collect(),
    }
}

fn parse_type(d: &TupleDoc, theory: Theory) -> Result<TypeDesc> {
    let x = parse_tuple(d, theory)?;
    let p = crate::compact::decode(&x)?;
    p.theory().expect(theory)?;
    Ok(p)
}

fn weighted_types(m: &Measure) -> Vec<WeightedTuple> {
    m.atoms()
        .map(|(p, w)| WeightedTuple {
            tuple: type_doc(p),
            weight: format_rational(w),
        })
        .collect()
}

fn parse_weighted_types(v: &[WeightedTuple], theory: Theory) -> Result<Vec<(TypeDesc, Rational)>> {
    v.iter()
        .map(|w| Ok((parse_type(&w.tuple, theory)?, parse_rational(&w.weight)?)))
        .collect()
}

// Public conversions.

/// Objects with a versioned JSON document form.
pub trait Document: Sized {
    const SCHEMA: &'static str;
    fn to_json(&self) -> Result<Json>;
    fn from_json(doc: &Json) -> Result<Self>;

    fn to_text(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_json()?).map_err(|e| Error::Parse(e.to_string()))
    }

    fn from_text(text: &str) -> Result<Self> {
        let json: Json = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }
}

/// The `schema` field of a document.
pub fn schema_of(doc: &Json) -> Result<&str> {
    let s = doc
        .get("schema")
        .and_then(Json::as_str)
        .ok_or_else(|| schema_err("document has no \"schema\" field"))?;
    if !SCHEMAS.contains(&s) {
        return Err(schema_err(format!("unknown schema `{s}`")));
    }
    Ok(s)
}

fn typed<T: for<'de> Deserialize<'de>>(doc: &Json, schema: &str) -> Result<(T, Theory)> {
    let found = schema_of(doc)?;
    if found != schema {
        return Err(schema_err(format!("expected schema `{schema}`, found `{found}`")));
    }
    let theory = doc
        .get("theory")
        .and_then(Json::as_str)
        .ok_or_else(|| schema_err("document has no \"theory\" field"))?;
    let theory = Theory::parse(theory)?;
    let t = serde_json::from_value(doc.clone()).map_err(|e| schema_err(e.to_string()))?;
    Ok((t, theory))
}

fn to_value<T: Serialize>(t: &T) -> Result<Json> {
    serde_json::to_value(t).map_err(|e| Error::Parse(e.to_string()))
}

impl Document for DefSet {
    const SCHEMA: &'static str = DEFSET;

    fn to_json(&self) -> Result<Json> {
        to_value(&DefSetFile {
            schema: DEFSET.into(),
            theory: self.theory().name().into(),
            set: set_doc(self),
        })
    }

    fn from_json(doc: &Json) -> Result<DefSet> {
        let (f, theory): (DefSetFile, _) = typed(doc, DEFSET)?;
        parse_set(&f.set, theory)
    }
}

impl Document for DefFun {
    const SCHEMA: &'static str = DEFFUN;

    fn to_json(&self) -> Result<Json> {
        to_value(&DefFunFile {
            schema: DEFFUN.into(),
            theory: self.domain().theory().name().into(),
            codomain: set_doc(self.codomain()),
            map: map_doc(self),
        })
    }

    fn from_json(doc: &Json) -> Result<DefFun> {
        let (f, theory): (DefFunFile, _) = typed(doc, DEFFUN)?;
        parse_map(&f.map, parse_set(&f.codomain, theory)?, theory)
    }
}

impl Document for ScalarFun {
    const SCHEMA: &'static str = SCALARFUN;

    fn to_json(&self) -> Result<Json> {
        to_value(&ScalarFunFile {
            schema: SCALARFUN.into(),
            theory: self.theory().name().into(),
            fun: scalar_doc(self),
        })
    }

    fn from_json(doc: &Json) -> Result<ScalarFun> {
        let (f, theory): (ScalarFunFile, _) = typed(doc, SCALARFUN)?;
        parse_scalar(&f.fun, theory)
    }
}

/// A basis expansion together with its theory, which an empty expansion
/// cannot carry by itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionDoc {
    pub theory: Theory,
    pub expansion: BasisExpansion,
}

impl Document for ExpansionDoc {
    const SCHEMA: &'static str = EXPANSION;

    fn to_json(&self) -> Result<Json> {
        let terms = self
            .expansion
            .terms
            .iter()
            .map(|(b, c)| {
                let basis = match b {
                    BasisElem::Type(p) => BasisDoc::Type(type_doc(p)),
                    BasisElem::Rect { tag, shape, rect } => BasisDoc::Rect(RectDoc {
                        tag: tag.clone(),
                        shape: cell_doc(shape, &Support::empty()),
                        strict: rect.strict.clone(),
                        bounds: rect.bounds.iter().map(|b| b.as_ref().map(atom_str)).collect(),
                    }),
                };
                TermDoc {
                    basis,
                    coef: format_rational(c),
                }
            })
            .collect();
        to_value(&ExpansionFile {
            schema: EXPANSION.into(),
            theory: self.theory.name().into(),
            terms,
        })
    }

    fn from_json(doc: &Json) -> Result<ExpansionDoc> {
        let (f, theory): (ExpansionFile, _) = typed(doc, EXPANSION)?;
        let mut expansion = BasisExpansion::default();
        for t in &f.terms {
            let b = match &t.basis {
                BasisDoc::Type(d) => BasisElem::Type(parse_type(d, theory)?),
                BasisDoc::Rect(r) => {
                    theory.expect(Theory::Dlo)?;
                    let bounds = r
                        .bounds
                        .iter()
                        .map(|b| b.as_deref().map(|s| parse_atom(s, theory)).transpose())
                        .collect::<Result<_>>()?;
                    BasisElem::Rect {
                        tag: r.tag.clone(),
                        shape: parse_cell(&r.shape, theory, &Support::empty())?,
                        rect: TruncRect::new(r.strict.clone(), bounds)?,
                    }
                }
            };
            expansion.add(b, parse_rational(&t.coef)?);
        }
        Ok(ExpansionDoc { theory, expansion })
    }
}

impl Document for Measure {
    const SCHEMA: &'static str = MEASURE;

    fn to_json(&self) -> Result<Json> {
        to_value(&MeasureFile {
            schema: MEASURE.into(),
            theory: self.base().theory().name().into(),
            base: set_doc(self.base()),
            atoms: weighted_types(self),
        })
    }

    fn from_json(doc: &Json) -> Result<Measure> {
        let (f, theory): (MeasureFile, _) = typed(doc, MEASURE)?;
        let base = parse_set(&f.base, theory)?;
        Measure::new(&base, parse_weighted_types(&f.atoms, theory)?)
    }
}

impl Document for Automaton {
    const SCHEMA: &'static str = AUTOMATON;

    fn to_json(&self) -> Result<Json> {
        let body = match self {
            Automaton::Det(a) => AutomatonBody::Det {
                states: set_doc(&a.states),
                alphabet: set_doc(&a.alphabet),
                delta: map_doc(&a.delta),
                initial: tuple_doc(&a.initial)?,
                finals: set_doc(&a.finals),
            },
            Automaton::Ultra(a) => AutomatonBody::Ultra {
                states: set_doc(&a.states),
                alphabet: set_doc(&a.alphabet),
                delta: piecewise_doc(&a.delta, |t| {
                    let (out_type, terms) = template_doc(t);
                    TypeOut { out_type, terms }
                }),
                initial: tuple_doc(&a.initial)?,
                finals: set_doc(&a.finals),
            },
            Automaton::Weighted(a) => AutomatonBody::Weighted {
                states: set_doc(&a.states),
                alphabet: set_doc(&a.alphabet),
                delta: piecewise_doc(&a.delta, |outs| WeightedOuts {
                    outs: outs
                        .iter()
                        .map(|(t, terms, w)| WeightedTerm {
                            out_tag: t.clone(),
                            terms: terms.iter().map(term_doc).collect(),
                            weight: format_rational(w),
                        })
                        .collect(),
                }),
                initial: a
                    .initial
                    .entries()
                    .map(|(x, w)| {
                        Ok(WeightedTuple {
                            tuple: tuple_doc(x)?,
                            weight: format_rational(w),
                        })
                    })
                    .collect::<Result<_>>()?,
                final_weight: scalar_doc(&a.final_weight),
            },
            Automaton::Prob(a) => AutomatonBody::Prob {
                states: set_doc(&a.states),
                alphabet: set_doc(&a.alphabet),
                delta: piecewise_doc(a.delta.pieces(), |outs| TypeOuts {
                    outs: outs
                        .iter()
                        .map(|(t, w)| {
                            let (out_type, terms) = template_doc(t);
                            WeightedType {
                                out_type,
                                terms,
                                weight: format_rational(w),
                            }
                        })
                        .collect(),
                }),
                initial: weighted_types(&a.initial),
                final_weight: scalar_doc(&a.final_weight),
            },
        };
        to_value(&AutomatonFile {
            schema: AUTOMATON.into(),
            theory: self.theory().name().into(),
            body,
        })
    }

    fn from_json(doc: &Json) -> Result<Automaton> {
        if let Some(k) = doc.get("kind").and_then(Json::as_str) {
            if !["det", "ultra", "weighted", "prob"].contains(&k) {
                return Err(schema_err(format!("unknown automaton kind `{k}`")));
            }
        }
        let (f, theory): (AutomatonFile, _) = typed(doc, AUTOMATON)?;
        Ok(match &f.body {
            AutomatonBody::Det {
                states,
                alphabet,
                delta,
                initial,
                finals,
            } => {
                let states = parse_set(states, theory)?;
                let delta = parse_map(delta, states.clone(), theory)?;
                Automaton::Det(DetAutomaton::new(
                    states,
                    parse_set(alphabet, theory)?,
                    delta,
                    parse_tuple(initial, theory)?,
                    parse_set(finals, theory)?,
                )?)
            }
            AutomatonBody::Ultra {
                states,
                alphabet,
                delta,
                initial,
                finals,
            } => {
                let delta = parse_piecewise(delta, theory, |t| parse_template(&t.out_type, &t.terms, theory))?;
                Automaton::Ultra(UltraAutomaton::new(
                    parse_set(states, theory)?,
                    parse_set(alphabet, theory)?,
                    delta,
                    parse_tuple(initial, theory)?,
                    parse_set(finals, theory)?,
                )?)
            }
            AutomatonBody::Weighted {
                states,
                alphabet,
                delta,
                initial,
                final_weight,
            } => {
                let states = parse_set(states, theory)?;
                let delta = parse_piecewise(delta, theory, |o| {
                    o.outs
                        .iter()
                        .map(|w| Ok((w.out_tag.clone(), parse_terms(&w.terms, theory)?, parse_rational(&w.weight)?)))
                        .collect()
                })?;
                let initial = FreeVec::new(
                    &states,
                    initial
                        .iter()
                        .map(|w| Ok((parse_tuple(&w.tuple, theory)?, parse_rational(&w.weight)?)))
                        .collect::<Result<Vec<_>>>()?,
                )?;
                Automaton::Weighted(WeightedAutomaton::new(
                    states,
                    parse_set(alphabet, theory)?,
                    delta,
                    initial,
                    parse_scalar(final_weight, theory)?,
                )?)
            }
            AutomatonBody::Prob {
                states,
                alphabet,
                delta,
                initial,
                final_weight,
            } => {
                let states = parse_set(states, theory)?;
                let pieces = parse_piecewise(delta, theory, |o| {
                    o.outs
                        .iter()
                        .map(|w| Ok((parse_template(&w.out_type, &w.terms, theory)?, parse_rational(&w.weight)?)))
                        .collect()
                })?;
                let delta = Kernel::new(&states, pieces)?;
                let initial = Measure::new(&states, parse_weighted_types(initial, theory)?)?;
                Automaton::Prob(ProbAutomaton::new(
                    states,
                    parse_set(alphabet, theory)?,
                    delta,
                    initial,
                    parse_scalar(final_weight, theory)?,
                )?)
            }
        })
    }
}

/// Parses a comma-separated word. Each letter is `tag(a,b)`, a bare atom
/// (a one-atom letter under the alphabet's only unary tag), or a bare tag
/// of arity zero.
pub fn parse_word(text: &str, alphabet: &DefSet) -> Result<Vec<Tuple>> {
    let theory = alphabet.theory();
    let tags = alphabet.tags();
    let unary: Vec<&String> = tags.iter().filter(|(_, n)| **n == 1).map(|(t, _)| t).collect();
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let (letter, tail) = match rest.find(['(', ',']) {
            Some(i) if rest.as_bytes()[i] == b'(' => {
                let close = rest[i..]
                    .find(')')
                    .ok_or_else(|| Error::Parse(format!("unclosed letter in `{text}`")))?
                    + i;
                let tag = rest[..i].trim().to_string();
                let args = &rest[i + 1..close];
                let values = if args.trim().is_empty() {
                    Vec::new()
                } else {
                    args.split(',')
                        .map(|a| parse_atom(a.trim(), theory).map(Value::Atom))
                        .collect::<Result<_>>()?
                };
                let tail = rest[close + 1..].trim_start();
                (Tuple::new(tag, values), tail.strip_prefix(',').unwrap_or(tail))
            }
            Some(i) => (bare_letter(rest[..i].trim(), &tags, &unary, theory)?, &rest[i + 1..]),
            None => (bare_letter(rest, &tags, &unary, theory)?, ""),
        };
        out.push(letter);
        rest = tail.trim();
    }
    Ok(out)
}

fn bare_letter(s: &str, tags: &BTreeMap<String, usize>, unary: &[&String], theory: Theory) -> Result<Tuple> {
    if tags.get(s) == Some(&0) {
        return Ok(Tuple::new(s, vec![]));
    }
    match unary {
        [t] => Ok(Tuple::new(t.as_str(), vec![Value::Atom(parse_atom(s, theory)?)])),
        _ => Err(Error::Parse(format!(
            "letter `{s}` is ambiguous; write it as tag(atoms)"
        ))),
    }
}
