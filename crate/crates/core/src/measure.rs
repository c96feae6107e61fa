//! Finitely additive probability measures on definable sets, stored as
//! finite convex combinations of types, and measure-valued kernels.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::atom::{format_rational, Rational, Support, Theory, Value};
use crate::defset::{pair, DefSet, Tuple};
use crate::error::{Error, Result};
use crate::piecewise::{DefFun, Piecewise, ScalarFun, Term};
use crate::types::{read_back, type_member, DloComp, EqComp, OneType, Realizer, Type, TypeBody, TypeDesc, TypeTemplate};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    base: DefSet,
    atoms: BTreeMap<TypeDesc, Rational>,
}

impl Measure {
    /// Checks that every type lies in the base and that the positive weights
    /// sum to one. Repeated types are merged.
    pub fn new(base: &DefSet, atoms: impl IntoIterator<Item = (TypeDesc, Rational)>) -> Result<Measure> {
        let mut map: BTreeMap<TypeDesc, Rational> = BTreeMap::new();
        for (p, w) in atoms {
            p.validate()?;
            if !w.is_positive() || w > Rational::one() {
                return Err(Error::InvalidMeasure(format!("weight {} is not in (0,1]", format_rational(&w))));
            }
            if !type_member(&p, base)? {
                return Err(Error::InvalidMeasure(format!("{p} does not lie in the base")));
            }
            *map.entry(p).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = map.values().sum();
        if total != Rational::one() {
            return Err(Error::InvalidMeasure(format!("weights sum to {}", format_rational(&total))));
        }
        Ok(Measure { base: base.clone(), atoms: map })
    }

    pub fn dirac(base: &DefSet, p: TypeDesc) -> Result<Measure> {
        Measure::new(base, [(p, Rational::one())])
    }

    pub fn point(base: &DefSet, x: &Tuple) -> Result<Measure> {
        Measure::dirac(base, TypeDesc::principal(base.theory(), x)?)
    }

    pub fn base(&self) -> &DefSet {
        &self.base
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&TypeDesc, &Rational)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The measure of a definable subset of the base.
    pub fn eval(&self, d: &DefSet) -> Result<Rational> {
        if !d.is_subset(&self.base)? {
            return Err(Error::NotASubset(d.to_string()));
        }
        self.eval_unchecked(d)
    }

    fn eval_unchecked(&self, d: &DefSet) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (p, w) in &self.atoms {
            if type_member(p, d)? {
                sum += w;
            }
        }
        Ok(sum)
    }

    /// `Σ r · μ(f = r)` over the finitely many values of `f`.
    pub fn expectation(&self, f: &ScalarFun) -> Result<Rational> {
        if !self.base.is_subset(f.domain())? {
            return Err(Error::NotTotal("function is not defined on the whole base".into()));
        }
        let mut sum = Rational::zero();
        for r in f.values() {
            if !r.is_zero() {
                sum += &r * self.eval_unchecked(&f.level_set(&r))?;
            }
        }
        Ok(sum)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*{p}", format_rational(w))?;
        }
        Ok(())
    }
}

/// Which factor of a product is realized generically over the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductOrder {
    /// The left coordinate is generic over the right one: the measure of a
    /// set is the integral over the right factor of the left measure of its
    /// fibres.
    LeftFirst,
    /// The right coordinate is generic over the left one.
    RightFirst,
}

/// The product of two measures in the given order.
pub fn product_measure(p: &Measure, q: &Measure, order: ProductOrder) -> Result<Measure> {
    p.base.theory().expect(q.base.theory())?;
    let base = p.base.product(&q.base)?;
    let theory = base.theory();
    let mut atoms = Vec::new();
    for (a, r) in &p.atoms {
        for (b, s) in &q.atoms {
            let mut z = Realizer::new();
            let (x, y) = match order {
                ProductOrder::LeftFirst => {
                    let y = b.realize(&mut z);
                    (a.realize(&mut z), y)
                }
                ProductOrder::RightFirst => {
                    let x = a.realize(&mut z);
                    (x, b.realize(&mut z))
                }
            };
            atoms.push((read_back(theory, &pair(&x, &y)), r * s));
        }
    }
    Measure::new(&base, atoms)
}

/// The product measure of `d` computed by integrating fibre measures:
/// with `LeftFirst`, `∫ p(d^y) dq(y)`; with `RightFirst`, `∫ q(d_x) dp(x)`.
pub fn product_integral(p: &Measure, q: &Measure, order: ProductOrder, d: &DefSet) -> Result<Rational> {
    let (inner, outer, inner_left) = match order {
        ProductOrder::LeftFirst => (p, q, true),
        ProductOrder::RightFirst => (q, p, false),
    };
    let mut support = d.support().clone();
    for (t, _) in inner.atoms() {
        support = support.with(t.support());
    }
    let fibre_measure = Piecewise::from_fn(outer.base.clone(), &support, |y| {
        let sup = support.with(y.standard_atoms());
        let space = inner.base.refine(&sup)?;
        let mut cells = Vec::new();
        for a in space.representatives() {
            let whole = if inner_left { pair(&a, y) } else { pair(y, &a) };
            if d.member(&whole)? {
                cells.push(space.locate(&a));
            }
        }
        let fibre = DefSet::new(d.theory(), sup, cells)?;
        inner.eval_unchecked(&fibre)
    })?;
    outer.expectation(&fibre_measure)
}

/// A measure-valued map, given on each cell of its domain by a convex
/// combination of type templates over the input coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    codomain: DefSet,
    pieces: Piecewise<Vec<(TypeTemplate, Rational)>>,
}

impl Kernel {
    pub fn new(codomain: &DefSet, pieces: Piecewise<Vec<(TypeTemplate, Rational)>>) -> Result<Kernel> {
        pieces.theory().expect(codomain.theory())?;
        let pieces = pieces.refine(codomain.support())?;
        let support = pieces.support().clone();
        for ((tag, cell), outs) in pieces.pieces() {
            let rep = cell.representative(&support);
            let mut total = Rational::zero();
            for (t, w) in outs {
                t.check(&rep, &support)?;
                if !w.is_positive() {
                    return Err(Error::InvalidMeasure(format!("weight {} on {tag}{cell}", format_rational(w))));
                }
                total += w;
                let p = read_back(codomain.theory(), &Realizer::new().realize_type(&t.instantiate(&rep)));
                if !type_member(&p, codomain)? {
                    return Err(Error::KernelNotDefinable(format!("{t} on {tag}{cell} leaves the codomain")));
                }
            }
            if total != Rational::one() {
                return Err(Error::InvalidMeasure(format!("weights on {tag}{cell} sum to {}", format_rational(&total))));
            }
        }
        Ok(Kernel {
            codomain: codomain.clone(),
            pieces,
        })
    }

    /// Builds a kernel from its value at a representative of every cell.
    pub fn from_fn(
        domain: &DefSet,
        codomain: &DefSet,
        support: &Support,
        mut f: impl FnMut(&Tuple) -> Result<Vec<(TypeDesc, Rational)>>,
    ) -> Result<Kernel> {
        let support = support.union(codomain.support());
        let pieces = Piecewise::from_fn(domain.clone(), &support, |x| {
            f(x)?
                .into_iter()
                .map(|(p, w)| Ok((template_of(&p, &x.values, &support)?, w)))
                .collect()
        })?;
        Kernel::new(codomain, pieces)
    }

    /// The unit: every point goes to its own principal type.
    pub fn unit(domain: &DefSet) -> Kernel {
        let theory = domain.theory();
        let pieces = Piecewise::from_fn(domain.clone(), &Support::empty(), |x| {
            let n = x.arity();
            let body = match theory {
                Theory::Eq => TypeBody::Eq((0..n).map(|i| EqComp::Const(Term::In(i))).collect()),
                Theory::Dlo => TypeBody::Dlo((0..n).map(|i| DloComp::new(OneType::Point(Term::In(i)), 0)).collect()),
            };
            Ok(vec![(Type::new(x.tag.clone(), body), Rational::one())])
        })
        .expect("unit is total");
        Kernel::new(domain, pieces).expect("unit is well defined")
    }

    /// The point-mass kernel of a definable map.
    pub fn from_deffun(f: &DefFun) -> Result<Kernel> {
        Kernel::from_fn(f.domain(), f.codomain(), f.support(), |x| {
            Ok(vec![(TypeDesc::principal(f.codomain().theory(), &f.apply(x)?)?, Rational::one())])
        })
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

    pub fn pieces(&self) -> &Piecewise<Vec<(TypeTemplate, Rational)>> {
        &self.pieces
    }

    /// The kernel at a standard point.
    pub fn at(&self, x: &Tuple) -> Result<Measure> {
        if !self.domain().member(x)? {
            return Err(Error::NotInDomain(x.to_string()));
        }
        let outs = self.step(x, &Realizer::new())?;
        Measure::new(&self.codomain, outs)
    }

    /// Values at a (possibly generic) input whose witnesses came from `r`;
    /// each output type is realized generically over the input.
    pub fn step(&self, x: &Tuple, r: &Realizer) -> Result<Vec<(TypeDesc, Rational)>> {
        let outs = self.pieces.lookup(x)?;
        let mut res = Vec::with_capacity(outs.len());
        for (t, w) in outs {
            let mut z = r.clone();
            z.observe(&x.values);
            let y = z.realize_type(&t.instantiate(&x.values));
            res.push((read_back(self.codomain.theory(), &y), w.clone()));
        }
        Ok(res)
    }

    /// Kleisli extension of the kernel to measures on its domain.
    pub fn extend(&self, mu: &Measure) -> Result<Measure> {
        self.extend_with(None, mu)
    }

    /// Extension with a fixed standard prefix paired in front of the input,
    /// for kernels defined on `prefix × base`.
    pub fn extend_with(&self, prefix: Option<&Tuple>, mu: &Measure) -> Result<Measure> {
        let mut atoms = Vec::new();
        for (p, w) in mu.atoms() {
            let mut r = Realizer::new();
            let s = p.realize(&mut r);
            let x = match prefix {
                Some(l) => pair(l, &s),
                None => s,
            };
            if !self.domain().member(&x)? {
                return Err(Error::NotInDomain(x.to_string()));
            }
            for (q, v) in self.step(&x, &r)? {
                atoms.push((q, w * v));
            }
        }
        Measure::new(&self.codomain, atoms)
    }
}

/// Expresses the parameters of `p` through the input values or constants.
pub fn template_of(p: &TypeDesc, input: &[Value], support: &Support) -> Result<TypeTemplate> {
    let body = p.body.try_map(|a| Term::express(&Value::Atom(a.clone()), input, support))?;
    Ok(Type::new(p.tag.clone(), body))
}

/// `x ↦ ḡ(f(x))`.
pub fn kleisli_compose(f: &Kernel, g: &Kernel) -> Result<Kernel> {
    let support = f.support().union(g.support());
    Kernel::from_fn(f.domain(), g.codomain(), &support, |x| {
        let mu = f.at(x)?;
        Ok(g.extend(&mu)?.atoms().map(|(p, w)| (p.clone(), w.clone())).collect())
    })
}
