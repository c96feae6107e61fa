//! Orbit-finite sets over equality atoms and over the dense order of the
//! rationals, with their type spaces.
//!
//! Sets are finite unions of orbit cells over a finite support ([`DefSet`]).
//! The points of a set's compactification are complete types
//! ([`TypeDesc`]); [`compactify`] lists them as another definable set whose
//! tags encode the type pattern. On top of that the crate provides dual bases
//! of function spaces ([`decompose`]), hom spaces between free vector spaces
//! over equality atoms ([`HomSpace`]), finitely additive measures as convex
//! combinations of types ([`Measure`]), and four kinds of automata.
//!
//! All arithmetic is exact over [`Rational`].
//!
//! ```
//! use atomcompact::{compactify, format_summary, orbit_summary, DefSet, Theory};
//!
//! let a = DefSet::power(Theory::Eq, "a", 1);
//! let c = compactify(&a);
//! assert_eq!(format_summary(&orbit_summary(&c)), "orbits: principal=1, rank1=1");
//! ```

pub mod atom;
pub mod automata;
pub mod cell;
pub mod compact;
pub mod defset;
pub mod doc;
pub mod error;
pub mod freelin;
pub mod linalg;
pub mod machines;
pub mod measure;
pub mod oracle;
pub mod piecewise;
pub mod types;

pub use atom::{format_rational, parse_rational, Atom, Rational, Support, Theory, Value};
pub use automata::{Automaton, DetAutomaton, Outcome, ProbAutomaton, UltraAutomaton, WeightedAutomaton};
pub use cell::Cell;
pub use compact::{
    compactify, derivative, derivative_chain, format_summary, orbit_summary, pushforward, rank_stratify,
};
pub use defset::{Cardinality, DefSet, Tuple};
pub use doc::{Document, ExpansionDoc};
pub use error::{Error, Result};
pub use freelin::{decompose, hom_compose, BasisElem, BasisExpansion, EndoAlgebra, FreeVec, HomSpace, TruncRect};
pub use measure::{kleisli_compose, product_measure, Kernel, Measure, ProductOrder};
pub use oracle::{differential_run, materialize, rank_of, Truncation};
pub use piecewise::{DefFun, Piecewise, ScalarFun, Term};
pub use types::{Realizer, TypeDesc, TypeTemplate};
