use thiserror::Error;

/// Errors raised by the library. Every variant names the invariant that was
/// violated so that the CLI can print it verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("theory mismatch: expected {expected}, found {found}")]
    TheoryMismatch { expected: String, found: String },

    #[error("arity mismatch for tag `{tag}`: expected {expected}, found {found}")]
    ArityMismatch {
        tag: String,
        expected: usize,
        found: usize,
    },

    #[error("complement requires an ambient set")]
    AmbientMissing,

    #[error("support does not contain atom {0}")]
    SupportTooSmall(String),

    #[error("value is not in the domain: {0}")]
    NotInDomain(String),

    #[error("function is not total: {0}")]
    NotTotal(String),

    #[error("function is not well defined: {0}")]
    NotWellDefined(String),

    #[error("set is not a subset of the base: {0}")]
    NotASubset(String),

    #[error("set is not a subset of the compactification: {0}")]
    NotASubsetOfCompactification(String),

    #[error("operation is not supported for theory {0}")]
    UnsupportedTheory(String),

    #[error("decomposition left a nonzero residual: {0}")]
    NonzeroResidual(String),

    #[error("linear system has no solution: {0}")]
    SystemInsolvable(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("kernel is not definable: {0}")]
    KernelNotDefinable(String),

    #[error("letter is not in the alphabet: {0}")]
    LetterNotInAlphabet(String),

    #[error("decomposition leaves the hom basis: {0}")]
    DecompositionOutsideHomBasis(String),

    #[error("pool is too small: {0}")]
    PoolTooSmall(String),

    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("invalid type descriptor: {0}")]
    InvalidType(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
