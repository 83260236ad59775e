//! Error type shared by all txrank modules.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an edge list did not match the `src,dst,amount,timestamp` schema.
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    /// A transaction carried a negative amount.
    #[error("negative amount at line {line}")]
    NegativeAmount { line: usize },

    /// An operation that needs at least one node received none.
    #[error("empty graph")]
    EmptyGraph,

    /// Damping factor outside the open interval (0, 1).
    #[error("damping factor must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    /// Vector length does not match the operator dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Balance computation requires strictly positive rank entries.
    #[error("non-positive rank entry at node {node}")]
    NonPositiveRank { node: usize },

    /// A node selection was empty, duplicated, or referenced nodes out of range.
    #[error("invalid node selection: {0}")]
    InvalidSelection(String),

    /// The dominant eigenpair of the complement block did not converge.
    #[error(
        "complement eigenpair did not converge after {iterations} iterations \
         (residual {residual:.3e}); increase the iteration budget"
    )]
    EigenpairNotConverged { iterations: usize, residual: f64 },

    /// Numerical pathology: the complement block keeps all probability.
    #[error("complement absorbs all probability (leading eigenvalue {0})")]
    ComplementAbsorbing(f64),

    /// Power-law fit needs at least three usable points.
    #[error("power-law fit needs at least 3 positive points in range, found {0}")]
    TooFewFitPoints(usize),

    /// Parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A graph dump or analytics file failed to parse.
    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
