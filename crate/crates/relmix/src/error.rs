//! Error type shared across the crate.

use crate::geometry::Cell;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A rank is out of range: below the current rank, above the cap, or no
    /// refinement rank can represent a requested quantity.
    #[error("rank error: {0}")]
    Rank(String),

    /// Two objects live on incompatible grids, or the grid does not support
    /// the requested measure computation.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A stated precondition does not hold for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A permutation claimed to be column-preserving is not; the two cells
    /// share a column but map into different columns.
    #[error("not column-preserving: {0:?} and {1:?} share a column but map to different columns")]
    NotColumnPreserving(Cell, Cell),

    /// The instance exceeds a configured brute-force bound.
    #[error("too large: {0}")]
    TooLarge(String),

    /// A tower of the requested height cannot cover enough of the space;
    /// carries the best coverage achievable for the given base cycles.
    #[error("coverage infeasible: best achievable coverage is {best}")]
    CoverageInfeasible { best: crate::dyadic::Dyadic },

    /// A file or string could not be parsed.
    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
