//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two series that must have equal length do not.
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// An input that must be nonempty is empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    /// A NaN or infinity reached a function that requires finite reals.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// A parameter constrained to be positive was not.
    #[error("{name} must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    /// A matrix was paired with series of a different length.
    #[error("matrix is {rows}x{cols} but series have length {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    /// Fewer series than clusters requested.
    #[error("need at least {k} series for {k} clusters, got {n}")]
    TooFewSeries { n: usize, k: usize },
    /// A class referenced by a label set has no members.
    #[error("class {0} has no series")]
    EmptyClass(usize),
    /// Combinatorial guard on exhaustive path enumeration.
    #[error("path enumeration capped at m = {max}, got m = {m}")]
    EnumerationTooLarge { m: usize, max: usize },
    /// An alignment path violates the path constraints.
    #[error("invalid alignment path: {0}")]
    InvalidPath(&'static str),
    /// General argument misuse not covered by a dedicated variant.
    #[error("{0}")]
    InvalidArgument(String),
    /// A data file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    /// An iterative numerical procedure produced unusable values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for caller mistakes (CLI exit code 2); false for I/O and data
    /// failures (exit code 1).
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
