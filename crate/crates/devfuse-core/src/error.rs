//! Crate-wide error type.

use alloc::boxed::Box;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors reported by aggregation, fusion and metric routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    NonFinite { what: &'static str },
    /// A slice that must hold at least one element was empty.
    Empty { what: &'static str },
    /// Two related slices or matrices disagree on length/shape.
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Weights were negative, or all zero where a positive one is required.
    InvalidWeights { reason: &'static str },
    /// A scalar parameter is outside its admissible range.
    InvalidParameter { what: &'static str, value: f64 },
    /// A monotonicity probe rejected a user-supplied map.
    NotMonotone { what: &'static str },
    /// A closed form hit a zero (or non-finite) denominator.
    DegenerateInput { denominator: f64 },
    /// Bisection exhausted its iteration budget; carries the last bracket.
    Convergence { lo: f64, hi: f64 },
    /// An index was outside its valid range.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    /// A dimension is not divisible by the block size.
    NotDivisible {
        what: &'static str,
        dim: usize,
        r: usize,
    },
    /// Value outside the mathematical domain of an operation.
    OutOfDomain { what: &'static str },
    /// Every candidate aggregator failed for some channel.
    AllCandidatesFailed { channel: usize },
    /// A solver error annotated with the block coordinates (paper-style
    /// 1-based `alpha`, `beta`, `channel`) where it occurred.
    Fusion {
        alpha: usize,
        beta: usize,
        channel: usize,
        source: Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { what } => write!(f, "{what} must be finite"),
            Error::Empty { what } => write!(f, "{what} must not be empty"),
            Error::LengthMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected length {expected}, got {got}"),
            Error::InvalidWeights { reason } => write!(f, "invalid weights: {reason}"),
            Error::InvalidParameter { what, value } => {
                write!(f, "invalid parameter {what} = {value}")
            }
            Error::NotMonotone { what } => write!(f, "monotonicity probe failed for {what}"),
            Error::DegenerateInput { denominator } => {
                write!(f, "degenerate input: denominator = {denominator}")
            }
            Error::Convergence { lo, hi } => {
                write!(f, "bisection did not converge; last bracket [{lo}, {hi}]")
            }
            Error::IndexOutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range (limit {limit})")
            }
            Error::NotDivisible { what, dim, r } => {
                write!(f, "{what} = {dim} is not divisible by r = {r}")
            }
            Error::OutOfDomain { what } => write!(f, "out of domain: {what}"),
            Error::AllCandidatesFailed { channel } => {
                write!(f, "all candidate aggregators failed for channel {channel}")
            }
            Error::Fusion {
                alpha,
                beta,
                channel,
                source,
            } => write!(f, "block ({alpha}, {beta}) channel {channel}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Fusion { source, .. } => Some(source),
            _ => None,
        }
    }
}
