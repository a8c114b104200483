use alloc::string::String;
use core::fmt;

use crate::sdp::SolveStatus;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not fit together.
    Dimension(String),
    /// An argument violates its documented domain.
    InvalidInput(String),
    /// A factorization met a (numerically) singular matrix.
    Singular,
    /// A matrix expected to be positive definite is not.
    NotPositiveDefinite,
    /// The exactly discretized plant is not stabilizable.
    NotStabilizable,
    /// No point satisfies the constraints (with the requested margins).
    Infeasible(String),
    /// The optimizer stopped without a usable answer.
    Solver(SolveStatus),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Singular => f.write_str("matrix is singular to working precision"),
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            Error::NotStabilizable => {
                f.write_str("discretized plant (A_D, B_D) is not stabilizable")
            }
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Solver(s) => write!(f, "solver stopped with status {s:?}"),
        }
    }
}

impl core::error::Error for Error {}
