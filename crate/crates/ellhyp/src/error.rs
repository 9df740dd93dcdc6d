use thiserror::Error;

/// Failure modes shared by every evaluation in the crate.
///
/// `Pole` and `Zero` report arguments landing on (or within the guard
/// distance of) a pole or zero of a gamma factor. `Domain` reports inputs
/// that violate a precondition such as a balancing constraint or a parity
/// rule. `PolePinch` means no admissible contour exists between the two
/// pole lattices. `NonConvergence` means a quadrature or bilateral sum
/// failed to meet its tolerance within the node/term budget.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("zero denominator: {0}")]
    Zero(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("contour pinched: {0}")]
    PolePinch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn pole(msg: impl Into<String>) -> Self {
        Error::Pole(msg.into())
    }
    pub fn zero(msg: impl Into<String>) -> Self {
        Error::Zero(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn overflow(msg: impl Into<String>) -> Self {
        Error::Overflow(msg.into())
    }
    pub fn non_convergence(msg: impl Into<String>) -> Self {
        Error::NonConvergence(msg.into())
    }
    pub fn pole_pinch(msg: impl Into<String>) -> Self {
        Error::PolePinch(msg.into())
    }
}
