use std::fmt;

/// Errors produced by problem construction, sampling, weighting, quadrature,
/// and planning.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated its documented contract (non-positive scale,
    /// empty batch, inconsistent bounds, ...).
    InvalidArgument(String),
    /// Vector or matrix dimensions do not match the problem description.
    ShapeMismatch(String),
    /// A non-finite value appeared where a finite one is required.
    /// `index` identifies the offending step or batch element when known.
    NonFinite { what: String, index: Option<usize> },
    /// The quadrature grid captures too little of the prior distribution.
    NarrowGrid(String),
    /// The posterior underflowed to zero everywhere on the grid.
    DegenerateDensity(String),
    /// Every sampled trajectory in a batch evaluated to a non-finite cost.
    SolverFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFinite { what, index: Some(i) } => {
                write!(f, "non-finite value: {what} at index {i}")
            }
            Error::NonFinite { what, index: None } => write!(f, "non-finite value: {what}"),
            Error::NarrowGrid(msg) => write!(f, "grid too narrow: {msg}"),
            Error::DegenerateDensity(msg) => write!(f, "degenerate density: {msg}"),
            Error::SolverFailure(msg) => write!(f, "solver failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
