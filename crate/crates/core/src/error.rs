use thiserror::Error;

use crate::expr::ExprError;

/// Every failure the library reports. Expression errors are wrapped so that
/// callers see one error type regardless of which layer failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("mesh too small: {0}")]
    SizeTooSmall(String),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("expression coordinates {found:?} do not match mesh coordinates {expected:?}")]
    CoordinateMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("no containing triangle for point ({0}, {1}, {2})")]
    LocationFailure(f64, f64, f64),
    #[error("{what} = {value} outside [{min}, {max}]")]
    OutOfRange { what: &'static str, value: i64, min: i64, max: i64 },
    #[error("integrator order must be even, got {0}")]
    OddOrder(u32),
    #[error("numeric brackets nested {depth} deep lose too much accuracy; pass allow_numeric to override")]
    NumericDepth { depth: usize },
    #[error("symbolic expression required: {0}")]
    SymbolicRequired(String),
    #[error("no exact flow for Hamiltonian `{0}`")]
    NotRecognized(String),
    #[error("no exact flow available: {0}")]
    ExactFlowUnavailable(String),
    #[error("reference flow did not reach tolerance {tol:e} within {steps} steps (gap {gap:e})")]
    NoConvergence { tol: f64, steps: usize, gap: f64 },
    #[error("reference error {reference:e} is not small against measured error {measured:e} at t = {t}")]
    ReferenceToleranceExceeded { t: f64, measured: f64, reference: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("fit needs at least {needed} usable points, {usable} remain")]
    InsufficientPoints { needed: usize, usable: usize },
    #[error("Reeb graphs are only built on sphere meshes")]
    NotASphereMesh,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
