use thiserror::Error;

/// Errors raised by the taukit engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TauError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid values invalid: {0}")]
    InvalidValues(String),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("grid too short or coarse: minimizer at grid edge near x = {x}")]
    BoundaryMinimizer { x: f64 },
    #[error("argmin touched the search boundary at axis {axis}")]
    SearchBoundary { axis: usize },
    #[error("cost is not convex: {0}")]
    NotConvex(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("certificate violated at x = {x:?}, y = {y:?} ({lhs} > {rhs})")]
    CertificateViolation {
        x: Vec<f64>,
        y: Vec<f64>,
        lhs: f64,
        rhs: f64,
    },
    #[error("did not converge: {0}")]
    NoConvergence(String),
    #[error("too many atoms: {count} exceeds {limit}")]
    AtomOverflow { count: u128, limit: u128 },
    #[error("unknown test-function family `{0}`")]
    UnknownFamily(String),
}

pub type Result<T> = std::result::Result<T, TauError>;
