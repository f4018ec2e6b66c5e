use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |m - m†| = {defect:e} (scale {scale:e})")]
    NonHermitianInput { defect: f64, scale: f64 },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("operator is {rows}x{cols}, mode dimensions require {expected}x{expected}")]
    DimensionMismatch { expected: usize, rows: usize, cols: usize },
    #[error("eigenvalue {value:e} is below the negativity tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("spectrum sums to {trace}, expected 1")]
    NotNormalized { trace: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("orientation mismatch: builder for {expected} called with {found}")]
    OrientationMismatch { expected: &'static str, found: &'static str },
    #[error("Fock truncation at n_max={n_max} keeps only {fraction:.6} of the extrapolated trace (target {target})")]
    TruncationInsufficient { n_max: usize, fraction: f64, target: f64 },
    #[error("trace increments are not decaying geometrically after {steps} levels")]
    NoConvergence { steps: usize },
    #[error("outcome mass {reached:e} of {target:e} not reached within radius {radius}")]
    MassNotReached { reached: f64, target: f64, radius: f64 },
    #[error("radial quadrature not converged at {nodes} nodes (relative change {change:e})")]
    QuadratureNotConverged { nodes: usize, change: f64 },
    #[error("covariance matrix is not physical: {0}")]
    NonPhysicalResult(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
