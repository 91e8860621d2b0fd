use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {value} is not a multiple of the grid step {step}; nearest representable value is {nearest} (rounding error {rounding_error:e})")]
    NotGridRepresentable {
        value: f64,
        step: f64,
        nearest: f64,
        rounding_error: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("window must be nonzero")]
    ZeroWindow,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("lattice generator entry {value} at ({row}, {col}) is not an integer number of grid steps; nearest commensurate entry is {nearest}")]
    IncommensurateGenerator {
        row: usize,
        col: usize,
        value: f64,
        nearest: f64,
    },

    #[error("lattice generator must be a {expected}x{expected} invertible matrix")]
    SingularGenerator { expected: usize },

    #[error("not a frame: lower bound {lower:e}, upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NewtonDivergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    SizeGuard { dim: usize, limit: usize },

    #[error("insufficient distance range: {usable} usable bins, at least {required} required")]
    InsufficientRange { usable: usize, required: usize },

    #[error("truncation radius {requested} exceeds the extraction radius {radius}")]
    ExtractionRadius { requested: f64, radius: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "power iteration did not converge after {iterations} iterations (estimate {estimate:e})"
    )]
    NonConvergence { estimate: f64, iterations: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
