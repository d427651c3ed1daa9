use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("adaptive quadrature did not converge on [{a}, {b}] within {max_depth} bisections")]
    QuadratureDiverged { a: f64, b: f64, max_depth: usize },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (only 2 and 3)")]
    UnsupportedDimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field sampled on a different grid")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time order violated: need t >= s, got s = {s}, t = {t}")]
    TimeOrder { s: f64, t: f64 },

    #[error("input field is not solenoidal (divergence ratio {ratio:e})")]
    NotSolenoidal { ratio: f64 },

    #[error("matrix family does not commute (worst relative commutator {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("non-finite values in Picard iterate {iterate} at time index {time_index}")]
    NonFiniteIterate { iterate: usize, time_index: usize },
}
