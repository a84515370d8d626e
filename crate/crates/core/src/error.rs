use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("norms are diagonal in different bases ({0} vs {1}); diagonalize them in a common basis first")]
    BasisMismatch(String, String),

    #[error("exponent p must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("geodesic parameter must lie in [0, 1], got {0}")]
    ParameterOutOfRange(f64),

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid flag: {0}")]
    InvalidFlag(String),

    #[error("matrix is not Hermitian positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("generator is not self-adjoint with respect to the start norm (residual {0:e})")]
    NotSelfAdjoint(f64),

    #[error("dynamic range e^{0:.0} exceeds double precision")]
    NumericalRange(f64),

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("polytope is empty or not full-dimensional")]
    Empty,

    #[error("unsupported dimension {0} (supported: 1..=3)")]
    UnsupportedDimension(usize),

    #[error("level must be positive, got {0}")]
    InvalidLevel(i64),

    #[error("level {k} does not contain the vertices of the polytope")]
    LevelDoesNotCoverPolytope { k: u32 },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("subdivision does not tile the domain: volume {found} instead of {expected}")]
    SubdivisionMismatch { expected: String, found: String },

    #[error("point {0:?} is outside the domain of the piecewise-linear function")]
    OutsideDomain(Vec<f64>),

    #[error("function is not concave")]
    NotConcave,

    #[error("the zero weight vector has no normalized Chow weight")]
    ZeroVector,

    #[error("k = {k} is not a multiple of the breakpoint denominator {r}")]
    Divisibility { k: u32, r: u32 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
