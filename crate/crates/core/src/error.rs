use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty tensor factor list")]
    EmptyTensorFactors,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} is not Hermitian (residual {residual:e})")]
    NotHermitian { what: &'static str, residual: f64 },
    #[error("{what} is not a projector (residual {residual:e})")]
    NotProjector { what: String, residual: f64 },
    #[error("rho is not a density matrix: {0}")]
    InvalidDensity(String),
    #[error("time grid must be finite and strictly increasing")]
    InvalidTimeGrid,
    #[error("time grid origin {grid} does not match model origin {model}")]
    OriginMismatch { grid: f64, model: f64 },
    #[error("mixed temporal support")]
    MixedSupport,
    #[error("support too large for ILS reconstruction: (dim)^(2n) = {sector_dim} exceeds {cap}")]
    SectorTooLarge { sector_dim: usize, cap: usize },
    #[error("sector mismatch between propositions")]
    SectorMismatch,
    #[error("p-norm requires p >= 1, got {0}")]
    InvalidNormOrder(f64),
    #[error("non-real quadratic form (imaginary part {0:e})")]
    NonRealQuadraticForm(f64),
    #[error("window has no members")]
    EmptyWindow,
    #[error("window member {index} is not a projector")]
    NonProjectorMember { index: usize },
    #[error("base family too large: {size} elements exceeds cap {cap}")]
    FamilyTooLarge { size: usize, cap: usize },
    #[error("PVM at time index {time_index} is invalid: {reason}")]
    InvalidPvm { time_index: usize, reason: String },
    #[error("entropy undefined for inconsistent window")]
    InconsistentWindow,
    #[error("no consistent window in family")]
    NoConsistentWindow,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("too few points for growth fit: need at least 5 spanning 2 decades")]
    TooFewPoints,
    #[error("no growth model fits below residual threshold (best {0:e})")]
    AmbiguousGrowth(f64),
}
