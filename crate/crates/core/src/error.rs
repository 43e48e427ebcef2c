use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gram matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("gram matrix is not positive definite (smallest eigenvalue {min:e}, floor {floor:e})")]
    NotPositiveDefinite { min: f64, floor: f64 },

    #[error("map is not invertible (smallest singular value {smallest:e}, largest {largest:e})")]
    NotInvertible { smallest: f64, largest: f64 },

    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    #[error("not aligned to the grid: {0}")]
    Misaligned(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: value {value:e}, estimated error {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("ill-conditioned system (condition number {condition:e}, residual {residual:e})")]
    IllConditioned { condition: f64, residual: f64 },

    #[error("grid exhausted: {0}")]
    GridExhausted(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} = {value:e} exceeds the hard limit {limit:e}")]
    QualityLimit { what: String, value: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::IncompatibleSpaces(_)
                | Error::Misaligned(_)
                | Error::InvalidParameter(_)
                | Error::GridExhausted(_)
                | Error::Config(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
