use thiserror::Error;

#[derive(Debug, Error)]
pub enum NclabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level {level} out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not a projection (deviation {deviation:.3e})")]
    NotProjection { deviation: f64 },

    #[error("operator does not belong to the level-{level} subalgebra (deviation {deviation:.3e})")]
    NotInSubalgebra { level: usize, deviation: f64 },

    #[error("non-finite entry in operator")]
    NonFinite,

    #[error("spectral function undefined at eigenvalue {eigenvalue:.6e}")]
    UndefinedFunction { eigenvalue: f64 },

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("invalid martingale: {0}")]
    InvalidMartingale(String),

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, NclabError>;
