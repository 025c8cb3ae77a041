use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cutoff {cutoff} per mode over {modes} modes gives {rows} rows, above the limit of {limit}")]
    Guard { cutoff: usize, modes: usize, rows: usize, limit: usize },
    #[error("cutoff must be at least 2, got {0}")]
    Cutoff(usize),
    #[error("truncation error {error:.3e} at cutoff {cutoff} exceeds {limit:.0e}; raise the cutoff")]
    Truncation { error: f64, cutoff: usize, limit: f64 },
    #[error("Fock density moments deviate from the target by {deviation:.3e}")]
    MomentMismatch { deviation: f64 },
    #[error("operator shapes differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("integrand does not decay: boundary/peak ratio {ratio:.3e}")]
    NonDecaying { ratio: f64 },
    #[error("quadrature needs n = 1 or n = 2, got {0}")]
    UnsupportedModes(usize),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Core(#[from] metaphase_core::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;
