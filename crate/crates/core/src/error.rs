use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode count must be at least 1")]
    ZeroModes,
    #[error("matrix dimension {0} is odd")]
    OddDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symplectic (defect {defect:.3e})")]
    NotSymplectic { defect: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not in sp(n): JX is not symmetric (asymmetry {asymmetry:.3e})")]
    NotHamiltonian { asymmetry: f64 },
    #[error("det(S - I) = {det:.3e} is numerically zero")]
    DegenerateEndpoint { det: f64 },
    #[error("det(SS' - I) = {det:.3e} is numerically zero")]
    DegenerateProduct { det: f64 },
    #[error("omega*t = {omega_t} is an integer multiple of pi")]
    DegenerateTime { omega_t: f64 },
    #[error("matrix is not free: det B = {det_b:.3e}")]
    NotFree { det_b: f64 },
    #[error("generating function L block is singular")]
    SingularL,
    #[error("Maslov index {m} has the wrong parity for sign(det L) = {det_l_sign}")]
    MaslovParity { m: i64, det_l_sign: i8 },
    #[error("index {nu} is inconsistent with sign det(S - I) (expected parity {expected})")]
    IndexParity { nu: i64, expected: u8 },
    #[error("inertia of a singular quadratic form is undefined (smallest |eigenvalue| {value:.3e})")]
    SingularForm { value: f64 },
    #[error("crossing near t = {t} could not be resolved")]
    UnresolvedCrossing { t: f64 },
    #[error("no factorization found on the rotation ladder")]
    SearchFailed,
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("path does not start at the identity (deviation {deviation:.3e})")]
    NotAtIdentity { deviation: f64 },
    #[error("state is not quantum-admissible: smallest symplectic eigenvalue {min_symplectic_eigenvalue} < hbar/2 = {half_hbar}")]
    Inadmissible { min_symplectic_eigenvalue: f64, half_hbar: f64 },
    #[error("state is not centered; use the inhomogeneous trace")]
    NotCentered,
    #[error("real part of the Fresnel matrix is not positive definite")]
    FresnelNotPositive,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
