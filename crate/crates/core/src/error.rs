use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NonHermitianInput { deviation: f64 },

    #[error("matrix is not unitary: max |U^dagger U - 1| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),

    #[error("angle {name} = {value} outside [{min}, {max}]")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error(
        "eigen-branch tracking ambiguous between t = {t_prev} and t = {t_next} \
         (best overlap^2 = {overlap:.3}); refine the time grid"
    )]
    EigenTrackingAmbiguous {
        t_prev: f64,
        t_next: f64,
        overlap: f64,
    },

    #[error("forward and backward distributions disagree on beta ({forward} vs {backward})")]
    MismatchedProtocol { forward: f64, backward: f64 },

    #[error("expected exposure must be positive and finite, got {0}")]
    InvalidExposure(f64),

    #[error("count record holds no coincidences")]
    EmptyRecord,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
