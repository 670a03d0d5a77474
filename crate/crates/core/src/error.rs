use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network specification: {0}")]
    InvalidSpec(String),

    #[error("matrix is not Hermitian: worst entry ({row}, {col}) deviates by {deviation:e} (relative Frobenius deviation {relative:e})")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        relative: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coupled pair ({k}, {l}) has zero dephasing-plus-loss rate, the pairwise rate is singular")]
    SingularRate { k: usize, l: usize },

    #[error("ill-conditioned {what}: condition estimate {condition:e}, smallest singular value {smallest_singular_value:e}")]
    IllConditioned {
        what: &'static str,
        condition: f64,
        smallest_singular_value: f64,
    },

    #[error("degenerate spectrum: {multiplicity} near-null directions where exactly {expected} expected (network disconnected?)")]
    DegenerateSpectrum { multiplicity: usize, expected: usize },

    #[error("generator is not Hurwitz: max Re(lambda) = {max_real:e}; no loss channel?")]
    NotHurwitz { max_real: f64 },

    #[error("bound analysis requires {0}")]
    Precondition(String),

    #[error("insufficient data for fit: {usable} usable points, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
