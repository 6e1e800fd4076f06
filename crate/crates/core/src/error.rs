use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("not a density matrix: {0}")]
    InvalidDensity(String),

    #[error("spectrum must be descending, nonnegative and sum to one: {0}")]
    InvalidSpectrum(String),

    #[error("vectors are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("operation requires a two-level system, got n = {0}")]
    NotTwoLevel(usize),

    #[error("system is not generic: transition frequencies {0} and {1} coincide")]
    NonGeneric(String, String),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("step {dt:e} s does not resolve the drive (need dt <= {max:e} s)")]
    StepTooCoarse { dt: f64, max: f64 },

    #[error("stationary state is not unique (kernel dimension {0})")]
    NonUniqueSteadyState(usize),

    #[error("generator has no nonzero decay rate (zero spectral gap)")]
    ZeroGap,

    #[error("system is not unitarily controllable: Lie algebra dimension {rank} < {required}")]
    Uncontrollable { rank: usize, required: usize },

    #[error("stage-2 mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("Kraus operators are not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}
