use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point {k} lies within {eps:e} of the branch cut")]
    OnBranchCut { k: Complex64, eps: f64 },

    #[error("negative radicand {0:e} in c± (lambda too small)")]
    NegativeRadicand(f64),

    #[error("parameter m = {m} outside segment interval [{lo}, {hi}]")]
    OutOfInterval { m: f64, lo: f64, hi: f64 },

    #[error("contour truncation insufficient: tail estimate {tail:e} exceeds {tol:e}")]
    TruncationInsufficient { tail: f64, tol: f64 },

    #[error("half-line transform requires Im(k) <= 0, got k = {0}")]
    UpperHalfPlane(Complex64),

    #[error("grid function does not decay at the right end: |f(b)|/max|f| = {0:e}")]
    TailTooLarge(f64),

    #[error("exponent {0} out of range")]
    ExponentOutOfRange(f64),

    #[error("range violation: {0}")]
    RangeViolation(String),

    #[error("s = 1/2 is excluded")]
    HalfExcluded,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate symmetry: |nu_- - nu_+| = {gap:e} at k = {k}")]
    DegenerateSymmetry { k: Complex64, gap: f64 },

    #[error("kernel evaluated at t = 0")]
    TimeZero,

    #[error("Picard iteration failed to contract: {0}")]
    NoContraction(String),

    #[error("incompatible data: |u0(0) - g(0)| = {0:e}")]
    IncompatibleData(f64),

    #[error("regularity gate failed: {0}")]
    RegularityGate(String),

    #[error("implicit stepper inner solve diverged at step {step}")]
    InnerSolveDiverged { step: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("malformed data file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
