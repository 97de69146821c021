use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("boundary Dirac operator has a zero mode (not invertible)")]
    NonInvertibleBoundary,

    #[error("zeta series diverges at s = {s}: need s > {dimension} (boundary dimension)")]
    DivergentRegion { s: f64, dimension: usize },

    #[error("invalid boundary model: {0}")]
    InvalidBoundary(String),

    #[error("invalid cusp model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation t = {truncation} lies outside the radial domain [0, {end})")]
    DomainExceeded { truncation: f64, end: f64 },

    #[error("potential is not finite at t = {t}")]
    NonFinitePotential { t: f64 },

    #[error("{found} eigenvalues below the shift exceed the cap of {cap}")]
    TooManyEigenvalues { found: usize, cap: usize },

    #[error("dense oracle supports at most {max} rows, got {n}")]
    SizeExceeded { n: usize, max: usize },

    #[error("zeta truncation needs {needed} terms, above the budget of {budget}")]
    TruncationBudget { needed: f64, budget: usize },

    #[error("count did not converge after {levels} refinement levels (last relative drift {drift})")]
    NonConvergent { levels: usize, drift: f64 },

    #[error("counting function undefined: {reason}")]
    NotPurePoint { reason: String },

    #[error("boundary zero mode makes the horn tip boundary-condition sensitive for p = {p} > 1")]
    ZeroModeUnsafe { p: f64 },

    #[error("volume of g_p is infinite for p = {p} <= 1/n = {critical}")]
    InfiniteVolume { p: f64, critical: f64 },

    #[error("boundary volume is required but the model does not declare one")]
    MissingBoundaryVolume,

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("fit samples must have positive counts")]
    NonPositiveCounts,

    #[error("smallest singular value did not stabilize under truncation doubling (K = {truncation}, change {change})")]
    NonConvergentTruncation { truncation: usize, change: f64 },
}
