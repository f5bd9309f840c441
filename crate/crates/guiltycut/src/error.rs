//! Error types shared across the solver stack.

use thiserror::Error;

/// Errors raised by the oracle layer (problem registry, derivative checks).
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("oracle returned a non-finite value at order {order}")]
    NonFiniteEvaluation { order: usize },
    #[error("bad problem argument: {0}")]
    BadArgument(String),
}

/// Errors raised by the localization-set layer.
#[derive(Debug, Error)]
pub enum RegionError {
    /// A cut with a zero normal certifies that its anchor is stationary for
    /// the cut-generating function; callers terminate the cutting loop.
    #[error("cut normal is zero; anchor is a stationary point")]
    ZeroNormalCut,
    /// Newton could not restore strict feasibility, or hit-and-run found no
    /// feasible chord. The region likely has (numerically) empty interior.
    #[error("center computation suspects an empty interior")]
    EmptyInteriorSuspected,
    #[error("Monte-Carlo volume estimation is a test instrument limited to d <= 3 (got d = {0})")]
    DimensionTooLarge(usize),
}

/// Errors raised by the solver drivers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Region(#[from] RegionError),
    /// The geometric sampling loop exceeded its budget. Under a correctly
    /// declared volume factor this has probability < 1e-12 per call.
    #[error("certificate sampling exhausted its budget of {k_max} draws")]
    SamplingBudgetExhausted { k_max: u32 },
    /// The sampled point left the region inside the trust ball but no iterate
    /// satisfied the strict linearization inequality.
    #[error("certificate scan failed: no iterate violates its linearization for the escaped sample")]
    CertificateScanFailed,
    /// A progress outcome fell short of the guaranteed per-call decrease.
    /// Usually means the supplied Lipschitz constants are too small.
    #[error("progress assertion failed: decrease {actual:.6e} < required {required:.6e} ({context})")]
    ProgressAssertionFailed {
        actual: f64,
        required: f64,
        context: String,
    },
    #[error("eigendecomposition failed to converge")]
    EigenFailure,
    #[error("regime condition violated: epsilon = {epsilon:.3e} exceeds L1^(3/2)/L3^(1/2) = {bound:.3e}")]
    RegimeViolation { epsilon: f64, bound: f64 },
    #[error("outer loop exceeded {max_outer} iterations")]
    MaxOuterExceeded { max_outer: usize },
    #[error("runtime budget exceeded after {elapsed_s:.1}s (cutoff {cutoff_s:.1}s)")]
    RuntimeBudgetExceeded { elapsed_s: f64, cutoff_s: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}
