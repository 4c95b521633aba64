use thiserror::Error;

/// Errors produced by spectrum construction, the analytic engines, the
/// thermodynamic observable machinery and the Monte Carlo estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("overflow guard: {0}")]
    OverflowGuard(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("degenerate gap between distinct levels {0} and {1}")]
    DegenerateGap(f64, f64),

    #[error("precision failure in float mode ({0}); use the exact evaluator")]
    PrecisionFailure(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrable singular point at s = {0}; do not evaluate on a segment endpoint")]
    SingularPoint(f64),

    #[error("quadrature failed to reach tolerance {requested:.3e}; achieved {achieved:.3e}")]
    ToleranceFailure { requested: f64, achieved: f64 },

    #[error("root bracket [{0}, {1}] contains no sign change")]
    BracketFailure(f64, f64),

    #[error("perturbation step too large: ground state crosses the energy shell ({0})")]
    StepTooLarge(String),

    #[error("finite-difference derivative did not converge: estimates {0:.6e} and {1:.6e}")]
    NonConvergence(f64, f64),

    #[error("degenerate ground state (multiplicity {0}) is not supported here")]
    UnsupportedDegenerateGround(u64),

    #[error("unsupported degenerate spectrum: {0}")]
    UnsupportedDegenerate(String),

    #[error("energy shell [{center} ± {half_width}] accepted no samples")]
    ShellEmpty { center: f64, half_width: f64 },

    #[error("no samples fell inside the histogram range")]
    EmptyHistogram,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
