use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^H| = {defect:.3e}, scale {scale:.3e})")]
    NotHermitian { defect: f64, scale: f64 },

    #[error("eigensolver did not converge for dimension {dim} (residual {residual:.3e})")]
    NoConvergence { dim: usize, residual: f64 },

    #[error("matrix is singular to tolerance (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e}); problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t:.6e}")]
    TooManySteps { max_steps: usize, t: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("Liouvillian kernel is degenerate (second smallest singular value {sigma:.3e})")]
    DegenerateKernel { sigma: f64 },

    #[error("resolvent singular at omega/2pi = {freq_hz:.6e} Hz")]
    SingularResolvent { freq_hz: f64 },

    #[error("regime not valid: {0}")]
    InvalidRegime(String),

    #[error("no minimum inside bracket [{lo}, {hi}]")]
    NoMinimumInBracket { lo: f64, hi: f64 },

    #[error("phonon truncation too small: top Fock population {population:.3e} exceeds 1e-3")]
    Truncation { population: f64 },

    #[error("requested detuning {delta_hz:.3e} Hz lies inside the non-dispersive window (|delta| <= {limit_hz:.3e} Hz)")]
    NonDispersive { delta_hz: f64, limit_hz: f64 },

    #[error("no {kind} found in trace")]
    NoFeature { kind: &'static str },

    #[error("feature at {location:.6e} has width {width:.3e}, below 8 grid steps of {step:.3e}; refine the grid")]
    NeedsRefinement { location: f64, width: f64, step: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {change:.3e})")]
    FixedPoint { iterations: usize, change: f64 },

    #[error("trace format error: {0}")]
    Format(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
