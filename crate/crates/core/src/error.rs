use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates a precondition (lengths, modes, p, m...).
    InvalidConfiguration(String),
    /// An argument is outside the domain of the operation.
    InvalidArgument(String),
    /// Two fields or a field and a grid live on incompatible bases.
    ShapeMismatch { expected: usize, found: usize },
    /// `γ ≥ λ₁^{m+1}`: no positive solution exists and the quadratic part
    /// of the functional is no longer coercive.
    ThresholdViolation { gamma: f64, threshold: f64 },
    /// The quadratic part is nonpositive along the requested direction.
    SupercriticalDirection { quadratic: f64 },
    /// The explicit time step blew the solution up.
    UnstableStep { step: usize, norm: f64 },
    /// A quadrature or boundary value solve did not reach its tolerance.
    QuadratureFailure(String),
    /// An asymptotic fit left a residual larger than the accepted bound.
    AsymptoticsNotResolved { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfiguration(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected} entries, found {found}")
            }
            Error::ThresholdViolation { gamma, threshold } => {
                write!(f, "threshold violation: gamma = {gamma} is not below lambda_1^(m+1) = {threshold}")
            }
            Error::SupercriticalDirection { quadratic } => {
                write!(f, "supercritical-gamma direction: quadratic part {quadratic} is not positive")
            }
            Error::UnstableStep { step, norm } => {
                write!(f, "unstable time step: norm {norm:e} at step {step}, try a smaller dt")
            }
            Error::QuadratureFailure(msg) => write!(f, "quadrature failure: {msg}"),
            Error::AsymptoticsNotResolved { residual } => {
                write!(f, "asymptotics not resolved: fit residual {residual}")
            }
        }
    }
}

impl core::error::Error for Error {}
