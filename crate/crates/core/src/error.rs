//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by parameter validation, the accountant, and the simulators.
#[derive(Debug, Error, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A scalar or integer parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The step size exceeds the bound required by the convexity class.
    #[error("step size {eta} exceeds the {class} bound {bound}")]
    StepSizeTooLarge { eta: f64, bound: f64, class: &'static str },

    /// The first-order map is not a contraction, so the optimal slack is undefined.
    #[error("Lipschitz constant c = {0} is not < 1; optimal theta is undefined")]
    CNotContractive(f64),

    /// The radicand of the generalized Lipschitz coefficient is negative.
    #[error("negative radicand {0} in the generalized Lipschitz coefficient")]
    NegativeRadicand(f64),

    /// Two Renyi curves were combined over different order grids.
    #[error("Renyi curves are defined on different order grids")]
    GridMismatch,

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    /// The lower bound on the number of directions exceeds d/2.
    #[error("no feasible K: lower bound {lower} exceeds d/2 = {upper}")]
    NoFeasibleK { lower: f64, upper: usize },

    /// A shift schedule violates the z-recursion constraints.
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    /// No (tau, theta) pair yields an admissible schedule.
    #[error("no feasible schedule: {0}")]
    NoFeasibleSchedule(String),

    /// One or more preconditions of the closed-form bound fail.
    #[error("precondition violated: {}", .0.join("; "))]
    PreconditionViolated(Vec<String>),

    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while reading config or writing artifacts.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
