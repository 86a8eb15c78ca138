//! Global solution curves for radial semilinear Dirichlet problems on the
//! unit ball.
//!
//! For the problems
//!
//! ```text
//! u'' + ((n-1)/r) u' + lambda r^alpha f(u) = 0,   u'(0) = 0,  u(1) = 0,
//! ```
//!
//! with `f(u)` one of `e^u`, `e^-u`, `(1+u)^p`, or `1/(1-u)^p`, every radial
//! solution for every `lambda > 0` is a rescaling of a single generating
//! solution `w(t)`. This crate integrates that one generating initial value
//! problem and reads the entire bifurcation diagram `(lambda, u(0))` off it:
//!
//! - [`curve::trace`] produces the global solution curve, locates turning
//!   points as sign changes of a closed-form indicator, and classifies the
//!   asymptotic regime (infinitely many turns vs. a monotone curve) from the
//!   roots of an Euler equation;
//! - [`morse`] reconstructs radial profiles from points of the curve, counts
//!   zeros of the linearized equation to obtain Morse indices, and checks
//!   closed-form candidates for the eigenfunction at turning points;
//! - [`henon`] treats the one-dimensional Henon equation, where symmetry
//!   breaking produces asymmetric solutions, by a two-sided shooting method.
//!
//! The numerical base is a Dormand-Prince 5(4) integrator with dense output
//! and bracketed event refinement ([`ivp`]). Start with the `examples/`
//! directory for runnable tours of each capability; the `solcurve` binary
//! exposes the same operations as subcommands.

pub mod curve;
pub mod henon;
pub mod ivp;
pub mod morse;
pub mod problems;
pub mod report;

pub mod cli;

pub use curve::{SolutionCurve, TurnDirection, TurningPoint};
pub use ivp::{integrate, OdeSystem, Termination, Trajectory};
pub use problems::{ProblemFamily, ProblemSpec, Regime};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("operation is not defined for the {0} family")]
    UnsupportedFamily(problems::ProblemFamily),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no sign change over [{lo:e}, {hi:e}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("no root found with the integration window grown to {0:e}")]
    NoRootFound(f64),
    #[error("xi = {xi:e} is not a root of the matching function (|F| = {residual:e})")]
    InvalidRoot { xi: f64, residual: f64 },
    #[error("t_b = {t_b:e} is not a turning point (|indicator| = {indicator:e})")]
    NotATurningPoint { t_b: f64, indicator: f64 },
    #[error("right-hand side returned a non-finite value at t = {0:e}")]
    NonFiniteState(f64),
    #[error("step limit exceeded at t = {0:e}")]
    StepLimitExceeded(f64),
    #[error("numerical consistency failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 2 for violated
    /// preconditions or unsupported requests, 3 for numerical or I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedFamily(_)
            | Error::DomainError(_)
            | Error::PreconditionViolated(_)
            | Error::NoSignChange { .. }
            | Error::InvalidRoot { .. }
            | Error::NotATurningPoint { .. } => 2,
            Error::NoRootFound(_)
            | Error::NonFiniteState(_)
            | Error::StepLimitExceeded(_)
            | Error::Numerical(_)
            | Error::Io(_) => 3,
        }
    }
}
