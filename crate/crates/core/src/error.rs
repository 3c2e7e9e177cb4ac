use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the reduced-order modeling pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A mesh needs at least two cells so that one interior node exists.
    InvalidMesh { n_cells: usize },
    DimensionMismatch { expected: usize, found: usize },
    InvalidConfig(String),
    /// Newton (or chord) iteration did not reach the residual tolerance.
    /// `step` is the time-step index when the failure happened inside a
    /// trajectory solve.
    NonlinearSolveFailure {
        step: Option<usize>,
        iterations: usize,
        residual: f64,
    },
    /// The snapshot set has no time steps, so no difference quotient exists.
    EmptyCollection,
    /// Every eigenvalue fell below the cutoff.
    EmptyBasis,
    RankOutOfRange { r: usize, d: usize },
    /// A reduced Gram or Jacobian could not be factored.
    SingularSystem { what: &'static str },
    /// Two trajectories do not share a time grid.
    GridMismatch { reason: String },
    InvalidRegression(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::NonlinearSolveFailure {
                iterations,
                residual,
                ..
            } => Error::NonlinearSolveFailure {
                step: Some(step),
                iterations,
                residual,
            },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh { n_cells } => {
                write!(f, "mesh needs at least 2 cells, got {n_cells}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonlinearSolveFailure {
                step,
                iterations,
                residual,
            } => {
                write!(
                    f,
                    "nonlinear solve failed after {iterations} iterations (residual {residual:e})"
                )?;
                if let Some(step) = step {
                    write!(f, " at time step {step}")?;
                }
                Ok(())
            }
            Error::EmptyCollection => write!(f, "snapshot set has no time steps"),
            Error::EmptyBasis => write!(f, "no POD eigenvalue above the cutoff"),
            Error::RankOutOfRange { r, d } => {
                write!(f, "reduced dimension {r} outside the admissible range 1..={d}")
            }
            Error::SingularSystem { what } => write!(f, "singular {what}"),
            Error::GridMismatch { reason } => write!(f, "time grid mismatch: {reason}"),
            Error::InvalidRegression(msg) => write!(f, "invalid regression input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
