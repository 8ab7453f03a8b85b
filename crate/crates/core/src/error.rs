use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::perturbation::IterationRecord;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Evaluation point lies outside the parametric domain.
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    /// An argument violated a precondition; the message names it.
    InvalidArgument(String),
    /// A matrix required to be symmetric positive definite failed its
    /// Cholesky factorization at the given pivot.
    NotPositiveDefinite { pivot: usize },
    /// Power iteration did not reach the requested tolerance; carries the
    /// last Rayleigh-quotient iterate so callers with looser accuracy needs
    /// can continue.
    PowerIterationStalled {
        iterations: usize,
        last_frequency: f64,
        last_vector: Vec<f64>,
    },
    /// Parameter estimation could not proceed (degenerate interface energy
    /// or a singular parameter system).
    Estimation(String),
    /// An estimation loop exceeded its iteration budget; carries the
    /// per-iteration trace accumulated so far.
    EstimationDiverged { trace: Vec<IterationRecord> },
    /// The targeted mode carries no interface energy: nothing to suppress.
    NoOutlier,
    /// Requested time step violates the central-difference stability bound.
    UnstableTimeStep { dt: f64, dt_crit: f64 },
    /// Mode matching failed, e.g. a rank-deficient degenerate group.
    Matching(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfDomain { x, lo, hi } => {
                write!(f, "point {x} outside domain [{lo}, {hi}]")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite (pivot {pivot})")
            }
            Error::PowerIterationStalled {
                iterations,
                last_frequency,
                ..
            } => write!(
                f,
                "power iteration stalled after {iterations} iterations (last frequency {last_frequency})"
            ),
            Error::Estimation(msg) => write!(f, "parameter estimation failed: {msg}"),
            Error::EstimationDiverged { trace } => write!(
                f,
                "parameter estimation did not converge within {} iterations",
                trace.len()
            ),
            Error::NoOutlier => write!(f, "no outlier: maximum mode carries no interface energy"),
            Error::UnstableTimeStep { dt, dt_crit } => {
                write!(f, "time step {dt} exceeds critical step {dt_crit}")
            }
            Error::Matching(msg) => write!(f, "mode matching failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
