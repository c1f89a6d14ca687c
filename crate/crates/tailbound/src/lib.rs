//! Estimation, baselines, and studies on top of `tailbound-core`.
//!
//! The core crate answers "given tail parameters, what is the worst-case
//! expectation". This crate supplies everything around that question:
//! calibrating the parameters from data with bootstrap intervals, a
//! generalized Pareto baseline to compare against, reference distributions
//! for synthetic studies, the application studies themselves, and the file
//! formats behind the `tailbound` binary.

pub mod applications;
pub mod cli;
pub mod dist;
pub mod estimation;
pub mod gpd;
pub mod io;

pub use dist::KnownDistribution;

/// Everything that can go wrong above the core solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid parameters or objectives rejected by the core crate.
    #[error(transparent)]
    Core(#[from] tailbound_core::Error),
    /// The tail parameters admit no convex density at all.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Data-driven calibration produced unusable tail parameters.
    #[error("calibration failed: {0}")]
    Calibration(String),
    /// A maximum-likelihood fit did not converge or was ill-posed.
    #[error("fit failed: {0}")]
    FitFailure(String),
    /// Malformed user input: files, spec strings, or argument combinations.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the binary: 1 for usage problems, 2 when the
    /// parameters are infeasible, 3 when calibration or fitting fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::Calibration(_) | Error::FitFailure(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
