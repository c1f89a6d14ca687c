#![cfg_attr(not(feature = "std"), no_std)]

//! Worst-case bounds on tail performance measures.
//!
//! Suppose all that is known about a random variable `X` beyond a threshold
//! `a` is local: the tail mass `beta = P(X >= a)`, the density value
//! `eta = f(a)`, a bound `nu` on the slope magnitude of the density at `a`,
//! and the shape constraint that `f` is convex on `[a, inf)`. This crate
//! computes the exact worst case of `E[h(X); X >= a]` over every density
//! consistent with those facts, for bounded objectives `h` that rise to at
//! most one mode and then fall.
//!
//! The computation never discretizes the space of densities. A change of
//! variables turns the problem into a moment problem over probability
//! measures on `[0, inf)` with prescribed first and second moments
//! `mu = eta/nu` and `sigma = 2*beta/nu`, whose extreme points carry at most
//! two support points. That reduces everything to a one-dimensional line
//! search, and the optimal density is recovered as a piecewise-linear convex
//! tail with at most two kinks ([`solver::solve_point`]). When the inputs are
//! confidence intervals instead of exact values, two nested line searches
//! cover the enlarged feasible set ([`solver::solve_interval`]).
//!
//! Organization:
//! - [`domain`]: parameter and density types, the measure-density
//!   correspondence, feasibility checking.
//! - [`objective`]: built-in objectives (interval indicator, stop-loss,
//!   exponential utility, newsvendor shortfall, constants) and a validated
//!   wrapper for numeric objectives, each carrying the iterated integral `H`
//!   the solvers consume.
//! - [`solver`]: the two bound computations.
//! - [`oracle`]: deliberately independent brute-force checkers used by the
//!   test suite; they re-solve the moment systems numerically instead of
//!   reusing the solver's closed forms.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable default features
//! to drop `std`.

extern crate alloc;

use alloc::string::String;
use core::fmt;

pub mod domain;
mod num;
pub mod objective;
pub mod oracle;
pub mod quad;
pub mod solver;

pub use domain::{
    consistency_check, density_from_measure, to_interval_moment_params, to_moment_params,
    verify_density_feasibility, BoundResult, Consistency, FeasibilityReport, IntervalMomentParams,
    IntervalParams, Maximizer, MomentMeasure, MomentParams, PiecewiseLinearDensity, TailClass,
    TailParams,
};
pub use objective::ObjectiveSpec;
pub use solver::{solve_interval, solve_point, LineSearchConfig, SearchConfig};

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar input violates its documented range (finiteness included).
    InvalidParameter(String),
    /// An objective failed construction-time validation.
    InvalidObjective(String),
    /// A discrete measure does not reproduce the moments implied by the
    /// tail parameters it is paired with.
    CalibrationMismatch(String),
    /// An evaluation point lies outside the function's domain.
    OutOfDomain(String),
    /// Rejection sampling exhausted its budget (the feasible set is too
    /// thin near the consistency boundary).
    SamplingExhausted(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidObjective(msg) => write!(f, "invalid objective: {msg}"),
            Error::CalibrationMismatch(msg) => write!(f, "calibration mismatch: {msg}"),
            Error::OutOfDomain(msg) => write!(f, "out of domain: {msg}"),
            Error::SamplingExhausted(msg) => write!(f, "sampling exhausted: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
