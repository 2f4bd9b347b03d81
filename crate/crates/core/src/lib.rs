//! Robust policy iteration for discounted robust Markov chains (RMCs) and
//! robust MDPs (RMDPs) with `(s,a)`-rectangular `L∞` uncertainty sets.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: instances, policies, validation and policy-induced sub-models
//! - [`inner_max`]: the two-pointer homotopy maximizer over an `L∞` ball, an
//!   enumeration oracle, and the receiver/donor structure of its output
//! - [`eval`]: exact policy evaluation, robust Bellman operators, value iteration
//! - [`policy_iteration`]: RMC-PI and RMDP-PI with full traces
//! - [`diagnostics`]: potential functions and runtime certificates of the
//!   convergence bounds on recorded traces
//! - [`dyadic`]: exact enumeration of signed subset sums and their dyadic degree
//! - [`game`]: reduction from turn-based stochastic games to `L∞` RMDPs
//! - [`io`] and [`generate`]: JSON instance files and seeded random instances
//!
//! All numeric code is generic over [`Scalar`]; run it over [`Rational`] for
//! exact, tolerance-free results on small instances.

pub mod diagnostics;
pub mod dyadic;
pub mod eval;
pub mod game;
pub mod generate;
pub mod inner_max;
pub mod io;
mod linalg;
pub mod model;
pub mod policy_iteration;
pub mod scalar;

pub use scalar::{Rational, Scalar};

/// Default slack for nominal-mass checks on instance files.
pub const EPS_SUM: f64 = 1e-9;
/// Ball-membership slack for solver-produced distributions.
pub const EPS_FEAS: f64 = 1e-12;
/// Policy-iteration fixed-point tolerance.
pub const EPS_FIX: f64 = 1e-9;
/// Width of the band treated as a tie when choosing actions.
pub const EPS_TIE: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed model: {0}")]
    Structure(String),
    #[error("infeasible distribution at state {state}: {reason}")]
    Infeasible { state: usize, reason: String },
    #[error("enumeration of {size} items exceeds the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_discount<T: Scalar>(gamma: &T) -> Result<()> {
    if *gamma > T::zero() && *gamma < T::one() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("discount factor must lie in (0,1), got {gamma}")))
    }
}
