//! Equilibrium and welfare analysis for a financial advisor / customer
//! opinion game.
//!
//! A bank wants customers to hold opinion `w`. An advisor with internal opinion
//! `x` states an opinion `s` to `n` customers, and each customer settles on an
//! opinion `c_i` between their baseline `d_i` and `s`. The crate covers:
//!
//! - [`model`]: parameters, utilities, best responses and social welfare.
//! - [`equilibria`]: the two closed-form Nash candidates, their admissibility,
//!   limit points and the critical dissonance sensitivity.
//! - [`quartic`] and [`welfare`]: the welfare optimum over the strategy domain
//!   and the price of stability.
//! - [`oracle`]: brute-force verifiers (grid search, best-response dynamics,
//!   unilateral deviation checks).
//! - [`sweep`]: config parsing, single-instance reports and parameter sweeps
//!   behind the `pfgame` binary.

pub mod equilibria;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quartic;
pub mod sweep;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    Advisor, Customer, Game, HeterogeneousParams, ModelParams, OpinionProfile, ParamName,
    ParamValues, EPS_DEN,
};
