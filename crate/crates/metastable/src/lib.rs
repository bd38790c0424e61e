//! Fluctuation and crossing counts, convergence-rate formulas, and exact
//! verification of rate claims on stochastic processes over finite atomic
//! probability spaces.

// `!(x > 0.0)` style checks are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod numeric;
pub mod path_statistics;
pub mod prob_space;
pub mod process_library;
pub mod process_spec;
pub mod rate_calculus;
pub mod sampling;
pub mod verifier;

pub use error::{Error, Result};
