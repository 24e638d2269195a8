//! Pricing of continuously monitored geometric Asian options under affine
//! stochastic volatility models with jumps.
//!
//! Prices come from a Bromwich-contour inversion of the cumulant of the log
//! geometric average, which in turn solves generalized Riccati equations
//! with a time-dependent first argument. Closed forms and a Monte Carlo
//! oracle are provided for cross-checking.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_forms;
pub mod contract;
pub mod error;
pub mod laplace;
pub mod lognormal;
pub mod mc;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod riccati;

pub use contract::{AveragePayoffKind, ContractSpec};
pub use error::{Error, Result};
pub use laplace::{choose_abscissa, price, ContourConfig, PriceResult};
pub use mc::{mc_cumulant, mc_price, McEstimate, SimConfig};


pub use model::{functional_characteristics, ModelSpec, C64};
pub use riccati::{solve_joint, SolverConfig};
