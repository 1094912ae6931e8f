//! Short-maturity large deviations for rough volatility models.
//!
//! The crate computes the short-time rate function of the log-price, the
//! tail rate `Λ*`, and the limiting implied-volatility smile
//! `|x| / √(2 Λ*(x))`, and checks them against Monte Carlo simulation of the
//! full model. Supporting modules cover Hölder norms on grids, singular
//! Volterra kernels, Young pairings with Chen's relation, and stopping-time
//! approximations of stochastic integrals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod lift;
pub mod mc;
pub mod model;
pub mod rate;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use kernels::KernelSpec;
pub use model::{preset, FunctionFamily, ModelSpec, Preset};
