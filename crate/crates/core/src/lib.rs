//! Robust sparse linear regression under heavy-tailed covariates and
//! adversarial contamination.
//!
//! The estimator clips covariates, finds sample weights that certify no
//! direction carries an inflated weighted second moment, rounds the weights
//! to `{0, 1/n}`, and solves a weighted ℓ1-penalized Huber regression.
//! Everything here is `no_std` (with `alloc`); IO and the CLI live in the
//! `robreg` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod datagen;
pub mod error;
pub mod huber;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod pruning;
pub mod rounding;
pub mod tuning;
pub mod weights;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{compute_rates, estimate_moment_profile, MomentProfile, Rates, RegressionInstance, Truth};
pub use pipeline::{estimate, run_estimator, Clock, EstimationResult, Estimator, NoClock};
pub use rounding::{round_weights, RoundedWeights};
pub use tuning::{calibrated_config, default_config, EstimatorConfig, ProblemSize};
pub use weights::{compute_weight, SolverControls, WeightSolution};
