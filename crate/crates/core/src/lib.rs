//! Generalized bootstrap (GBS) for estimators defined by estimating equations.
//!
//! An estimator `β̂` solves `Σ φ_i(β) = 0`. A GBS replicate `β̂_B` solves the
//! randomly reweighted system `Σ w_i φ_i(β) = 0`, where `w` is drawn from an
//! exchangeable weight law with unit mean. The spread of `β̂_B` around `β̂`,
//! rescaled by the weight standard deviation, estimates the sampling law and
//! variance of `β̂`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! bench and the CLI live in the `gebs` crate.
//!
//! Module map:
//! - [`weights`]: weight laws, exact moments and the weight-condition checker
//! - [`models`]: estimating-equation models and their simulators
//! - [`solver`]: damped Newton root finding for weighted equations
//! - [`engine`]: bootstrap loops, variance and distribution estimates
//! - [`baselines`]: residual and wild bootstrap comparators

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod engine;
mod error;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
