//! Truncated Fock-space simulation of nonlinear quantum amplifiers.
//!
//! The crate builds amplifier unitaries that transduce a normal signal
//! operator `f` onto a meter mode, predicts and simulates their input-output
//! moments, synthesizes the effective POVMs induced on the signal by noisy
//! heterodyne or homodyne detection of the meter, and runs seeded Monte Carlo
//! estimators on top of the sampled outcomes.
//!
//! Layers, bottom up:
//!
//! - [`fock`]: operators, states, tensor products, spectral tools.
//! - [`amplifiers`]: unitaries and analytic moment predictions.
//! - [`measurement`]: detector elements, effective POVMs, decision regions, sampling.
//! - [`estimators`]: trial plans and statistical reports.
//! - [`cli`]: JSON-configured commands behind the `nlamp` binary.

pub mod error;
pub mod amplifiers;
pub mod fock;
pub mod measurement;
pub mod estimators;
pub mod cli;
pub mod table;

pub use error::{Error, Result};
