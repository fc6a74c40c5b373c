//! Simulation laboratory for double descent under contaminated training data.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkit`] dense matrices, SVD, pseudo-inverse, minimum-norm least squares and
//!   reproducible random streams;
//! * [`datagen`] Gaussian designs, sparse coefficients, SNR-calibrated noise and
//!   Y-/X-contamination of the training rows;
//! * [`losses`] squared, Huber and Tukey biweight losses with their derivatives;
//! * [`estimators`] minimum-norm interpolation, gradient-descent M-estimation,
//!   (sparse) least trimmed squares and clean-subset interpolation;
//! * [`harness`] scenario sweeps over the model dimension with seeded replications
//!   and per-dimension aggregation, plus the breakdown probe.

pub mod datagen;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod losses;
pub mod numkit;

pub use error::{Error, Result};
