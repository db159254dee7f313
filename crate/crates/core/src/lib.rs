//! Model-agnostic feature importance estimators for black-box regression models.
//!
//! Everything in this crate is pure computation over in-memory tabular data:
//! datasets, built-in learners behind a uniform [`models::Predictor`] trait,
//! pointwise losses, the permutation-feature-importance family (global PFI,
//! per-observation ICI curves, partial-importance curves, conditional PFI),
//! partial-dependence / ICE curves, and Shapley attribution of model
//! performance to individual features.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line live in the companion `bbfi` crate. All randomized procedures draw
//! from the seeded generator in [`rng`], so results are bit-reproducible
//! across runs, platforms, and worker counts.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod curve;
pub mod data;
pub mod effects;
pub mod error;
pub mod importance;
pub mod loss;
pub mod models;
pub mod rng;
pub mod shapley;
pub mod sim;

#[cfg(test)]
pub(crate) mod testutil;

pub use curve::Curve;
pub use data::{Dataset, FeatureKind, FeatureSet, RowMatrix, Value};
pub use error::{Error, Result};
pub use loss::LossFn;
pub use models::Predictor;
