//! The fitted model behind a uniform batch-prediction interface.
//!
//! Built-in learners (ordinary least squares with optional interactions, a
//! CART random forest, k-nearest neighbours) cover the simulation studies;
//! anything else can implement [`Predictor`] — the `bbfi` crate adds an
//! external-process predictor speaking a line protocol.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::RowMatrix;
use crate::error::{Error, Result};

mod knn;
mod linear;
mod tree;

pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_linear, LinearModel, Term};
pub use tree::{
    fit_forest, fit_single_tree, tree_seed, ForestModel, ForestParams, Node, SplitTest, Tree,
};

/// Uniform prediction interface: pure, batch, finite outputs.
pub trait Predictor: Send + Sync {
    /// Predicts one number per row of `rows`.
    fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>>;

    /// Kind tag (matches the model-file `kind` field for built-ins).
    fn kind(&self) -> &'static str;

    /// Human-readable descriptor: kind plus hyperparameters.
    fn describe(&self) -> String;
}

/// Predicts and enforces the interface invariants (length, finiteness).
///
/// Every estimator in this crate calls predictors through this wrapper, so a
/// misbehaving backend fails loudly instead of corrupting importance values.
pub fn checked_predict(model: &dyn Predictor, rows: &RowMatrix) -> Result<Vec<f64>> {
    let preds = model.predict(rows)?;
    if preds.len() != rows.n_rows() {
        return Err(Error::Predictor(format!(
            "{} returned {} predictions for {} rows",
            model.kind(),
            preds.len(),
            rows.n_rows()
        )));
    }
    if let Some(pos) = preds.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "{} prediction at row {pos} is not finite",
            model.kind()
        )));
    }
    Ok(preds)
}

/// A model predicting the same constant everywhere; handy as a baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantModel {
    pub value: f64,
}

impl Predictor for ConstantModel {
    fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        Ok(alloc::vec![self.value; rows.n_rows()])
    }

    fn kind(&self) -> &'static str {
        "constant"
    }

    fn describe(&self) -> String {
        format!("constant(value={})", self.value)
    }
}
