//! Pointwise losses and the plain generalization-error estimate that every
//! importance quantity differences against.

use alloc::format;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{checked_predict, Predictor};

/// Pointwise loss `L(prediction, truth)`.
///
/// All three losses satisfy `L(y, y) = 0`. `ZeroOne` requires the truth to be
/// 0 or 1 and thresholds the prediction at 0.5, with the tie (prediction
/// exactly 0.5) rounding to class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LossFn {
    Squared,
    Absolute,
    ZeroOne,
}

impl LossFn {
    pub fn name(&self) -> &'static str {
        match self {
            LossFn::Squared => "squared",
            LossFn::Absolute => "absolute",
            LossFn::ZeroOne => "zero_one",
        }
    }

    pub fn pointwise(&self, pred: f64, truth: f64) -> Result<f64> {
        if !pred.is_finite() || !truth.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss inputs must be finite (prediction {pred}, truth {truth})"
            )));
        }
        match self {
            LossFn::Squared => Ok((pred - truth) * (pred - truth)),
            LossFn::Absolute => Ok((pred - truth).abs()),
            LossFn::ZeroOne => {
                if truth != 0.0 && truth != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "zero-one loss needs a 0/1 truth, got {truth}"
                    )));
                }
                let class = (pred >= 0.5) as u32 as f64;
                Ok((class != truth) as u32 as f64)
            }
        }
    }
}

/// Mean loss of the model over the dataset (one batched prediction call).
pub fn empirical_ge(model: &dyn Predictor, d: &Dataset, loss: LossFn) -> Result<f64> {
    let preds = checked_predict(model, &d.row_matrix())?;
    let mut total = 0.0;
    for (pred, &truth) in preds.iter().zip(d.target()) {
        total += loss.pointwise(*pred, truth)?;
    }
    Ok(total / d.n() as f64)
}
