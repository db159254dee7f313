//! Error type shared by every estimator in the crate.

use alloc::string::String;
use core::fmt;

/// Failure modes of dataset handling, model fitting, and estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dataset invariant was violated (construction, indexing, masks).
    InvalidData(String),
    /// An operation received an out-of-domain argument.
    InvalidArgument(String),
    /// A prediction, loss, or input value was NaN or infinite.
    NonFinite(String),
    /// Ratio-mode PFI with a baseline error at or below the stability floor.
    DegenerateBaseline { baseline: f64 },
    /// The OLS design matrix is rank deficient; `term` names the collinear column.
    RankDeficient { term: String },
    /// Shapley proportions requested but the values sum to numerically zero.
    NothingToExplain,
    /// A prediction backend failed (external process, protocol violation).
    Predictor(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::DegenerateBaseline { baseline } => write!(
                f,
                "degenerate baseline: baseline generalization error {baseline:e} is too close to zero for ratio mode"
            ),
            Error::RankDeficient { term } => {
                write!(f, "rank-deficient design matrix: term '{term}' is collinear")
            }
            Error::NothingToExplain => {
                write!(f, "nothing to explain: Shapley values sum to zero")
            }
            Error::Predictor(msg) => write!(f, "predictor failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
