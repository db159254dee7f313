//! Ordered (abscissa, ordinate) pairs shared by PI/ICI and PD/ICE outputs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A labelled curve. The abscissa is sorted ascending (categorical grids use
/// ordinal level positions, so level order is preserved); ties keep their
/// original grid order, which makes the sort permutation identical for every
/// curve built over the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub abscissa: Vec<f64>,
    pub ordinates: Vec<f64>,
}

impl Curve {
    pub fn new(label: String, abscissa: Vec<f64>, ordinates: Vec<f64>) -> Result<Self> {
        if abscissa.len() != ordinates.len() {
            return Err(Error::InvalidArgument(
                "curve abscissa and ordinates differ in length".into(),
            ));
        }
        if abscissa.is_empty() {
            return Err(Error::InvalidArgument("curve needs at least one point".into()));
        }
        let order = sort_order(&abscissa);
        let abscissa = order.iter().map(|&i| abscissa[i]).collect();
        let ordinates = order.iter().map(|&i| ordinates[i]).collect();
        Ok(Self { label, abscissa, ordinates })
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Grid-mean of the ordinates (the Monte-Carlo integral of the curve).
    pub fn mean_ordinate(&self) -> f64 {
        self.ordinates.iter().sum::<f64>() / self.ordinates.len() as f64
    }
}

/// Stable ascending sort permutation of `values`.
pub(crate) fn sort_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}
