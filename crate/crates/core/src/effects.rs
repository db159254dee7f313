//! Feature-effect machinery: partial dependence, ICE curves, the combined
//! PD+PI single pass, and Shapley effects for a single prediction.
//!
//! These operate on predictions rather than losses, so they need no target
//! values; they share the grid and replacement machinery with the importance
//! module so PD and PI plots align on identical abscissas.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::curve::Curve;
use crate::data::{Dataset, FeatureSet, Value};
use crate::error::{Error, Result};
use crate::importance::{resolve_grid, GridSpec};
use crate::loss::LossFn;
use crate::models::{checked_predict, Predictor};
use crate::rng::{derive_seed, SplitMix64};
use crate::shapley::exact_shapley_from_game;

const EFFECT_TAG: u64 = 0x4546_4643;

/// PD ordinate for one grid point's predictions. With an empty complement the
/// batch holds `n` copies of one row, and the mean is taken as the first
/// prediction so PD of the full feature set is bitwise the model output.
#[inline]
fn pd_ordinate(preds: &[f64], full_replacement: bool) -> f64 {
    if full_replacement {
        preds[0]
    } else {
        preds.iter().sum::<f64>() / preds.len() as f64
    }
}

/// Partial dependence of the features in `s`, estimated by averaging
/// predictions over the observed complement rows.
///
/// An empty `s` yields the single-point curve at the average prediction.
pub fn pd_function(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    grid: &GridSpec,
) -> Result<Curve> {
    if s.is_empty() {
        let preds = checked_predict(model, &d.row_matrix())?;
        let mean = preds.iter().sum::<f64>() / preds.len() as f64;
        return Curve::new("pd".into(), vec![0.0], vec![mean]);
    }
    let grid = resolve_grid(grid, d, s)?;
    let full = s.len() == d.p();
    let mut ordinates = Vec::with_capacity(grid.len());
    for point in grid.points() {
        let preds = checked_predict(model, &d.rows_with_replaced(s, &point.values))?;
        ordinates.push(pd_ordinate(&preds, full));
    }
    Curve::new("pd".into(), grid.plot_coords(), ordinates)
}

/// One ICE curve per observation: its prediction as the replacement value
/// moves over the grid. The pointwise mean of the ICE curves is the PD curve.
pub fn ice_curves(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    grid: &GridSpec,
) -> Result<Vec<Curve>> {
    let grid = resolve_grid(grid, d, s)?;
    let coords = grid.plot_coords();
    let n = d.n();
    let mut per_obs = vec![Vec::with_capacity(grid.len()); n];
    for point in grid.points() {
        let preds = checked_predict(model, &d.rows_with_replaced(s, &point.values))?;
        for i in 0..n {
            per_obs[i].push(preds[i]);
        }
    }
    per_obs
        .into_iter()
        .enumerate()
        .map(|(i, ords)| Curve::new(format!("ice i={i}"), coords.clone(), ords))
        .collect()
}

/// Output of the combined single pass over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Algorithm1Output {
    pub pd: Curve,
    pub pi: Curve,
    pub ice: Vec<Curve>,
    pub ici: Vec<Curve>,
}

/// Computes PD, PI, ICE, and ICI curves in one pass: each grid point costs a
/// single batched prediction that feeds both the prediction-level and the
/// loss-level aggregates. The outputs agree bit-exactly with the separate
/// routines on the same grid.
pub fn algorithm1(
    model: &dyn Predictor,
    d: &Dataset,
    loss: LossFn,
    s: &FeatureSet,
    grid: &GridSpec,
) -> Result<Algorithm1Output> {
    let grid = resolve_grid(grid, d, s)?;
    let coords = grid.plot_coords();
    let n = d.n();
    let full = s.len() == d.p();

    let baseline_preds = checked_predict(model, &d.row_matrix())?;
    let mut baseline = Vec::with_capacity(n);
    for (i, &pred) in baseline_preds.iter().enumerate() {
        baseline.push(loss.pointwise(pred, d.target()[i])?);
    }

    let mut pd_ords = Vec::with_capacity(grid.len());
    let mut pi_ords = Vec::with_capacity(grid.len());
    let mut ice_ords = vec![Vec::with_capacity(grid.len()); n];
    let mut ici_ords = vec![Vec::with_capacity(grid.len()); n];

    for point in grid.points() {
        let preds = checked_predict(model, &d.rows_with_replaced(s, &point.values))?;
        let mut delta_sum = 0.0;
        for i in 0..n {
            let delta = loss.pointwise(preds[i], d.target()[i])? - baseline[i];
            delta_sum += delta;
            ice_ords[i].push(preds[i]);
            ici_ords[i].push(delta);
        }
        pd_ords.push(pd_ordinate(&preds, full));
        pi_ords.push(delta_sum / n as f64);
    }

    let pd = Curve::new("pd".into(), coords.clone(), pd_ords)?;
    let pi = Curve::new("pi".into(), coords.clone(), pi_ords)?;
    let ice = ice_ords
        .into_iter()
        .enumerate()
        .map(|(i, o)| Curve::new(format!("ice i={i}"), coords.clone(), o))
        .collect::<Result<Vec<_>>>()?;
    let ici = ici_ords
        .into_iter()
        .enumerate()
        .map(|(i, o)| Curve::new(format!("ici i={i}"), coords.clone(), o))
        .collect::<Result<Vec<_>>>()?;
    Ok(Algorithm1Output { pd, pi, ice, ici })
}

/// Shapley attribution of one prediction to the features.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectShapley {
    /// The explained observation.
    pub observation: Vec<Value>,
    /// Per-feature effect attributions; in exact mode they sum to
    /// `f(x) - baseline`.
    pub phi: Vec<f64>,
    /// Average prediction over the dataset.
    pub baseline: f64,
}

/// Estimation mode for [`shapley_effect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectMode {
    /// Enumerates all coalitions with combinatorial weights (`p <= 12`).
    Exact,
    /// `m` sampled (permutation, background-row) pairs: walk the permutation,
    /// switching features from the background row to `x` one at a time, and
    /// credit each feature with its prediction change.
    Sampled { m: usize, seed: u64 },
}

/// Shapley feature effects of the single observation `x`: the coalition game
/// values a feature subset by its partial-dependence estimate at `x` minus
/// the average prediction.
pub fn shapley_effect(
    model: &dyn Predictor,
    d: &Dataset,
    x: &[Value],
    mode: EffectMode,
) -> Result<EffectShapley> {
    let p = d.p();
    if x.len() != p {
        return Err(Error::InvalidArgument(format!(
            "observation has {} values for {p} features",
            x.len()
        )));
    }
    let n = d.n();
    let baseline_preds = checked_predict(model, &d.row_matrix())?;
    let baseline = baseline_preds.iter().sum::<f64>() / n as f64;

    let phi = match mode {
        EffectMode::Exact => {
            let size = 1usize << p;
            let mut values = Vec::with_capacity(size);
            for mask in 0..size as u64 {
                if mask == 0 {
                    values.push(0.0);
                    continue;
                }
                let s = FeatureSet::from_bits(mask, p);
                let replacement: Vec<Value> =
                    s.indices().iter().map(|&j| x[j]).collect();
                let preds =
                    checked_predict(model, &d.rows_with_replaced(&s, &replacement))?;
                values.push(preds.iter().sum::<f64>() / n as f64 - baseline);
            }
            exact_shapley_from_game(p, |mask| Ok(values[mask as usize]))?
        }
        EffectMode::Sampled { m, seed } => {
            if m < 1 {
                return Err(Error::InvalidArgument("sampled mode needs m >= 1".into()));
            }
            let mut phi = vec![0.0f64; p];
            for t in 0..m {
                let mut rng = SplitMix64::new(derive_seed(seed, &[EFFECT_TAG, t as u64]));
                let pi = rng.permutation(p);
                let b = rng.below(n as u64) as usize;
                // Rows 0..=p: background row with the first q features of the
                // permutation switched to x.
                let mut rows = crate::data::RowMatrix::with_row_capacity(p, p + 1);
                let mut current: Vec<Value> = d.row(b).to_vec();
                rows.push_row(&current);
                for &j in &pi {
                    current[j] = x[j];
                    rows.push_row(&current);
                }
                let preds = checked_predict(model, &rows)?;
                for (q, &j) in pi.iter().enumerate() {
                    phi[j] += preds[q + 1] - preds[q];
                }
            }
            for v in &mut phi {
                *v /= m as f64;
            }
            phi
        }
    };
    Ok(EffectShapley { observation: x.to_vec(), phi, baseline })
}
