//! Permutation feature importance and its disaggregation.
//!
//! The atom of this module is the ΔL matrix: for a feature set `S`, a grid of
//! replacement value tuples, and a loss, cell `(k, i)` holds the loss change
//! of observation `i` when its `S`-columns are overwritten with grid point
//! `k`. ICI curves are its columns, the PI curve is its grid-pointwise mean,
//! local importances are its column means, and the global PFI is its grand
//! mean — all aggregations of the same numbers.
//!
//! Global PFI itself is offered through three estimators of the replaced-set
//! generalization error: the full double-sum V-statistic, the unbiased
//! U-statistic that skips the diagonal, and a Monte-Carlo approximation that
//! averages over `m` seeded permutations of the observation indices.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::curve::Curve;
use crate::data::{Dataset, FeatureKind, FeatureSet, Value};
use crate::error::{Error, Result};
use crate::loss::{empirical_ge, LossFn};
use crate::models::{checked_predict, Predictor};
use crate::rng::SplitMix64;

/// Baseline errors at or below this floor make ratio-mode PFI undefined.
pub const RATIO_BASELINE_FLOOR: f64 = 1e-12;

/// Matrices larger than this many cells keep only streaming aggregates.
pub const DEFAULT_CELL_CAP: usize = 100_000_000;

/// How replacement grid points are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Every observed `S`-tuple, in row order (grid index == row index).
    AllObserved,
    /// `m` observed rows sampled without replacement.
    Sample { m: usize, seed: u64 },
    /// Caller-supplied tuples, one value per feature in `S` (sorted order).
    Explicit(Vec<Vec<Value>>),
}

impl GridSpec {
    /// All observed values up to 500 rows, then a 100-point sample: the full
    /// grid costs O(n^2) predictions.
    pub fn default_for(n: usize, seed: u64) -> GridSpec {
        if n <= 500 {
            GridSpec::AllObserved
        } else {
            GridSpec::Sample { m: 100, seed }
        }
    }
}

/// One replacement tuple; `source_row` is set when drawn from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub values: Vec<Value>,
    pub source_row: Option<usize>,
}

/// A resolved, non-empty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<GridPoint>,
}

impl Grid {
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Plot coordinate of each grid point (first feature of `S`).
    pub fn plot_coords(&self) -> Vec<f64> {
        self.points.iter().map(|g| g.values[0].plot_coord()).collect()
    }
}

/// Resolves a grid specification against a dataset and feature set.
///
/// Joint tuples for `|S| > 1` always come from whole source rows, preserving
/// the dependence between the features of `S`; there is no cross-product of
/// marginal values.
pub fn resolve_grid(spec: &GridSpec, d: &Dataset, s: &FeatureSet) -> Result<Grid> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("feature set must be non-empty".into()));
    }
    s.validate(d.p())?;
    let from_row = |k: usize| GridPoint {
        values: s.indices().iter().map(|&j| d.value(k, j)).collect(),
        source_row: Some(k),
    };
    let points = match spec {
        GridSpec::AllObserved => (0..d.n()).map(from_row).collect(),
        GridSpec::Sample { m, seed } => {
            if *m < 1 || *m > d.n() {
                return Err(Error::InvalidArgument(format!(
                    "sample size {m} must lie in 1..={}",
                    d.n()
                )));
            }
            let idx = SplitMix64::new(*seed).sample_without_replacement(d.n(), *m);
            idx.into_iter().map(from_row).collect()
        }
        GridSpec::Explicit(tuples) => {
            if tuples.is_empty() {
                return Err(Error::InvalidArgument("explicit grid is empty".into()));
            }
            for tuple in tuples {
                if tuple.len() != s.len() {
                    return Err(Error::InvalidArgument(format!(
                        "grid tuple has {} values for {} features",
                        tuple.len(),
                        s.len()
                    )));
                }
                for (&j, &v) in s.indices().iter().zip(tuple) {
                    check_grid_value(v, d, j)?;
                }
            }
            tuples
                .iter()
                .map(|t| GridPoint { values: t.clone(), source_row: None })
                .collect()
        }
    };
    Ok(Grid { points })
}

fn check_grid_value(v: Value, d: &Dataset, j: usize) -> Result<()> {
    match (v, d.kind(j)) {
        (Value::Num(x), FeatureKind::Numeric) if x.is_finite() => Ok(()),
        (Value::Num(_), FeatureKind::Numeric) => {
            Err(Error::NonFinite(format!("grid value for feature {j} is not finite")))
        }
        (Value::Cat(c), FeatureKind::Categorical { levels }) => {
            if (c as usize) < levels.len() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "grid level index {c} outside the {} levels of feature {j}",
                    levels.len()
                )))
            }
        }
        _ => Err(Error::InvalidArgument(format!(
            "grid value kind does not match feature {j}"
        ))),
    }
}

/// The ΔL matrix plus its streaming aggregates.
///
/// When `grid` is all observed rows, cell `(i, i)` is exactly zero: the
/// reconstructed row is bit-identical to the original and predictors are
/// pure.
#[derive(Debug, Clone)]
pub struct ImportanceMatrix {
    pub feature_set: FeatureSet,
    pub loss: LossFn,
    pub grid: Grid,
    /// Per-observation baseline loss `L(f(x_i), y_i)`.
    pub baseline: Vec<f64>,
    cells: Option<Vec<f64>>, // row-major: cells[k * n + i]
    pi_sums: Vec<f64>,       // per grid point: sum over observations
    local_sums: Vec<f64>,    // per observation: sum over grid points
    n: usize,
}

impl ImportanceMatrix {
    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn n_grid(&self) -> usize {
        self.grid.len()
    }

    /// ΔL of observation `i` at grid point `k`; `None` when the matrix was
    /// too large to materialize.
    pub fn cell(&self, k: usize, i: usize) -> Option<f64> {
        self.cells.as_ref().map(|c| c[k * self.n + i])
    }

    pub fn has_cells(&self) -> bool {
        self.cells.is_some()
    }
}

/// Computes the ΔL matrix with the default memory cap.
///
/// Costs `n_grid + 1` batched prediction calls (one for the baseline).
pub fn delta_loss_matrix(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    grid: &GridSpec,
    loss: LossFn,
) -> Result<ImportanceMatrix> {
    delta_loss_matrix_capped(model, d, s, grid, loss, DEFAULT_CELL_CAP)
}

/// [`delta_loss_matrix`] with an explicit cell cap; beyond the cap only the
/// streaming aggregates (PI ordinates, local importances, PFI) are kept.
pub fn delta_loss_matrix_capped(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    grid: &GridSpec,
    loss: LossFn,
    cell_cap: usize,
) -> Result<ImportanceMatrix> {
    let grid = resolve_grid(grid, d, s)?;
    let n = d.n();

    let baseline_preds = checked_predict(model, &d.row_matrix())?;
    let mut baseline = Vec::with_capacity(n);
    for (i, &pred) in baseline_preds.iter().enumerate() {
        baseline.push(loss.pointwise(pred, d.target()[i])?);
    }

    let keep_cells = grid.len().saturating_mul(n) <= cell_cap;
    let mut cells = if keep_cells { Some(Vec::with_capacity(grid.len() * n)) } else { None };
    let mut pi_sums = Vec::with_capacity(grid.len());
    let mut local_sums = vec![0.0f64; n];

    for point in grid.points() {
        let rows = d.rows_with_replaced(s, &point.values);
        let preds = checked_predict(model, &rows)?;
        let mut grid_sum = 0.0;
        for i in 0..n {
            let delta = loss.pointwise(preds[i], d.target()[i])? - baseline[i];
            grid_sum += delta;
            local_sums[i] += delta;
            if let Some(c) = cells.as_mut() {
                c.push(delta);
            }
        }
        pi_sums.push(grid_sum);
    }

    Ok(ImportanceMatrix {
        feature_set: s.clone(),
        loss,
        grid,
        baseline,
        cells,
        pi_sums,
        local_sums,
        n,
    })
}

/// Which estimator evaluates the replaced-set generalization error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// Grand mean over all `n^2` (observation, replacement) pairs.
    VStatistic,
    /// Unbiased variant skipping the `n` diagonal pairs.
    UStatistic,
    /// Mean over `m` seeded random permutations of the observation indices,
    /// drawn with replacement and materialized up-front.
    Approx { m: usize, seed: u64 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::VStatistic => "v_statistic",
            EstimatorKind::UStatistic => "u_statistic",
            EstimatorKind::Approx { .. } => "approx",
        }
    }
}

/// Generalization error with the features in `s` replaced by an independent
/// copy of themselves. An empty `s` replaces nothing and equals the plain
/// empirical error.
pub fn ge_replaced(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    loss: LossFn,
    estimator: EstimatorKind,
) -> Result<f64> {
    s.validate(d.p())?;
    if s.is_empty() {
        return empirical_ge(model, d, loss);
    }
    let n = d.n();
    match estimator {
        EstimatorKind::VStatistic => {
            let mut total = 0.0;
            for k in 0..n {
                let preds = predict_replaced_from_row(model, d, s, k)?;
                for i in 0..n {
                    total += loss.pointwise(preds[i], d.target()[i])?;
                }
            }
            Ok(total / (n * n) as f64)
        }
        EstimatorKind::UStatistic => {
            if n < 2 {
                return Err(Error::InvalidArgument(
                    "the U-statistic needs at least two observations".into(),
                ));
            }
            let mut acc = vec![0.0f64; n];
            for k in 0..n {
                let preds = predict_replaced_from_row(model, d, s, k)?;
                for i in 0..n {
                    if i != k {
                        acc[i] += loss.pointwise(preds[i], d.target()[i])?;
                    }
                }
            }
            Ok(acc.iter().map(|a| a / (n - 1) as f64).sum::<f64>() / n as f64)
        }
        EstimatorKind::Approx { m, seed } => {
            if m < 1 {
                return Err(Error::InvalidArgument("approx needs m >= 1 permutations".into()));
            }
            // All permutations are drawn before any evaluation, so the result
            // cannot depend on evaluation order.
            let mut rng = SplitMix64::new(seed);
            let taus: Vec<Vec<usize>> = (0..m).map(|_| rng.permutation(n)).collect();
            let mut total = 0.0;
            for tau in &taus {
                let mut rows = d.row_matrix();
                for i in 0..n {
                    let row = rows.row_mut(i);
                    for &j in s.indices() {
                        row[j] = d.value(tau[i], j);
                    }
                }
                let preds = checked_predict(model, &rows)?;
                for i in 0..n {
                    total += loss.pointwise(preds[i], d.target()[i])?;
                }
            }
            Ok(total / (n * m) as f64)
        }
    }
}

fn predict_replaced_from_row(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    k: usize,
) -> Result<Vec<f64>> {
    let replacement: Vec<Value> = s.indices().iter().map(|&j| d.value(k, j)).collect();
    checked_predict(model, &d.rows_with_replaced(s, &replacement))
}

/// Difference or ratio form of the global PFI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfiMode {
    Difference,
    Ratio,
}

impl PfiMode {
    pub fn name(&self) -> &'static str {
        match self {
            PfiMode::Difference => "difference",
            PfiMode::Ratio => "ratio",
        }
    }
}

/// A global PFI value together with both error estimates it was formed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceResult {
    pub feature_set: FeatureSet,
    pub mode: PfiMode,
    pub estimator: EstimatorKind,
    pub value: f64,
    pub baseline_ge: f64,
    pub replaced_ge: f64,
}

/// Global permutation feature importance of the features in `s`.
///
/// Ratio mode fails loudly on a numerically zero baseline error rather than
/// clamping; a near-perfect model has no meaningful relative importance.
pub fn pfi(
    model: &dyn Predictor,
    d: &Dataset,
    s: &FeatureSet,
    loss: LossFn,
    mode: PfiMode,
    estimator: EstimatorKind,
) -> Result<ImportanceResult> {
    let baseline_ge = empirical_ge(model, d, loss)?;
    let replaced_ge = ge_replaced(model, d, s, loss, estimator)?;
    let value = match mode {
        PfiMode::Difference => replaced_ge - baseline_ge,
        PfiMode::Ratio => {
            if baseline_ge <= RATIO_BASELINE_FLOOR {
                return Err(Error::DegenerateBaseline { baseline: baseline_ge });
            }
            replaced_ge / baseline_ge
        }
    };
    Ok(ImportanceResult { feature_set: s.clone(), mode, estimator, value, baseline_ge, replaced_ge })
}

/// Grid-sampled difference-PFI estimate: the grand mean of the ΔL matrix.
///
/// With the all-observed grid this equals the V-statistic PFI up to float
/// association; with a sampled grid it realizes the direct sub-sampling of
/// the replacement values.
pub fn pfi_from_matrix(m: &ImportanceMatrix) -> f64 {
    m.local_sums.iter().sum::<f64>() / (m.n_obs() * m.n_grid()) as f64
}

/// One ICI curve per observation: the loss change of that observation as the
/// replacement value moves over the grid. `omit_own_point` drops the grid
/// point sourced from the observation itself (the structurally zero cell of
/// the all-observed grid).
pub fn ici_curves(m: &ImportanceMatrix, omit_own_point: bool) -> Result<Vec<Curve>> {
    let cells = m.cells.as_ref().ok_or_else(|| {
        Error::InvalidArgument("matrix cells were not materialized (cell cap exceeded)".into())
    })?;
    let coords = m.grid.plot_coords();
    let mut curves = Vec::with_capacity(m.n);
    for i in 0..m.n {
        let mut abscissa = Vec::with_capacity(m.n_grid());
        let mut ordinates = Vec::with_capacity(m.n_grid());
        for (k, point) in m.grid.points().iter().enumerate() {
            if omit_own_point && point.source_row == Some(i) {
                continue;
            }
            abscissa.push(coords[k]);
            ordinates.push(cells[k * m.n + i]);
        }
        curves.push(Curve::new(format!("ici i={i}"), abscissa, ordinates)?);
    }
    Ok(curves)
}

/// The partial importance curve: pointwise mean of all ICI curves.
pub fn pi_curve(m: &ImportanceMatrix) -> Curve {
    let ordinates: Vec<f64> = m.pi_sums.iter().map(|s| s / m.n as f64).collect();
    // Grid is non-empty by construction, so this cannot fail.
    Curve::new("pi".into(), m.grid.plot_coords(), ordinates).expect("non-empty grid")
}

/// PI curve over a row subset: pointwise mean of the subset's ICI curves,
/// keeping the full grid.
pub fn conditional_pi_curve(m: &ImportanceMatrix, mask: &[bool], label: String) -> Result<Curve> {
    let cells = m.cells.as_ref().ok_or_else(|| {
        Error::InvalidArgument("matrix cells were not materialized (cell cap exceeded)".into())
    })?;
    check_mask(mask, m.n)?;
    let count = mask.iter().filter(|&&b| b).count();
    let ordinates: Vec<f64> = (0..m.n_grid())
        .map(|k| {
            let mut sum = 0.0;
            for i in 0..m.n {
                if mask[i] {
                    sum += cells[k * m.n + i];
                }
            }
            sum / count as f64
        })
        .collect();
    Curve::new(label, m.grid.plot_coords(), ordinates)
}

/// Local feature importance of observation `i`: the grid-mean of its ICI
/// curve, i.e. observation `i`'s contribution to the global PFI.
pub fn local_importance(m: &ImportanceMatrix, i: usize) -> Result<f64> {
    if i >= m.n {
        return Err(Error::InvalidArgument(format!(
            "observation {i} out of range for n={}",
            m.n
        )));
    }
    Ok(m.local_sums[i] / m.n_grid() as f64)
}

/// Conditional PFI: mean local importance per labelled row group. The grid is
/// kept as-is; restrict the dataset (and the grid with it) before building
/// the matrix for the re-computation reading instead.
pub fn conditional_pfi(
    m: &ImportanceMatrix,
    groups: &[(String, Vec<bool>)],
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::with_capacity(groups.len());
    for (label, mask) in groups {
        check_mask(mask, m.n)?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..m.n {
            if mask[i] {
                sum += m.local_sums[i] / m.n_grid() as f64;
                count += 1;
            }
        }
        out.push((label.clone(), sum / count as f64));
    }
    Ok(out)
}

fn check_mask(mask: &[bool], n: usize) -> Result<()> {
    if mask.len() != n {
        return Err(Error::InvalidArgument(format!(
            "mask length {} does not match n={n}",
            mask.len()
        )));
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::InvalidArgument("empty group".into()));
    }
    Ok(())
}
