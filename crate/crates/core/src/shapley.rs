//! Shapley feature importance: fair attribution of the total explainable
//! model performance to individual features.
//!
//! The coalition game values a feature subset `S` by how much keeping only
//! the features in `S` (marginalizing over the rest) improves on ignoring
//! every feature; the value is negative for useful coalitions because errors
//! shrink. Exact Shapley values enumerate all `2^p` coalitions with
//! combinatorial weights; the sampling approximation draws feature
//! permutations and, per draw, estimates both generalization errors with a
//! shared observation permutation so the difference has low variance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::loss::{empirical_ge, LossFn};
use crate::models::{checked_predict, Predictor};
use crate::rng::{derive_seed, SplitMix64};

const PI_TAG: u64 = 0x5348_5049;
const TAU_TAG: u64 = 0x5348_5441;
const COAL_TAG: u64 = 0x5348_4745;

/// Exact Shapley enumeration is limited to this many features.
pub const MAX_EXACT_P: usize = 12;

/// Shapley proportions are undefined below this total magnitude.
pub const EXPLAIN_FLOOR: f64 = 1e-12;

/// How the characteristic cache evaluates a coalition's generalization error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharEstimator {
    /// Full V-statistic; deterministic, no sampling.
    Exact,
    /// Mean over `m_obs` observation permutations, with the permutation
    /// stream keyed by (coalition, iteration) so cache hits replay exactly.
    Sampled { m_obs: usize },
}

/// Memoized coalition-value map `v : 2^P -> R`.
///
/// `v(S) = GE_S - GE_∅`, where `GE_S` keeps the features in `S` from each
/// observation and marginalizes over the complement; `v(∅) = 0` by
/// construction. Values are cached per coalition and never recomputed with
/// fresh randomness.
pub struct CharacteristicCache<'a> {
    model: &'a dyn Predictor,
    data: &'a Dataset,
    loss: LossFn,
    estimator: CharEstimator,
    seed: u64,
    ge: BTreeMap<u64, f64>,
}

impl<'a> CharacteristicCache<'a> {
    pub fn new(
        model: &'a dyn Predictor,
        data: &'a Dataset,
        loss: LossFn,
        estimator: CharEstimator,
        seed: u64,
    ) -> Result<Self> {
        if data.p() > 63 {
            return Err(Error::InvalidArgument(
                "coalition bitmasks support at most 63 features".into(),
            ));
        }
        if let CharEstimator::Sampled { m_obs } = estimator {
            if m_obs < 1 {
                return Err(Error::InvalidArgument("m_obs must be at least 1".into()));
            }
        }
        Ok(Self { model, data, loss, estimator, seed, ge: BTreeMap::new() })
    }

    /// Generalization error when only the features in `kept` are used
    /// (memoized by coalition).
    pub fn ge_kept(&mut self, kept: &FeatureSet) -> Result<f64> {
        let bits = kept.bits();
        if let Some(&v) = self.ge.get(&bits) {
            return Ok(v);
        }
        let value = match self.estimator {
            CharEstimator::Exact => {
                let replaced = kept.complement(self.data.p());
                crate::importance::ge_replaced(
                    self.model,
                    self.data,
                    &replaced,
                    self.loss,
                    crate::importance::EstimatorKind::VStatistic,
                )?
            }
            CharEstimator::Sampled { m_obs } => {
                if kept.len() == self.data.p() {
                    empirical_ge(self.model, self.data, self.loss)?
                } else {
                    let n = self.data.n();
                    let mut total = 0.0;
                    for l in 0..m_obs {
                        let tau = SplitMix64::new(derive_seed(
                            self.seed,
                            &[COAL_TAG, bits, l as u64],
                        ))
                        .permutation(n);
                        total += ge_kept_perm(self.model, self.data, kept, &tau, self.loss)?;
                    }
                    total / m_obs as f64
                }
            }
        };
        self.ge.insert(bits, value);
        Ok(value)
    }

    /// Characteristic value `v(S)`; zero for the empty coalition.
    pub fn characteristic(&mut self, s: &FeatureSet) -> Result<f64> {
        if s.is_empty() {
            return Ok(0.0);
        }
        s.validate(self.data.p())?;
        let ge_s = self.ge_kept(s)?;
        let ge_empty = self.ge_kept(&FeatureSet::empty())?;
        Ok(ge_s - ge_empty)
    }

    /// Marginal contribution `Δ_j(S) = v(S ∪ {j}) - v(S)`; `j` must not
    /// already belong to `S`.
    pub fn marginal_contribution(&mut self, j: usize, s: &FeatureSet) -> Result<f64> {
        if s.contains(j) {
            return Err(Error::InvalidArgument(format!(
                "feature {j} is already in the coalition"
            )));
        }
        FeatureSet::new(vec![j]).validate(self.data.p())?;
        let with = self.ge_kept(&s.with(j))?;
        let without = self.ge_kept(s)?;
        Ok(with - without)
    }
}

/// One-permutation estimate of the kept-set generalization error: features in
/// `kept` (and the target) stay with their observation, the complement is
/// taken from the permuted row.
pub(crate) fn ge_kept_perm(
    model: &dyn Predictor,
    d: &Dataset,
    kept: &FeatureSet,
    tau: &[usize],
    loss: LossFn,
) -> Result<f64> {
    let replaced = kept.complement(d.p());
    let mut rows = d.row_matrix();
    for i in 0..d.n() {
        let row = rows.row_mut(i);
        for &j in replaced.indices() {
            row[j] = d.value(tau[i], j);
        }
    }
    let preds = checked_predict(model, &rows)?;
    let mut total = 0.0;
    for i in 0..d.n() {
        total += loss.pointwise(preds[i], d.target()[i])?;
    }
    Ok(total / d.n() as f64)
}

/// Exact Shapley values of an arbitrary game given by coalition bitmask.
///
/// `phi_j = Σ_{S ⊆ P\{j}} |S|! (p-|S|-1)! / p! * (v(S∪{j}) - v(S))`.
pub fn exact_shapley_from_game<F>(p: usize, mut game: F) -> Result<Vec<f64>>
where
    F: FnMut(u64) -> Result<f64>,
{
    if p > MAX_EXACT_P {
        return Err(Error::InvalidArgument(format!(
            "exact Shapley enumerates 2^p coalitions; p={p} exceeds {MAX_EXACT_P}, use the sampling approximation"
        )));
    }
    let size = 1usize << p;
    let mut values = Vec::with_capacity(size);
    for mask in 0..size {
        values.push(game(mask as u64)?);
    }
    let fact = factorials(p);
    let mut phi = vec![0.0f64; p];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1u64 << j;
        for mask in 0..size as u64 {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = fact[s] * fact[p - s - 1] / fact[p];
            *phi_j += weight * (values[(mask | bit) as usize] - values[mask as usize]);
        }
    }
    Ok(phi)
}

/// Shapley values of an arbitrary deterministic game estimated by feature
/// permutation sampling (the outer loop of the approximation algorithm, with
/// game lookups instead of error estimation). Game values are memoized.
pub fn approx_shapley_from_game<F>(
    p: usize,
    mut game: F,
    m_feat: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: FnMut(u64) -> Result<f64>,
{
    if m_feat < 1 {
        return Err(Error::InvalidArgument("m_feat must be at least 1".into()));
    }
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut value = |mask: u64, game: &mut F| -> Result<f64> {
        if let Some(&v) = cache.get(&mask) {
            return Ok(v);
        }
        let v = game(mask)?;
        cache.insert(mask, v);
        Ok(v)
    };
    let mut phi = vec![0.0f64; p];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let mut sum = 0.0;
        for k in 0..m_feat {
            let pi = SplitMix64::new(derive_seed(seed, &[PI_TAG, j as u64, k as u64]))
                .permutation(p);
            let mask = mask_before(&pi, j);
            sum += value(mask | (1 << j), &mut game)? - value(mask, &mut game)?;
        }
        *phi_j = sum / m_feat as f64;
    }
    Ok(phi)
}

/// Bitmask of the features appearing before `j` in the permutation `pi`.
fn mask_before(pi: &[usize], j: usize) -> u64 {
    let mut mask = 0u64;
    for &f in pi {
        if f == j {
            break;
        }
        mask |= 1 << f;
    }
    mask
}

fn factorials(p: usize) -> Vec<f64> {
    let mut fact = Vec::with_capacity(p + 1);
    fact.push(1.0);
    for i in 1..=p {
        fact.push(fact[i - 1] * i as f64);
    }
    fact
}

/// Configuration for the Shapley feature importance estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapleyConfig {
    /// Feature-permutation draws of the sampling approximation.
    pub m_feat: usize,
    /// Observation-permutation draws per error evaluation.
    pub m_obs: usize,
    pub seed: u64,
    pub mode: ShapleyMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMode {
    Exact,
    Approx,
}

impl ShapleyConfig {
    /// Deterministic exact enumeration (the V-statistic backs every
    /// coalition value; `m_feat`/`m_obs` are unused).
    pub fn exact(seed: u64) -> Self {
        Self { m_feat: 1, m_obs: 1, seed, mode: ShapleyMode::Exact }
    }

    /// Sampling approximation defaults: 100 feature permutations, 5
    /// observation permutations per evaluation.
    pub fn approx(seed: u64) -> Self {
        Self { m_feat: 100, m_obs: 5, seed, mode: ShapleyMode::Approx }
    }
}

/// Per-feature Shapley values plus the exactly computed total `v(P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyResult {
    pub phi: Vec<f64>,
    /// Standard error of each `phi` over the sampling iterations (zero in
    /// exact mode).
    pub std_err: Vec<f64>,
    /// `v(P)`, always evaluated with the deterministic V-statistic.
    pub total: f64,
    pub config: ShapleyConfig,
}

/// Proportion of explained importance per feature: `phi_j / Σ phi`.
pub fn explained_proportion(r: &ShapleyResult) -> Result<Vec<f64>> {
    let sum: f64 = r.phi.iter().sum();
    if sum.abs() <= EXPLAIN_FLOOR {
        return Err(Error::NothingToExplain);
    }
    Ok(r.phi.iter().map(|p| p / sum).collect())
}

/// Dispatches on `cfg.mode`.
pub fn shapley(
    model: &dyn Predictor,
    d: &Dataset,
    loss: LossFn,
    cfg: ShapleyConfig,
) -> Result<ShapleyResult> {
    match cfg.mode {
        ShapleyMode::Exact => shapley_exact(model, d, loss, cfg),
        ShapleyMode::Approx => shapley_approx(model, d, loss, cfg),
    }
}

/// Exact Shapley values of the performance game (`p <= 12`).
///
/// Every coalition value is computed once with the full V-statistic, so the
/// result is fully deterministic and serves as a noise-free oracle for the
/// sampling approximation.
pub fn shapley_exact(
    model: &dyn Predictor,
    d: &Dataset,
    loss: LossFn,
    cfg: ShapleyConfig,
) -> Result<ShapleyResult> {
    let p = d.p();
    if p > MAX_EXACT_P {
        return Err(Error::InvalidArgument(format!(
            "p={p} exceeds the exact limit of {MAX_EXACT_P}; use approx mode"
        )));
    }
    let mut cache = CharacteristicCache::new(model, d, loss, CharEstimator::Exact, cfg.seed)?;
    let phi = exact_shapley_from_game(p, |mask| {
        cache.characteristic(&FeatureSet::from_bits(mask, p))
    })?;
    let total = cache.characteristic(&FeatureSet::full(p))?;
    Ok(ShapleyResult { std_err: vec![0.0; p], phi, total, config: cfg })
}

/// Sampling approximation of the Shapley feature importance.
///
/// For each feature `j` and iteration `k`: draw a feature permutation (with
/// replacement across iterations), set `S` to the features before `j`, and
/// estimate `GE_S` and `GE_{S∪{j}}` with `m_obs` shared observation
/// permutations; the shared draws cancel most of the evaluation noise in the
/// difference. All randomness is derived from `(seed, feature, iteration)`,
/// so any evaluation order gives identical results.
pub fn shapley_approx(
    model: &dyn Predictor,
    d: &Dataset,
    loss: LossFn,
    cfg: ShapleyConfig,
) -> Result<ShapleyResult> {
    if cfg.m_feat < 1 || cfg.m_obs < 1 {
        return Err(Error::InvalidArgument("m_feat and m_obs must be at least 1".into()));
    }
    let p = d.p();
    if p > 63 {
        return Err(Error::InvalidArgument(
            "coalition bitmasks support at most 63 features".into(),
        ));
    }
    let n = d.n();
    let mut phi = Vec::with_capacity(p);
    let mut std_err = Vec::with_capacity(p);
    for j in 0..p {
        let mut deltas = Vec::with_capacity(cfg.m_feat);
        for k in 0..cfg.m_feat {
            let pi = SplitMix64::new(derive_seed(cfg.seed, &[PI_TAG, j as u64, k as u64]))
                .permutation(p);
            let s = FeatureSet::from_bits(mask_before(&pi, j), p);
            let s_with_j = s.with(j);
            let mut ge_s = 0.0;
            let mut ge_sj = 0.0;
            for l in 0..cfg.m_obs {
                let tau = SplitMix64::new(derive_seed(
                    cfg.seed,
                    &[TAU_TAG, j as u64, k as u64, l as u64],
                ))
                .permutation(n);
                ge_s += ge_kept_perm(model, d, &s, &tau, loss)?;
                ge_sj += ge_kept_perm(model, d, &s_with_j, &tau, loss)?;
            }
            deltas.push((ge_sj - ge_s) / cfg.m_obs as f64);
        }
        let mean = deltas.iter().sum::<f64>() / cfg.m_feat as f64;
        let se = if cfg.m_feat > 1 {
            let var = deltas.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (cfg.m_feat - 1) as f64;
            libm::sqrt(var / cfg.m_feat as f64)
        } else {
            0.0
        };
        phi.push(mean);
        std_err.push(se);
    }
    // v(P) = GE_P - GE_∅, both deterministic.
    let ge_p = empirical_ge(model, d, loss)?;
    let ge_empty = crate::importance::ge_replaced(
        model,
        d,
        &FeatureSet::full(p),
        loss,
        crate::importance::EstimatorKind::VStatistic,
    )?;
    let total = ge_p - ge_empty;
    Ok(ShapleyResult { phi, std_err, total, config: cfg })
}
