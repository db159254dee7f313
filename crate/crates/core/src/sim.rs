//! Seeded data generators and the two simulation studies, at desk scale.
//!
//! Study 1 trains a random forest on data whose active feature switches with
//! a binary flag, and shows that the global PFI hides what the conditional
//! PFI (grouped by the flag) reveals. Study 2 compares difference-PFI,
//! ratio-PFI, and Shapley importance across four learners on data with a
//! pairwise interaction, where the Shapley measure splits the interaction's
//! importance between the interacting features instead of double-counting it.
//!
//! Everything is deterministic given the master seed; repetitions derive
//! their own streams from `(seed, rep)` so they can run on any number of
//! workers in any order.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::curve::Curve;
use crate::data::{Dataset, FeatureKind, FeatureSet, Value};
use crate::error::{Error, Result};
use crate::importance::{
    conditional_pfi, conditional_pi_curve, delta_loss_matrix, ge_replaced, pfi_from_matrix,
    pi_curve, EstimatorKind, GridSpec, RATIO_BASELINE_FLOOR,
};
use crate::loss::{empirical_ge, LossFn};
use crate::models::{
    fit_forest, fit_knn, fit_linear, ForestModel, ForestParams, Predictor,
};
use crate::rng::{derive_seed, SplitMix64};
use crate::shapley::{shapley_approx, ShapleyConfig, ShapleyMode};

const SIM_TAG: u64 = 0x53_494D;

/// Noise standard deviation used by both studies: the generating noise is
/// N(0, 0.5) with the second parameter read as the variance.
pub const PAPER_NOISE_SD: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Default number of neighbours for the k-NN learner of study 2.
pub const SIM2_KNN_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// `Y = X1 + X2 + 10·X1·1{X3=0} + 10·X2·1{X3=1} + eps`, X3 ~ B(0.5)
    /// encoded as a categorical with levels "0"/"1".
    SwitchInteraction,
    /// `Y = X1 + X2 + X3 + X1·X2 + eps`, all features standard normal.
    LinearInteraction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
    pub noise_sd: f64,
}

/// Generates a dataset from the seeded stream.
///
/// Per-row draw order: X1 normal, X2 normal, X3 (one uniform for the switch
/// kind, one normal for the linear kind), then the noise normal; each normal
/// consumes two uniforms (Box-Muller cosine branch). The switch flag is level
/// "0" when the uniform falls below 0.5.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sd must be finite and non-negative, got {}",
            spec.noise_sd
        )));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut target = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x1 = rng.next_normal();
        let x2 = rng.next_normal();
        match spec.kind {
            GeneratorKind::SwitchInteraction => {
                let level = (rng.next_f64() >= 0.5) as u32;
                let eps = spec.noise_sd * rng.next_normal();
                let y = x1
                    + x2
                    + 10.0 * x1 * ((level == 0) as u32 as f64)
                    + 10.0 * x2 * ((level == 1) as u32 as f64)
                    + eps;
                rows.push(vec![Value::Num(x1), Value::Num(x2), Value::Cat(level)]);
                target.push(y);
            }
            GeneratorKind::LinearInteraction => {
                let x3 = rng.next_normal();
                let eps = spec.noise_sd * rng.next_normal();
                let y = x1 + x2 + x3 + x1 * x2 + eps;
                rows.push(vec![Value::Num(x1), Value::Num(x2), Value::Num(x3)]);
                target.push(y);
            }
        }
    }
    let kinds = match spec.kind {
        GeneratorKind::SwitchInteraction => vec![
            FeatureKind::Numeric,
            FeatureKind::Numeric,
            FeatureKind::Categorical { levels: vec!["0".into(), "1".into()] },
        ],
        GeneratorKind::LinearInteraction => vec![FeatureKind::Numeric; 3],
    };
    Dataset::new(
        vec!["x1".into(), "x2".into(), "x3".into()],
        kinds,
        rows,
        target,
        "y".into(),
    )
}

// ---------------------------------------------------------------------------
// Study 1: conditional PFI under a switching interaction.
// ---------------------------------------------------------------------------

/// Per-repetition PFI values of study 1: global and conditional on the flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim1Rep {
    pub pfi_x1: f64,
    pub pfi_x2: f64,
    pub pfi_x1_g0: f64,
    pub pfi_x2_g0: f64,
    pub pfi_x1_g1: f64,
    pub pfi_x2_g1: f64,
}

/// Trains study 1's forest (defaults, derived seeds).
pub fn sim1_fit_forest(train_n: usize, seed: u64) -> Result<ForestModel> {
    let train = generate(&GeneratorSpec {
        kind: GeneratorKind::SwitchInteraction,
        n: train_n,
        seed: derive_seed(seed, &[SIM_TAG, 1]),
        noise_sd: PAPER_NOISE_SD,
    })?;
    fit_forest(&train, ForestParams::defaults_for(train.p()), derive_seed(seed, &[SIM_TAG, 2]))
}

/// Fresh test set for repetition `rep`.
pub fn sim1_test_set(test_n: usize, seed: u64, rep: usize) -> Result<Dataset> {
    generate(&GeneratorSpec {
        kind: GeneratorKind::SwitchInteraction,
        n: test_n,
        seed: derive_seed(seed, &[SIM_TAG, 3, rep as u64]),
        noise_sd: PAPER_NOISE_SD,
    })
}

fn flag_groups(test: &Dataset) -> Vec<(String, Vec<bool>)> {
    let flag = test.p() - 1;
    [0u32, 1u32]
        .iter()
        .map(|&level| {
            let mask: Vec<bool> =
                (0..test.n()).map(|i| test.value(i, flag) == Value::Cat(level)).collect();
            (format!("x3={level}"), mask)
        })
        .collect()
}

/// Global and conditional PFI of X1 and X2 on one test set, squared loss,
/// all-observed grid. Conditional values average the already computed local
/// importances per flag group (the grid is not restricted).
pub fn sim1_rep_on(model: &dyn Predictor, test: &Dataset) -> Result<Sim1Rep> {
    let groups = flag_groups(test);
    let mut global = [0.0f64; 2];
    let mut cond = [[0.0f64; 2]; 2]; // [feature][group]
    for (fi, feature) in [0usize, 1usize].iter().enumerate() {
        let s = FeatureSet::new(vec![*feature]);
        let m = delta_loss_matrix(model, test, &s, &GridSpec::AllObserved, LossFn::Squared)?;
        global[fi] = pfi_from_matrix(&m);
        let by_group = conditional_pfi(&m, &groups)?;
        cond[fi][0] = by_group[0].1;
        cond[fi][1] = by_group[1].1;
    }
    Ok(Sim1Rep {
        pfi_x1: global[0],
        pfi_x2: global[1],
        pfi_x1_g0: cond[0][0],
        pfi_x2_g0: cond[1][0],
        pfi_x1_g1: cond[0][1],
        pfi_x2_g1: cond[1][1],
    })
}

/// One repetition: generate the test set for `rep` and evaluate.
pub fn sim1_rep(model: &dyn Predictor, test_n: usize, seed: u64, rep: usize) -> Result<Sim1Rep> {
    let test = sim1_test_set(test_n, seed, rep)?;
    sim1_rep_on(model, &test)
}

/// PI curves of X1 and X2 on one test set: overall plus conditional on each
/// flag level (six curves).
pub fn sim1_curves(model: &dyn Predictor, test: &Dataset) -> Result<Vec<Curve>> {
    let groups = flag_groups(test);
    let mut curves = Vec::with_capacity(6);
    for feature in [0usize, 1usize] {
        let s = FeatureSet::new(vec![feature]);
        let m = delta_loss_matrix(model, test, &s, &GridSpec::AllObserved, LossFn::Squared)?;
        let name = format!("x{}", feature + 1);
        let mut pi = pi_curve(&m);
        pi.label = format!("pi {name}");
        curves.push(pi);
        for (label, mask) in &groups {
            curves.push(conditional_pi_curve(&m, mask, format!("pi {name} | {label}"))?);
        }
    }
    Ok(curves)
}

/// Mean and standard deviation of one reported quantity across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStat {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim1Report {
    pub train_n: usize,
    pub test_n: usize,
    pub reps: usize,
    pub seed: u64,
    pub per_rep: Vec<Sim1Rep>,
    pub stats: Vec<SummaryStat>,
    /// PI curves (overall and per flag group) from repetition 0.
    pub curves: Vec<Curve>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    (mean, sd)
}

/// Assembles the report from per-rep results (fixed rep order).
pub fn sim1_aggregate(
    train_n: usize,
    test_n: usize,
    seed: u64,
    per_rep: Vec<Sim1Rep>,
    curves: Vec<Curve>,
) -> Sim1Report {
    let field = |f: fn(&Sim1Rep) -> f64| per_rep.iter().map(f).collect::<Vec<f64>>();
    let stats = [
        ("pfi_x1", field(|r| r.pfi_x1)),
        ("pfi_x2", field(|r| r.pfi_x2)),
        ("pfi_x1|x3=0", field(|r| r.pfi_x1_g0)),
        ("pfi_x2|x3=0", field(|r| r.pfi_x2_g0)),
        ("pfi_x1|x3=1", field(|r| r.pfi_x1_g1)),
        ("pfi_x2|x3=1", field(|r| r.pfi_x2_g1)),
    ]
    .into_iter()
    .map(|(label, values)| {
        let (mean, sd) = mean_sd(&values);
        SummaryStat { label: label.into(), mean, sd }
    })
    .collect();
    Sim1Report { train_n, test_n, reps: per_rep.len(), seed, per_rep, stats, curves }
}

/// Runs study 1 sequentially: one forest, `reps` fresh test sets.
pub fn run_sim1(train_n: usize, test_n: usize, reps: usize, seed: u64) -> Result<Sim1Report> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let model = sim1_fit_forest(train_n, seed)?;
    let per_rep = (0..reps)
        .map(|r| sim1_rep(&model, test_n, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let curves = sim1_curves(&model, &sim1_test_set(test_n, seed, 0)?)?;
    Ok(sim1_aggregate(train_n, test_n, seed, per_rep, curves))
}

// ---------------------------------------------------------------------------
// Study 2: SFIMP versus difference- and ratio-PFI under an interaction.
// ---------------------------------------------------------------------------

pub type NamedModel = (String, Box<dyn Predictor>);

/// Trains the four learners of study 2 on one generated training set. The
/// paper's kernel SVM is replaced by k-NN; the report labels the column
/// accordingly.
pub fn sim2_fit_models(train_n: usize, seed: u64) -> Result<Vec<NamedModel>> {
    let train = generate(&GeneratorSpec {
        kind: GeneratorKind::LinearInteraction,
        n: train_n,
        seed: derive_seed(seed, &[SIM_TAG, 21]),
        noise_sd: PAPER_NOISE_SD,
    })?;
    let forest_seed = derive_seed(seed, &[SIM_TAG, 22]);
    Ok(vec![
        ("linear".into(), Box::new(fit_linear(&train, false)?) as Box<dyn Predictor>),
        ("linear_inter".into(), Box::new(fit_linear(&train, true)?)),
        (
            "forest".into(),
            Box::new(fit_forest(&train, ForestParams::defaults_for(train.p()), forest_seed)?),
        ),
        ("knn".into(), Box::new(fit_knn(&train, SIM2_KNN_K.min(train_n))?)),
    ])
}

/// Per-model importance values of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim2ModelRep {
    pub model: String,
    pub mse: f64,
    pub pfi_diff: [f64; 3],
    pub pfi_ratio: [f64; 3],
    pub sfimp: [f64; 3],
    pub sfimp_se: [f64; 3],
    /// Directly computed `v(P)` of the same repetition.
    pub sfimp_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2Rep {
    pub models: Vec<Sim2ModelRep>,
}

/// One repetition of study 2 on a fresh test set: difference- and ratio-PFI
/// (V-statistic) plus the Shapley approximation with its defaults.
pub fn sim2_rep(
    models: &[NamedModel],
    test_n: usize,
    seed: u64,
    rep: usize,
) -> Result<Sim2Rep> {
    let test = generate(&GeneratorSpec {
        kind: GeneratorKind::LinearInteraction,
        n: test_n,
        seed: derive_seed(seed, &[SIM_TAG, 23, rep as u64]),
        noise_sd: PAPER_NOISE_SD,
    })?;
    let mut out = Vec::with_capacity(models.len());
    for (mi, (name, model)) in models.iter().enumerate() {
        let baseline = empirical_ge(model.as_ref(), &test, LossFn::Squared)?;
        if baseline <= RATIO_BASELINE_FLOOR {
            return Err(Error::DegenerateBaseline { baseline });
        }
        let mut pfi_diff = [0.0f64; 3];
        let mut pfi_ratio = [0.0f64; 3];
        for j in 0..3 {
            let replaced = ge_replaced(
                model.as_ref(),
                &test,
                &FeatureSet::new(vec![j]),
                LossFn::Squared,
                EstimatorKind::VStatistic,
            )?;
            pfi_diff[j] = replaced - baseline;
            pfi_ratio[j] = replaced / baseline;
        }
        let cfg = ShapleyConfig {
            m_feat: 100,
            m_obs: 5,
            seed: derive_seed(seed, &[SIM_TAG, 24, rep as u64, mi as u64]),
            mode: ShapleyMode::Approx,
        };
        let shap = shapley_approx(model.as_ref(), &test, LossFn::Squared, cfg)?;
        out.push(Sim2ModelRep {
            model: name.clone(),
            mse: baseline,
            pfi_diff,
            pfi_ratio,
            sfimp: [shap.phi[0], shap.phi[1], shap.phi[2]],
            sfimp_se: [shap.std_err[0], shap.std_err[1], shap.std_err[2]],
            sfimp_total: shap.total,
        });
    }
    Ok(Sim2Rep { models: out })
}

/// Median importance ratios (X1/X3 and X2/X3) for one model and measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim2RatioRow {
    pub model: String,
    pub measure: String,
    pub x1_x3_median: f64,
    pub x2_x3_median: f64,
}

/// Single-run breakdown (repetition 0): model error, Shapley values, and the
/// proportion of explained importance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim2Breakdown {
    pub model: String,
    pub mse: f64,
    pub sfimp: [f64; 3],
    pub sfimp_total: f64,
    pub proportion: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2Report {
    pub train_n: usize,
    pub test_n: usize,
    pub reps: usize,
    pub seed: u64,
    pub per_rep: Vec<Sim2Rep>,
    pub ratios: Vec<Sim2RatioRow>,
    pub breakdown: Vec<Sim2Breakdown>,
}

pub const SIM2_MEASURES: [&str; 3] = ["pfi_diff", "pfi_ratio", "sfimp"];

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Assembles report rows from per-rep results (fixed order).
pub fn sim2_aggregate(
    train_n: usize,
    test_n: usize,
    seed: u64,
    per_rep: Vec<Sim2Rep>,
) -> Sim2Report {
    let model_names: Vec<String> =
        per_rep[0].models.iter().map(|m| m.model.clone()).collect();
    let mut ratios = Vec::new();
    for (mi, model) in model_names.iter().enumerate() {
        for measure in SIM2_MEASURES {
            let pick = |m: &Sim2ModelRep, j: usize| match measure {
                "pfi_diff" => m.pfi_diff[j],
                "pfi_ratio" => m.pfi_ratio[j],
                _ => m.sfimp[j],
            };
            let x1_x3: Vec<f64> = per_rep
                .iter()
                .map(|r| pick(&r.models[mi], 0) / pick(&r.models[mi], 2))
                .collect();
            let x2_x3: Vec<f64> = per_rep
                .iter()
                .map(|r| pick(&r.models[mi], 1) / pick(&r.models[mi], 2))
                .collect();
            ratios.push(Sim2RatioRow {
                model: model.clone(),
                measure: measure.into(),
                x1_x3_median: median(x1_x3),
                x2_x3_median: median(x2_x3),
            });
        }
    }
    let breakdown = per_rep[0]
        .models
        .iter()
        .map(|m| {
            let sum: f64 = m.sfimp.iter().sum();
            let proportion = if sum.abs() > 1e-12 {
                Some([m.sfimp[0] / sum, m.sfimp[1] / sum, m.sfimp[2] / sum])
            } else {
                None
            };
            Sim2Breakdown {
                model: m.model.clone(),
                mse: m.mse,
                sfimp: m.sfimp,
                sfimp_total: m.sfimp_total,
                proportion,
            }
        })
        .collect();
    Sim2Report { train_n, test_n, reps: per_rep.len(), seed, per_rep, ratios, breakdown }
}

/// Runs study 2 sequentially.
pub fn run_sim2(train_n: usize, test_n: usize, reps: usize, seed: u64) -> Result<Sim2Report> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let models = sim2_fit_models(train_n, seed)?;
    let per_rep = (0..reps)
        .map(|r| sim2_rep(&models, test_n, seed, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(sim2_aggregate(train_n, test_n, seed, per_rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::{ice_curves, shapley_effect, EffectMode};
    use crate::models::{LinearModel, Term};

    #[test]
    fn generators_deterministic_and_seed_sensitive() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::LinearInteraction,
            n: 50,
            seed: 5,
            noise_sd: PAPER_NOISE_SD,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate(&GeneratorSpec { seed: 6, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_rows_rejected() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::SwitchInteraction,
            n: 0,
            seed: 1,
            noise_sd: 0.0,
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn noiseless_switch_formula() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::SwitchInteraction,
            n: 200,
            seed: 9,
            noise_sd: 0.0,
        };
        let d = generate(&spec).unwrap();
        for i in 0..d.n() {
            let x1 = d.value(i, 0).as_num().unwrap();
            let x2 = d.value(i, 1).as_num().unwrap();
            let flag0 = (d.value(i, 2) == Value::Cat(0)) as u32 as f64;
            // Bitwise oracle in the generating formula's own shape.
            let want = x1 + x2 + 10.0 * x1 * flag0 + 10.0 * x2 * (1.0 - flag0);
            assert_eq!(d.target()[i], want);
            // Algebraic form up to float association.
            let algebraic =
                if flag0 == 1.0 { 11.0 * x1 + x2 } else { x1 + 11.0 * x2 };
            assert!((d.target()[i] - algebraic).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_mean_is_near_zero() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::LinearInteraction,
            n: 100_000,
            seed: 3,
            noise_sd: 0.0,
        };
        let d = generate(&spec).unwrap();
        let mean =
            (0..d.n()).map(|i| d.value(i, 0).as_num().unwrap()).sum::<f64>() / d.n() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}"); // 3/sqrt(n) bound with slack
    }

    #[test]
    fn switch_flag_is_roughly_balanced() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::SwitchInteraction,
            n: 10_000,
            seed: 7,
            noise_sd: 0.0,
        };
        let d = generate(&spec).unwrap();
        let ones = (0..d.n()).filter(|&i| d.value(i, 2) == Value::Cat(1)).count();
        let frac = ones as f64 / d.n() as f64;
        assert!((frac - 0.5).abs() < 0.02, "fraction {frac}");
    }

    #[test]
    fn x2_ignoring_model_has_exactly_zero_pfi_x2() {
        let model = LinearModel {
            intercept: 0.0,
            coefficients: vec![6.0],
            terms: vec![Term::Main { feature: 0 }],
            interactions: false,
        };
        let test = sim1_test_set(60, 4, 0).unwrap();
        let rep = sim1_rep_on(&model, &test).unwrap();
        assert_eq!(rep.pfi_x2, 0.0);
        assert_eq!(rep.pfi_x2_g0, 0.0);
        assert_eq!(rep.pfi_x2_g1, 0.0);
        assert!(rep.pfi_x1 > 0.0);
    }

    #[test]
    fn misspecified_linear_model_group_contrast() {
        // A plain linear fit to the switch data pools the two regimes
        // (slopes ~6 for both features). Its global PFIs are symmetric in X1
        // and X2, but the conditional PFIs still contrast strongly across the
        // flag because the group residuals correlate with the feature:
        // E[delta L | group] = 36*E[(v - x1)^2] - 12*E[r*x1 | group] = 72 -+ 60.
        let train = generate(&GeneratorSpec {
            kind: GeneratorKind::SwitchInteraction,
            n: 8000,
            seed: 31,
            noise_sd: 0.0,
        })
        .unwrap();
        let model = fit_linear(&train, false).unwrap();
        assert!((model.coefficients[0] - 6.0).abs() < 0.3);
        assert!((model.coefficients[1] - 6.0).abs() < 0.3);

        let test = sim1_test_set(400, 31, 0).unwrap();
        let rep = sim1_rep_on(&model, &test).unwrap();
        let sym = rep.pfi_x1 / rep.pfi_x2;
        assert!(sym > 0.7 && sym < 1.4, "global symmetry broken: {sym}");
        // The flag=0 group (X1 under-fitted upward) carries the larger share.
        assert!(rep.pfi_x1_g0 > 3.0 * rep.pfi_x1_g1, "{} vs {}", rep.pfi_x1_g0, rep.pfi_x1_g1);
        assert!(rep.pfi_x2_g1 > 3.0 * rep.pfi_x2_g0, "{} vs {}", rep.pfi_x2_g1, rep.pfi_x2_g0);
    }

    #[test]
    fn sim1_smoke_structure() {
        let report = run_sim1(300, 40, 2, 11).unwrap();
        assert_eq!(report.per_rep.len(), 2);
        assert_eq!(report.stats.len(), 6);
        assert_eq!(report.curves.len(), 6);
        for stat in &report.stats {
            assert!(stat.mean.is_finite() && stat.sd.is_finite(), "{}", stat.label);
        }
        // Determinism of the whole pipeline.
        let again = run_sim1(300, 40, 2, 11).unwrap();
        assert_eq!(report, again);
    }

    /// The true switching model as a predictor: ICE curves of X1 split into
    /// slope groups by the flag.
    struct TrueSwitchModel;

    impl Predictor for TrueSwitchModel {
        fn predict(&self, rows: &crate::data::RowMatrix) -> Result<Vec<f64>> {
            Ok(rows
                .rows()
                .map(|r| {
                    let x1 = r[0].as_num().unwrap();
                    let x2 = r[1].as_num().unwrap();
                    match r[2] {
                        Value::Cat(0) => 11.0 * x1 + x2,
                        _ => x1 + 11.0 * x2,
                    }
                })
                .collect())
        }
        fn kind(&self) -> &'static str {
            "switch"
        }
        fn describe(&self) -> String {
            "true switching model".into()
        }
    }

    #[test]
    fn ice_slopes_split_by_flag() {
        let test = sim1_test_set(80, 15, 0).unwrap();
        let s = FeatureSet::new(vec![0]);
        let curves = ice_curves(&TrueSwitchModel, &test, &s, &GridSpec::AllObserved).unwrap();
        for (i, curve) in curves.iter().enumerate() {
            let k = curve.len() - 1;
            let slope = (curve.ordinates[k] - curve.ordinates[0])
                / (curve.abscissa[k] - curve.abscissa[0]);
            let want = match test.value(i, 2) {
                Value::Cat(0) => 11.0,
                _ => 1.0,
            };
            assert!((slope - want).abs() < 1e-9, "obs {i}: slope {slope}");
        }
    }

    #[test]
    fn sim2_smoke_and_efficiency() {
        let models = sim2_fit_models(300, 17).unwrap();
        assert_eq!(models.len(), 4);
        let rep = sim2_rep(&models, 40, 17, 0).unwrap();
        for m in &rep.models {
            assert!(m.mse > 0.0);
            // Shapley sum within sampling noise of the direct v(P).
            let sum: f64 = m.sfimp.iter().sum();
            let se = libm::sqrt(m.sfimp_se.iter().map(|s| s * s).sum::<f64>());
            assert!(
                (sum - m.sfimp_total).abs() < 4.0 * se.max(1e-9),
                "{}: sum {sum} vs total {} (se {se})",
                m.model,
                m.sfimp_total
            );
        }
        let report = sim2_aggregate(300, 40, 17, vec![rep]);
        assert_eq!(report.ratios.len(), 12);
        assert_eq!(report.breakdown.len(), 4);
    }

    #[test]
    fn sim2_deterministic() {
        let a = run_sim2(200, 30, 2, 23).unwrap();
        let b = run_sim2(200, 30, 2, 23).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn effects_shapley_on_generated_row() {
        // Exact single-prediction attribution on the linear generator's data.
        let d = generate(&GeneratorSpec {
            kind: GeneratorKind::LinearInteraction,
            n: 40,
            seed: 2,
            noise_sd: 0.0,
        })
        .unwrap();
        let x = d.row(0).to_vec();
        let r = shapley_effect(&TrueLinearModel, &d, &x, EffectMode::Exact).unwrap();
        let mut rows = crate::data::RowMatrix::new(3);
        rows.push_row(&x);
        let fx = TrueLinearModel.predict(&rows).unwrap()[0];
        let total: f64 = r.phi.iter().sum();
        assert!((total - (fx - r.baseline)).abs() < 1e-10);
    }

    struct TrueLinearModel;

    impl Predictor for TrueLinearModel {
        fn predict(&self, rows: &crate::data::RowMatrix) -> Result<Vec<f64>> {
            Ok(rows
                .rows()
                .map(|r| {
                    let x1 = r[0].as_num().unwrap();
                    let x2 = r[1].as_num().unwrap();
                    let x3 = r[2].as_num().unwrap();
                    x1 + x2 + x3 + x1 * x2
                })
                .collect())
        }
        fn kind(&self) -> &'static str {
            "true_linear"
        }
        fn describe(&self) -> String {
            "true linear interaction model".into()
        }
    }
}
