//! `bbfi` — black-box feature importance from the command line.
//!
//! Every run prints its fully resolved configuration (including the
//! materialized seed) as the first output line; re-running with that
//! configuration reproduces all outputs byte for byte, for any `--threads`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bbfi::csvio::{
    self, g17, load_csv, row_filter, write_curves_csv, write_matrix_csv, write_table, CsvOptions,
};
use bbfi::error::{Error, Result};
use bbfi::external::spawn_external;
use bbfi::model_file::{load_model, save_model, BuiltinModel};
use bbfi::parallel::{
    fit_forest_threaded, resolve_threads, run_sim1_threaded, run_sim2_threaded,
};
use bbfi::report;
use bbfi::svg::{render_line_plot, PlotCurve, PlotSpec};
use bbfi_core::data::{Dataset, FeatureKind, FeatureSet, Value};
use bbfi_core::effects::{ice_curves, pd_function, shapley_effect, EffectMode};
use bbfi_core::importance::{
    conditional_pfi, delta_loss_matrix, ici_curves, pfi, pfi_from_matrix, pi_curve,
    EstimatorKind, GridSpec, ImportanceResult, PfiMode, RATIO_BASELINE_FLOOR,
};
use bbfi_core::loss::{empirical_ge, LossFn};
use bbfi_core::models::{fit_knn, fit_linear, ForestParams, Predictor};
use bbfi_core::rng::derive_seed;
use bbfi_core::shapley::{explained_proportion, shapley, ShapleyConfig, ShapleyMode};

const GRID_TAG: u64 = 0x4752_4944;
const FIT_TAG: u64 = 0x4649_5400;
const APPROX_TAG: u64 = 0x4150_5052;

#[derive(Parser)]
#[command(
    name = "bbfi",
    version,
    about = "Model-agnostic feature importance: PFI, ICI/PI and PD/ICE curves, Shapley attribution"
)]
struct Cli {
    /// Worker threads for tree fitting and simulation reps (results never
    /// depend on this); falls back to $BBFI_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Fit a built-in model and save it as JSON
    Fit(FitArgs),
    /// Global permutation feature importance
    Pfi(PfiArgs),
    /// Individual conditional importance curves
    Ici(IciArgs),
    /// Partial importance curve
    Pi(CurveArgs),
    /// Partial dependence curve
    Pdp(EffectArgs),
    /// Individual conditional expectation curves
    Ice(EffectArgs),
    /// Shapley feature importance over the model performance
    Shapley(ShapleyArgs),
    /// Shapley effect attribution for a single observation
    ShapleyEffect(ShapleyEffectArgs),
    /// Run a built-in simulation study
    Simulate(SimArgs),
    /// Render curve CSV files as an SVG line plot
    Plot(PlotArgs),
}

#[derive(Args, Serialize, Clone)]
struct DataOpts {
    /// CSV data file (header row required)
    #[arg(long)]
    data: PathBuf,
    /// Target column name
    #[arg(long)]
    target: String,
    /// Columns to treat as categorical (comma separated)
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Keep only rows matching `column OP value` (OP: < <= > >= == !=)
    #[arg(long = "where")]
    filter: Option<String>,
}

impl DataOpts {
    fn load(&self) -> Result<Dataset> {
        let opts =
            CsvOptions { target: self.target.clone(), categorical: self.categorical.clone() };
        let d = load_csv(&self.data, &opts)?;
        match &self.filter {
            Some(expr) => Ok(d.subset_rows(&row_filter(&d, expr)?)?),
            None => Ok(d),
        }
    }
}

#[derive(Args, Serialize, Clone)]
struct ModelOpts {
    /// Load a saved model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fit a built-in learner for this run
    #[arg(long, value_enum)]
    fit: Option<FitKind>,
    /// Training data for --fit (defaults to --data, in-sample)
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// External predictor command line (whitespace split)
    #[arg(long)]
    external: Option<String>,
    /// Trees for a forest fit
    #[arg(long)]
    ntree: Option<usize>,
    /// Candidate features per split for a forest fit
    #[arg(long)]
    mtry: Option<usize>,
    /// Minimum rows per leaf for a forest fit
    #[arg(long)]
    min_node_size: Option<usize>,
    /// Neighbours for a k-NN fit
    #[arg(long)]
    k: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum FitKind {
    Linear,
    LinearInteractions,
    Forest,
    Knn,
}

enum AnyModel {
    Builtin(BuiltinModel),
    External(bbfi::external::ExternalPredictor),
}

impl AnyModel {
    fn predictor(&self) -> &dyn Predictor {
        match self {
            AnyModel::Builtin(m) => m.as_predictor(),
            AnyModel::External(m) => m,
        }
    }
}

fn fit_builtin(
    kind: FitKind,
    train: &Dataset,
    opts: &ModelOpts,
    seed: u64,
    threads: usize,
) -> Result<BuiltinModel> {
    Ok(match kind {
        FitKind::Linear => BuiltinModel::Linear(fit_linear(train, false)?),
        FitKind::LinearInteractions => BuiltinModel::Linear(fit_linear(train, true)?),
        FitKind::Forest => {
            let defaults = ForestParams::defaults_for(train.p());
            let params = ForestParams {
                ntree: opts.ntree.unwrap_or(defaults.ntree),
                mtry: opts.mtry.unwrap_or(defaults.mtry),
                min_node_size: opts.min_node_size.unwrap_or(defaults.min_node_size),
            };
            BuiltinModel::Forest(fit_forest_threaded(
                train,
                params,
                derive_seed(seed, &[FIT_TAG]),
                threads,
            )?)
        }
        FitKind::Knn => BuiltinModel::Knn(fit_knn(train, opts.k.unwrap_or(10))?),
    })
}

fn resolve_model(
    opts: &ModelOpts,
    data_opts: &DataOpts,
    d: &Dataset,
    seed: u64,
    threads: usize,
) -> Result<AnyModel> {
    let sources =
        opts.model.is_some() as u8 + opts.fit.is_some() as u8 + opts.external.is_some() as u8;
    if sources != 1 {
        return Err(Error::Usage(
            "exactly one model source is required: --model, --fit, or --external".into(),
        ));
    }
    if let Some(path) = &opts.model {
        return Ok(AnyModel::Builtin(load_model(path)?));
    }
    if let Some(kind) = opts.fit {
        let train = match &opts.train_data {
            Some(path) => load_csv(
                path,
                &CsvOptions {
                    target: data_opts.target.clone(),
                    categorical: data_opts.categorical.clone(),
                },
            )?,
            None => d.clone(),
        };
        return Ok(AnyModel::Builtin(fit_builtin(kind, &train, opts, seed, threads)?));
    }
    let command: Vec<String> = opts
        .external
        .as_ref()
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    Ok(AnyModel::External(spawn_external(&command, d.kinds().to_vec())?))
}

#[derive(ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum LossArg {
    Squared,
    Absolute,
    ZeroOne,
}

impl From<LossArg> for LossFn {
    fn from(v: LossArg) -> Self {
        match v {
            LossArg::Squared => LossFn::Squared,
            LossArg::Absolute => LossFn::Absolute,
            LossArg::ZeroOne => LossFn::ZeroOne,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Difference,
    Ratio,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum EstimatorArg {
    /// Full double sum over all observation/replacement pairs
    VStatistic,
    /// Unbiased variant excluding the diagonal pairs
    UStatistic,
    /// Monte-Carlo over sampled observation permutations
    Approx,
    /// Grid-subsampled estimate from the delta-loss matrix (uses --grid)
    Grid,
}

#[derive(Args, Serialize, Clone)]
struct FitArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Which learner to fit
    #[arg(long, value_enum)]
    model_kind: FitKind,
    #[arg(long)]
    ntree: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    min_node_size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
struct PfiArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    /// Features forming the replaced set S (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    #[arg(long, value_enum, default_value = "difference")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "v-statistic")]
    estimator: EstimatorArg,
    /// Permutations for --estimator approx
    #[arg(long, default_value_t = 100)]
    permutations: usize,
    /// Replacement grid: auto | all | sample:M | values:v1,v2,...
    #[arg(long, default_value = "auto")]
    grid: String,
    /// Conditional PFI grouped by the levels of this categorical feature
    #[arg(long)]
    by: Option<String>,
    /// full: average local importances per group; subset: re-compute on each
    /// row subset (grid restricted with it)
    #[arg(long, value_enum, default_value = "full")]
    condition_grid: ConditionGridArg,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ConditionGridArg {
    Full,
    Subset,
}

#[derive(Args, Serialize, Clone)]
struct IciArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    #[arg(long, default_value = "auto")]
    grid: String,
    /// Drop each observation's own grid point (unbiased variant)
    #[arg(long)]
    omit_own_point: bool,
    /// Also export the long-form delta-loss matrix here
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct CurveArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    #[arg(long, default_value = "auto")]
    grid: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct EffectArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long, default_value = "auto")]
    grid: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct ShapleyArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    /// exact enumerates all coalitions (p <= 12); approx samples
    #[arg(long, value_enum, default_value = "approx")]
    mode: ShapleyModeArg,
    /// Feature-permutation draws for approx mode
    #[arg(long, default_value_t = 100)]
    mfeat: usize,
    /// Observation-permutation draws per error evaluation
    #[arg(long, default_value_t = 5)]
    mobs: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full result (config echo included) as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ShapleyModeArg {
    Exact,
    Approx,
}

#[derive(Args, Serialize, Clone)]
struct ShapleyEffectArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    model: ModelOpts,
    /// Observation index to explain (0-based, after --where filtering)
    #[arg(long)]
    row: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: EffectModeArg,
    /// Permutation draws for sampled mode
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum EffectModeArg {
    Exact,
    Sampled,
}

#[derive(Args, Serialize, Clone)]
struct SimArgs {
    /// Which study to run
    #[arg(value_enum)]
    which: SimWhich,
    #[arg(long, default_value_t = 2000)]
    train_n: usize,
    #[arg(long, default_value_t = 100)]
    test_n: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Write report CSVs with this path prefix
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum SimWhich {
    Sim1,
    Sim2,
}

#[derive(Args, Serialize, Clone)]
struct PlotArgs {
    /// Curve CSV files (repeatable / comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    curves: Vec<PathBuf>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value = "grid value")]
    x_label: String,
    #[arg(long, default_value = "value")]
    y_label: String,
    /// Highlight the per-observation curves with extreme integrals
    #[arg(long)]
    highlight_extremes: bool,
    /// Add a marginal histogram of the grid values
    #[arg(long)]
    histogram: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output SVG file
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = resolve_threads(cli.threads);
    let mut command = cli.command;
    materialize_seed(&mut command);
    match echo_config(&command).and_then(|()| run(command, threads)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Error::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn entropy_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ (std::process::id() as u64).rotate_left(32)
}

fn materialize_seed(command: &mut Command) {
    let slot = match command {
        Command::Fit(a) => &mut a.seed,
        Command::Pfi(a) => &mut a.seed,
        Command::Ici(a) => &mut a.seed,
        Command::Pi(a) => &mut a.seed,
        Command::Pdp(a) => &mut a.seed,
        Command::Ice(a) => &mut a.seed,
        Command::Shapley(a) => &mut a.seed,
        Command::ShapleyEffect(a) => &mut a.seed,
        Command::Simulate(a) => &mut a.seed,
        Command::Plot(a) => &mut a.seed,
    };
    if slot.is_none() {
        *slot = Some(entropy_seed());
    }
}

fn echo_config(command: &Command) -> Result<()> {
    println!("config {}", serde_json::to_string(command)?);
    Ok(())
}

fn run(command: Command, threads: usize) -> Result<String> {
    match command {
        Command::Fit(args) => cmd_fit(args, threads),
        Command::Pfi(args) => cmd_pfi(args, threads),
        Command::Ici(args) => cmd_ici(args, threads),
        Command::Pi(args) => cmd_pi(args, threads),
        Command::Pdp(args) => cmd_effect(args, threads, true),
        Command::Ice(args) => cmd_effect(args, threads, false),
        Command::Shapley(args) => cmd_shapley(args, threads),
        Command::ShapleyEffect(args) => cmd_shapley_effect(args, threads),
        Command::Simulate(args) => cmd_simulate(args, threads),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn feature_set(d: &Dataset, names: &[String]) -> Result<FeatureSet> {
    let mut indices = Vec::with_capacity(names.len());
    for name in names {
        indices.push(
            d.feature_index(name)
                .ok_or_else(|| Error::Usage(format!("unknown feature '{name}'")))?,
        );
    }
    Ok(FeatureSet::new(indices))
}

fn parse_grid(spec: &str, d: &Dataset, s: &FeatureSet, seed: u64) -> Result<GridSpec> {
    let derived = derive_seed(seed, &[GRID_TAG]);
    if spec == "auto" {
        return Ok(GridSpec::default_for(d.n(), derived));
    }
    if spec == "all" {
        return Ok(GridSpec::AllObserved);
    }
    if let Some(m) = spec.strip_prefix("sample:") {
        let m: usize = m
            .parse()
            .map_err(|_| Error::Usage(format!("bad grid sample size '{m}'")))?;
        return Ok(GridSpec::Sample { m, seed: derived });
    }
    if let Some(values) = spec.strip_prefix("values:") {
        if s.len() != 1 {
            return Err(Error::Usage(
                "an explicit value grid is supported for single features only".into(),
            ));
        }
        let j = s.indices()[0];
        let tuples = values
            .split(',')
            .map(|raw| {
                let v = match d.kind(j) {
                    FeatureKind::Numeric => Value::Num(raw.parse().map_err(|_| {
                        Error::Usage(format!("bad numeric grid value '{raw}'"))
                    })?),
                    FeatureKind::Categorical { levels } => {
                        let idx = levels.iter().position(|l| l == raw).ok_or_else(|| {
                            Error::Usage(format!("unknown level '{raw}' in grid values"))
                        })?;
                        Value::Cat(idx as u32)
                    }
                };
                Ok(vec![v])
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(GridSpec::Explicit(tuples));
    }
    Err(Error::Usage(format!(
        "bad --grid '{spec}': expected auto | all | sample:M | values:v1,v2,..."
    )))
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn feature_label(d: &Dataset, s: &FeatureSet) -> String {
    s.indices()
        .iter()
        .map(|&j| d.feature_names()[j].as_str())
        .collect::<Vec<_>>()
        .join("+")
}

fn cmd_fit(args: FitArgs, threads: usize) -> Result<String> {
    let train = args.data.load()?;
    let seed = args.seed.unwrap();
    let opts = ModelOpts {
        model: None,
        fit: Some(args.model_kind),
        train_data: None,
        external: None,
        ntree: args.ntree,
        mtry: args.mtry,
        min_node_size: args.min_node_size,
        k: args.k,
    };
    let model = fit_builtin(args.model_kind, &train, &opts, seed, threads)?;
    save_model(&args.out, &model)?;
    Ok(format!(
        "fit {} on {} rows -> {}",
        model.as_predictor().describe(),
        train.n(),
        args.out.display()
    ))
}

fn pfi_row(d: &Dataset, r: &ImportanceResult) -> Vec<String> {
    let estimator = match r.estimator {
        EstimatorKind::Approx { m, .. } => format!("approx(m={m})"),
        other => other.name().to_string(),
    };
    vec![
        feature_label(d, &r.feature_set),
        r.mode.name().to_string(),
        estimator,
        g17(r.value),
        g17(r.baseline_ge),
        g17(r.replaced_ge),
    ]
}

fn cmd_pfi(args: PfiArgs, threads: usize) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    let predictor = model.predictor();
    let s = feature_set(&d, &args.features)?;
    let loss: LossFn = args.loss.into();
    let mode = match args.mode {
        ModeArg::Difference => PfiMode::Difference,
        ModeArg::Ratio => PfiMode::Ratio,
    };

    if let Some(by) = &args.by {
        return cmd_pfi_conditional(&args, &d, predictor, &s, loss, by, seed);
    }

    let header = ["features", "mode", "estimator", "value", "baseline_ge", "replaced_ge"];
    let result = match args.estimator {
        EstimatorArg::VStatistic => {
            pfi(predictor, &d, &s, loss, mode, EstimatorKind::VStatistic)?
        }
        EstimatorArg::UStatistic => {
            pfi(predictor, &d, &s, loss, mode, EstimatorKind::UStatistic)?
        }
        EstimatorArg::Approx => pfi(
            predictor,
            &d,
            &s,
            loss,
            mode,
            EstimatorKind::Approx {
                m: args.permutations,
                seed: derive_seed(seed, &[APPROX_TAG]),
            },
        )?,
        EstimatorArg::Grid => {
            let grid = parse_grid(&args.grid, &d, &s, seed)?;
            let m = delta_loss_matrix(predictor, &d, &s, &grid, loss)?;
            let baseline_ge = empirical_ge(predictor, &d, loss)?;
            let diff = pfi_from_matrix(&m);
            let replaced_ge = baseline_ge + diff;
            let value = match mode {
                PfiMode::Difference => diff,
                PfiMode::Ratio => {
                    if baseline_ge <= RATIO_BASELINE_FLOOR {
                        return Err(bbfi_core::Error::DegenerateBaseline {
                            baseline: baseline_ge,
                        }
                        .into());
                    }
                    replaced_ge / baseline_ge
                }
            };
            ImportanceResult {
                feature_set: s.clone(),
                mode,
                estimator: EstimatorKind::VStatistic,
                value,
                baseline_ge,
                replaced_ge,
            }
        }
    };
    let mut rows = vec![pfi_row(&d, &result)];
    if args.estimator == EstimatorArg::Grid {
        rows[0][2] = format!("grid({})", args.grid);
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &header, &rows)?;
    write_output(&args.out, &buf)?;
    Ok(format!(
        "pfi {} {} {} = {}",
        feature_label(&d, &s),
        result.mode.name(),
        rows[0][2],
        g17(result.value)
    ))
}

fn cmd_pfi_conditional(
    args: &PfiArgs,
    d: &Dataset,
    predictor: &dyn Predictor,
    s: &FeatureSet,
    loss: LossFn,
    by: &str,
    seed: u64,
) -> Result<String> {
    if args.mode == ModeArg::Ratio {
        return Err(Error::Usage("conditional PFI supports difference mode only".into()));
    }
    let j = d
        .feature_index(by)
        .ok_or_else(|| Error::Usage(format!("unknown feature '{by}'")))?;
    let levels = match d.kind(j) {
        FeatureKind::Categorical { levels } => levels.clone(),
        FeatureKind::Numeric => {
            return Err(Error::Usage(format!(
                "--by needs a categorical feature; '{by}' is numeric (use --where to subset)"
            )))
        }
    };
    let grid = parse_grid(&args.grid, d, s, seed)?;
    let mut rows = Vec::new();
    match args.condition_grid {
        ConditionGridArg::Full => {
            let m = delta_loss_matrix(predictor, d, s, &grid, loss)?;
            let groups: Vec<(String, Vec<bool>)> = levels
                .iter()
                .enumerate()
                .map(|(idx, level)| {
                    (
                        format!("{by}={level}"),
                        (0..d.n()).map(|i| d.value(i, j) == Value::Cat(idx as u32)).collect(),
                    )
                })
                .filter(|(_, mask): &(String, Vec<bool>)| mask.iter().any(|&b| b))
                .collect();
            for (label, value) in conditional_pfi(&m, &groups)? {
                rows.push(vec![feature_label(d, s), label, g17(value)]);
            }
        }
        ConditionGridArg::Subset => {
            for (idx, level) in levels.iter().enumerate() {
                let mask: Vec<bool> =
                    (0..d.n()).map(|i| d.value(i, j) == Value::Cat(idx as u32)).collect();
                if !mask.iter().any(|&b| b) {
                    continue;
                }
                let sub = d.subset_rows(&mask)?;
                let sub_grid = parse_grid(&args.grid, &sub, s, seed)?;
                let m = delta_loss_matrix(predictor, &sub, s, &sub_grid, loss)?;
                rows.push(vec![
                    feature_label(d, s),
                    format!("{by}={level}"),
                    g17(pfi_from_matrix(&m)),
                ]);
            }
        }
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &["features", "group", "pfi"], &rows)?;
    write_output(&args.out, &buf)?;
    Ok(format!(
        "conditional pfi {} by {by}: {} groups",
        feature_label(d, s),
        rows.len()
    ))
}

fn cmd_ici(args: IciArgs, threads: usize) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    let s = feature_set(&d, &args.features)?;
    let grid = parse_grid(&args.grid, &d, &s, seed)?;
    let m = delta_loss_matrix(model.predictor(), &d, &s, &grid, args.loss.into())?;
    let curves = ici_curves(&m, args.omit_own_point)?;
    let items: Vec<(Option<usize>, &bbfi_core::Curve)> =
        curves.iter().enumerate().map(|(i, c)| (Some(i), c)).collect();
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &items)?;
    write_output(&args.out, &buf)?;
    if let Some(path) = &args.matrix {
        let mut mbuf = Vec::new();
        write_matrix_csv(&mut mbuf, &m, &d)?;
        std::fs::write(path, mbuf)?;
    }
    Ok(format!(
        "ici {}: {} curves over {} grid points",
        feature_label(&d, &s),
        curves.len(),
        m.n_grid()
    ))
}

fn cmd_pi(args: CurveArgs, threads: usize) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    let s = feature_set(&d, &args.features)?;
    let grid = parse_grid(&args.grid, &d, &s, seed)?;
    let m = delta_loss_matrix(model.predictor(), &d, &s, &grid, args.loss.into())?;
    let curve = pi_curve(&m);
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &[(None, &curve)])?;
    write_output(&args.out, &buf)?;
    Ok(format!(
        "pi {}: {} grid points, integral {}",
        feature_label(&d, &s),
        curve.len(),
        g17(curve.mean_ordinate())
    ))
}

fn cmd_effect(args: EffectArgs, threads: usize, pd: bool) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    let s = feature_set(&d, &args.features)?;
    let grid = parse_grid(&args.grid, &d, &s, seed)?;
    let mut buf = Vec::new();
    let summary = if pd {
        let curve = pd_function(model.predictor(), &d, &s, &grid)?;
        write_curves_csv(&mut buf, &[(None, &curve)])?;
        format!("pdp {}: {} grid points", feature_label(&d, &s), curve.len())
    } else {
        let curves = ice_curves(model.predictor(), &d, &s, &grid)?;
        let items: Vec<(Option<usize>, &bbfi_core::Curve)> =
            curves.iter().enumerate().map(|(i, c)| (Some(i), c)).collect();
        write_curves_csv(&mut buf, &items)?;
        format!("ice {}: {} curves", feature_label(&d, &s), curves.len())
    };
    write_output(&args.out, &buf)?;
    Ok(summary)
}

fn cmd_shapley(args: ShapleyArgs, threads: usize) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    let cfg = ShapleyConfig {
        m_feat: args.mfeat,
        m_obs: args.mobs,
        seed,
        mode: match args.mode {
            ShapleyModeArg::Exact => ShapleyMode::Exact,
            ShapleyModeArg::Approx => ShapleyMode::Approx,
        },
    };
    let result = shapley(model.predictor(), &d, args.loss.into(), cfg)?;
    let proportions = explained_proportion(&result).ok();

    let mut rows = Vec::with_capacity(d.p());
    for j in 0..d.p() {
        let mut row = vec![d.feature_names()[j].clone(), g17(result.phi[j])];
        if let Some(props) = &proportions {
            row.push(g17(props[j]));
        }
        rows.push(row);
    }
    let header: &[&str] = if proportions.is_some() {
        &["feature", "phi", "proportion"]
    } else {
        &["feature", "phi"]
    };
    let mut buf = Vec::new();
    write_table(&mut buf, header, &rows)?;
    write_output(&args.out, &buf)?;

    if let Some(path) = &args.json {
        let doc = serde_json::json!({
            "config": {
                "mode": match cfg.mode { ShapleyMode::Exact => "exact", ShapleyMode::Approx => "approx" },
                "m_feat": cfg.m_feat,
                "m_obs": cfg.m_obs,
                "seed": cfg.seed,
                "loss": LossFn::from(args.loss).name(),
            },
            "features": d.feature_names(),
            "phi": result.phi,
            "std_err": result.std_err,
            "total": result.total,
            "proportions": proportions,
        });
        std::fs::write(path, format!("{doc}\n"))?;
    }
    let sum: f64 = result.phi.iter().sum();
    Ok(format!(
        "shapley ({}): sum(phi) = {}, v(P) = {}",
        match cfg.mode {
            ShapleyMode::Exact => "exact",
            ShapleyMode::Approx => "approx",
        },
        g17(sum),
        g17(result.total)
    ))
}

fn cmd_shapley_effect(args: ShapleyEffectArgs, threads: usize) -> Result<String> {
    let d = args.data.load()?;
    let seed = args.seed.unwrap();
    let model = resolve_model(&args.model, &args.data, &d, seed, threads)?;
    if args.row >= d.n() {
        return Err(Error::Usage(format!(
            "--row {} out of range for {} rows",
            args.row,
            d.n()
        )));
    }
    let x = d.row(args.row).to_vec();
    let mode = match args.mode {
        EffectModeArg::Exact => EffectMode::Exact,
        EffectModeArg::Sampled => EffectMode::Sampled { m: args.samples, seed },
    };
    let result = shapley_effect(model.predictor(), &d, &x, mode)?;
    let rows: Vec<Vec<String>> = (0..d.p())
        .map(|j| vec![d.feature_names()[j].clone(), g17(result.phi[j])])
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["feature", "phi"], &rows)?;
    write_output(&args.out, &buf)?;
    let sum: f64 = result.phi.iter().sum();
    Ok(format!(
        "shapley-effect row {}: baseline = {}, sum(phi) = {}",
        args.row,
        g17(result.baseline),
        g17(sum)
    ))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_simulate(args: SimArgs, threads: usize) -> Result<String> {
    let seed = args.seed.unwrap();
    match args.which {
        SimWhich::Sim1 => {
            let report = run_sim1_threaded(args.train_n, args.test_n, args.reps, seed, threads)?;
            print!("{}", report::sim1_text(&report));
            if let Some(prefix) = &args.out_prefix {
                let base = prefix.display();
                std::fs::write(
                    format!("{base}_summary.csv"),
                    report::sim1_summary_csv(&report)?,
                )?;
                std::fs::write(format!("{base}_reps.csv"), report::sim1_reps_csv(&report)?)?;
                for curve in &report.curves {
                    let mut buf = Vec::new();
                    write_curves_csv(&mut buf, &[(None, curve)])?;
                    std::fs::write(format!("{base}_{}.csv", sanitize(&curve.label)), buf)?;
                }
            }
            Ok(format!("simulate sim1: {} reps done", report.reps))
        }
        SimWhich::Sim2 => {
            let report = run_sim2_threaded(args.train_n, args.test_n, args.reps, seed, threads)?;
            print!("{}", report::sim2_text(&report));
            if let Some(prefix) = &args.out_prefix {
                let base = prefix.display();
                std::fs::write(
                    format!("{base}_ratios.csv"),
                    report::sim2_ratios_csv(&report)?,
                )?;
                std::fs::write(format!("{base}_reps.csv"), report::sim2_reps_csv(&report)?)?;
                std::fs::write(
                    format!("{base}_breakdown.csv"),
                    report::sim2_breakdown_csv(&report)?,
                )?;
            }
            Ok(format!("simulate sim2: {} reps done", report.reps))
        }
    }
}

fn cmd_plot(args: PlotArgs) -> Result<String> {
    let mut curves = Vec::new();
    for path in &args.curves {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "curve".into());
        for (obs, mut curve) in csvio::read_curves_csv(path)? {
            let emphasis = obs.is_none();
            curve.label = match obs {
                Some(i) => format!("{stem} obs {i}"),
                None => stem.clone(),
            };
            curves.push(PlotCurve { curve, emphasis });
        }
    }
    let spec = PlotSpec {
        curves,
        title: args.title.clone(),
        x_label: args.x_label.clone(),
        y_label: args.y_label.clone(),
        highlight_extremes: args.highlight_extremes,
        histogram: args.histogram,
        x_ticks: None,
    };
    let svg = render_line_plot(&spec)?;
    std::fs::write(&args.out, svg.as_bytes())?;
    Ok(format!("plot: {} curves -> {}", spec.curves.len(), args.out.display()))
}
