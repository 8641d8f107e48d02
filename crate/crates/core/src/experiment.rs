//! Experiment harness: builds each example problem with regenerated
//! observed data, runs the per-parameter matrix (full-summary gold
//! standard, marginal-only, pilot, pilot plus marginal continuation) and
//! persists populations, traces, density grids, a comparison report and a
//! manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    kde_with_bandwidth, marginal_record, silverman_bandwidth, table_mass_in_ball, ComparisonReport, ParamComparison,
    Probe, TV_GRID_POINTS,
};
use crate::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::io::{git_describe, population_csv, read_population_csv, ArtifactWriter, FileEntry, PopulationTable};
use crate::localize::{localize, pilot_run, LocalizeConfig};
use crate::models::bivgandk::simulate_bivgandk;
use crate::models::{
    BivGandKModel, Composed, Design, GandKModel, GandKOctileProblem, Ma2Model, Model, NoiseKind, NormalHyper,
    NormalModel, Problem, RegressionModel, RegressionPrior,
};
use crate::reference::{
    linspace, ma2_alternate_root, normal_exact_marginals, AlternateRoot, LaplaceIdealized, NormalMarginals,
};
use crate::rng::{tag, RandomStream};
use crate::smc::{calibrate_metric, smc_abc, smc_abc_marginal, SmcConfig, SmcTrace, StopReason, StoppingRule};
use crate::summaries::{
    BivariateSummaries, NormalSufficient, OctileSummaries, RegressionSummaries, SummarySet, SummaryStatistic,
};
use crate::types::{names, MarginalSubset, ParamVector, Population, SummaryVector};

/// Stream id of observed-data generation, kept apart from every inference
/// stream even when the two seeds coincide.
const DATA_STREAM: u64 = 0xDA7A;
pub const GOLD_LABEL: &str = "gold";
pub const PILOT_LABEL: &str = "pilot";
/// Series length used by `reduced_n` for the MA(2) and g-and-k examples.
pub const REDUCED_N: usize = 2000;
/// Radius of the ball probe around the second MA(2) root.
pub const ALT_ROOT_RADIUS: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Normal,
    NormalIdealized,
    Ma2,
    Gandk,
    Bivgandk,
    Regression,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        Self::Normal,
        Self::NormalIdealized,
        Self::Ma2,
        Self::Gandk,
        Self::Bivgandk,
        Self::Regression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::NormalIdealized => "normal-idealized",
            Self::Ma2 => "ma2",
            Self::Gandk => "gandk",
            Self::Bivgandk => "bivgandk",
            Self::Regression => "regression",
        }
    }

    pub fn default_theta(self) -> Vec<f64> {
        match self {
            Self::Normal | Self::NormalIdealized => vec![0.0, 1.0],
            Self::Ma2 => vec![0.9, -0.05],
            Self::Gandk => vec![3.0, 1.0, 2.0, 0.5],
            Self::Bivgandk => vec![3.0, 1.0, 1.0, 0.5, 4.0, 0.5, 2.0, 0.5, 0.6],
            Self::Regression => vec![1.0, 0.8, -0.5, 1.5],
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            Self::Normal | Self::NormalIdealized => 10,
            Self::Ma2 | Self::Gandk => 10_000,
            Self::Bivgandk => 1000,
            Self::Regression => crate::models::regression::DESIGN_ROWS,
        }
    }

    pub fn default_pilot_threshold(self) -> f64 {
        match self {
            Self::Ma2 => 0.30,
            _ => 0.20,
        }
    }

    /// Fixed per-experiment data seed.
    pub fn default_data_seed(self) -> u64 {
        match self {
            Self::Normal | Self::NormalIdealized => 2,
            Self::Ma2 => 41,
            Self::Gandk => 43,
            Self::Bivgandk => 47,
            Self::Regression => 53,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

fn default_metric_sims() -> usize {
    2000
}

/// A complete experiment description; everything written to the run
/// directory is a function of this value (plus `git describe`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub n_obs: Option<usize>,
    #[serde(default)]
    pub true_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub smc: SmcConfig,
    #[serde(default)]
    pub pilot_acc_threshold: Option<f64>,
    /// Prior-predictive simulations used to calibrate the distance weights.
    #[serde(default = "default_metric_sims")]
    pub metric_sims: usize,
    /// Restricts the marginal runs to these parameters; all when absent.
    #[serde(default)]
    pub params: Option<Vec<String>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            data_seed: None,
            n_obs: None,
            true_theta: None,
            smc: SmcConfig::default(),
            pilot_acc_threshold: None,
            metric_sims: default_metric_sims(),
            params: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Uses the reduced series length for MA(2) and g-and-k.
    pub fn reduced_n(mut self) -> Self {
        if matches!(self.experiment, ExperimentId::Ma2 | ExperimentId::Gandk) {
            self.n_obs = Some(REDUCED_N);
        }
        self
    }

    /// Copy with every optional field filled by its experiment default.
    pub fn resolved(&self) -> Result<Self> {
        let id = self.experiment;
        let c = Self {
            data_seed: Some(self.data_seed.unwrap_or(id.default_data_seed())),
            n_obs: Some(self.n_obs.unwrap_or(id.default_n())),
            true_theta: Some(self.true_theta.clone().unwrap_or_else(|| id.default_theta())),
            pilot_acc_threshold: Some(self.pilot_acc_threshold.unwrap_or(id.default_pilot_threshold())),
            ..self.clone()
        };
        c.smc.validate()?;
        LocalizeConfig::new(c.pilot_acc_threshold.unwrap_or_default())
            .with_final(c.smc.stop_acc_rate)
            .validate()?;
        if c.metric_sims < 10 {
            return Err(Error::InvalidArgument(
                "metric calibration needs at least 10 simulations".into(),
            ));
        }
        if id == ExperimentId::Regression && c.n_obs != Some(id.default_n()) {
            return Err(Error::InvalidArgument(format!(
                "the regression design has {} rows",
                id.default_n()
            )));
        }
        Ok(c)
    }

    fn data_seed(&self) -> u64 {
        self.data_seed.unwrap_or(self.experiment.default_data_seed())
    }

    fn theta(&self) -> Vec<f64> {
        self.true_theta
            .clone()
            .unwrap_or_else(|| self.experiment.default_theta())
    }

    fn n(&self) -> usize {
        self.n_obs.unwrap_or(self.experiment.default_n())
    }
}

/// Observed dataset in a plot-ready column layout.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservedData {
    Univariate(Vec<f64>),
    Bivariate { x1: Vec<f64>, x2: Vec<f64> },
}

impl ObservedData {
    pub fn to_csv(&self) -> String {
        match self {
            Self::Univariate(y) => {
                std::iter::once("y".to_string())
                    .chain(y.iter().map(|v| v.to_string()))
                    .collect::<Vec<_>>()
                    .join("\n")
                    + "\n"
            }
            Self::Bivariate { x1, x2 } => {
                std::iter::once("x1,x2".to_string())
                    .chain(x1.iter().zip(x2).map(|(a, b)| format!("{a},{b}")))
                    .collect::<Vec<_>>()
                    .join("\n")
                    + "\n"
            }
        }
    }
}

/// A ready-to-run problem with its observed data.
pub struct Setup {
    pub problem: Box<dyn Problem>,
    pub set: SummarySet,
    pub observed: SummaryVector,
    pub data: ObservedData,
    pub true_theta: ParamVector,
    /// Marginal-only runs beyond one per parameter: (label, subset).
    pub extra_marginal: Vec<(String, MarginalSubset)>,
    pub normal_hyper: Option<NormalHyper>,
}

impl fmt::Debug for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Setup")
            .field("set", &self.set)
            .field("observed", &self.observed)
            .field("true_theta", &self.true_theta)
            .finish_non_exhaustive()
    }
}

fn observe<M: Model, S: SummaryStatistic<M::Data>>(
    model: &M,
    summary: &S,
    theta: &[f64],
    data_stream: &RandomStream,
) -> Result<(M::Data, SummaryVector)> {
    let data = model.simulate(theta, &mut data_stream.rng())?;
    let s = summary.summarize(&data)?;
    Ok((data, s))
}

/// Builds the problem for `config` and generates its observed data.
pub fn build_setup(config: &ExperimentConfig) -> Result<Setup> {
    let id = config.experiment;
    let theta = config.theta();
    let n = config.n();
    let data_stream = RandomStream::new(config.data_seed(), DATA_STREAM);
    let mut extra_marginal = Vec::new();
    let mut normal_hyper = None;
    let (problem, set, observed, data, param_names): (Box<dyn Problem>, SummarySet, SummaryVector, ObservedData, _) =
        match id {
            ExperimentId::Normal | ExperimentId::NormalIdealized => {
                let hyper = NormalHyper::default();
                normal_hyper = Some(hyper);
                let model = NormalModel::new(n, hyper)?;
                let pn = model.param_names();
                let y = model.simulate(&theta, &mut data_stream.rng())?;
                if id == ExperimentId::Normal {
                    let s = NormalSufficient.summarize(&y)?;
                    (
                        Box::new(Composed::new(model, NormalSufficient)),
                        SummarySet::normal(),
                        s,
                        ObservedData::Univariate(y),
                        pn,
                    )
                } else {
                    let stat = LaplaceIdealized { hyper };
                    let s = stat.summarize(&y)?;
                    let set = SummarySet::new(
                        stat.names(),
                        vec![
                            ("mu".into(), vec!["mu_mode".into(), "mu_var".into()]),
                            ("phi".into(), vec!["phi_mode".into(), "phi_var".into()]),
                        ],
                    )?;
                    extra_marginal.push((
                        "only_mu_mode".to_string(),
                        MarginalSubset {
                            param: "mu".into(),
                            indices: vec![0],
                        },
                    ));
                    (
                        Box::new(Composed::new(model, stat)),
                        set,
                        s,
                        ObservedData::Univariate(y),
                        pn,
                    )
                }
            }
            ExperimentId::Ma2 => {
                let model = Ma2Model::new(n)?;
                let stat = crate::summaries::Autocovariances::default();
                let (y, s) = observe(&model, &stat, &theta, &data_stream)?;
                let pn = model.param_names();
                (
                    Box::new(Composed::new(model, stat)),
                    SummarySet::ma2(),
                    s,
                    ObservedData::Univariate(y),
                    pn,
                )
            }
            ExperimentId::Gandk => {
                let model = GandKModel::new(n)?;
                let (y, s) = observe(&model, &OctileSummaries, &theta, &data_stream)?;
                let pn = model.param_names();
                (
                    Box::new(GandKOctileProblem::new(model)),
                    SummarySet::gandk(),
                    s,
                    ObservedData::Univariate(y),
                    pn,
                )
            }
            ExperimentId::Bivgandk => {
                let model = BivGandKModel::new(n)?;
                let xy = simulate_bivgandk(&theta, n, &mut data_stream.rng())?;
                let s = BivariateSummaries.summarize(&xy)?;
                let pn = model.param_names();
                (
                    Box::new(Composed::new(model, BivariateSummaries)),
                    SummarySet::bivgandk(),
                    s,
                    ObservedData::Bivariate { x1: xy.x1, x2: xy.x2 },
                    pn,
                )
            }
            ExperimentId::Regression => {
                let design = Arc::new(Design::bundled());
                let truth = RegressionModel::new(
                    design.clone(),
                    NoiseKind::contaminated_default(),
                    RegressionPrior::default(),
                );
                let stat = RegressionSummaries::new(design.clone());
                let (y, s) = observe(&truth, &stat, &theta, &data_stream)?;
                let model = RegressionModel::new(design, NoiseKind::Gaussian, RegressionPrior::default());
                let pn = model.param_names();
                (
                    Box::new(Composed::new(model, stat)),
                    SummarySet::regression(),
                    s,
                    ObservedData::Univariate(y),
                    pn,
                )
            }
        };
    set.check_covers(&param_names)?;
    Ok(Setup {
        true_theta: ParamVector::new(theta, param_names)?,
        problem,
        set,
        observed,
        data,
        extra_marginal,
        normal_hyper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Gold,
    MarginalOnly,
    Pilot,
    PilotPlus,
}

/// Bookkeeping for one run, echoed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub kind: RunKind,
    #[serde(default)]
    pub param: Option<String>,
    pub iterations: usize,
    pub simulations: u64,
    pub stop_reason: StopReason,
    /// Full-summary tolerance; absent when the full summaries are unconstrained.
    #[serde(default)]
    pub epsilon_full: Option<f64>,
    #[serde(default)]
    pub epsilon_marginal: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub population: Population,
    pub trace: SmcTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: String,
    #[serde(default)]
    pub error: Option<String>,
    pub experiment: ExperimentId,
    pub seed: u64,
    pub data_seed: u64,
    pub git_describe: String,
    pub config: ExperimentConfig,
    pub true_theta: Vec<f64>,
    pub observed_summary_names: Vec<String>,
    pub observed_summaries: Vec<f64>,
    pub runs: Vec<RunSummary>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub dir: Option<PathBuf>,
    pub setup: Setup,
    pub metric: DistanceMetric,
    pub runs: Vec<RunOutcome>,
    pub report: ComparisonReport,
    pub references: Option<NormalMarginals>,
    pub manifest: Manifest,
}

impl ExperimentResult {
    pub fn run(&self, label: &str) -> Result<&RunOutcome> {
        self.runs
            .iter()
            .find(|r| r.summary.label == label)
            .ok_or_else(|| Error::MissingLabel(label.to_string()))
    }

    pub fn column(&self, label: &str, param: &str) -> Result<Vec<f64>> {
        self.run(label)?.population.column(param)
    }
}

pub fn only_label(param: &str) -> String {
    format!("only_{param}")
}

pub fn pilot_plus_label(param: &str) -> String {
    format!("pilot_plus_{param}")
}

fn summarize(label: String, kind: RunKind, param: Option<String>, pop: Population, trace: SmcTrace) -> RunOutcome {
    RunOutcome {
        summary: RunSummary {
            label,
            kind,
            param,
            iterations: trace.records.len(),
            simulations: trace.simulations,
            stop_reason: trace.stop_reason,
            epsilon_full: Some(pop.epsilon_full).filter(|e| e.is_finite()),
            epsilon_marginal: pop.epsilon_marginal,
        },
        population: pop,
        trace,
    }
}

/// One run of the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunRequest {
    Gold,
    /// Marginal-only run, named by parameter or by an extra subset label.
    MarginalOnly(String),
    Pilot,
    PilotPlus(String),
}

/// The full matrix, in order: gold, marginal-only per parameter (plus any
/// extra subsets), pilot, pilot plus continuation per parameter.
pub fn matrix_requests(config: &ExperimentConfig, setup: &Setup) -> Result<Vec<RunRequest>> {
    let params: Vec<String> = match &config.params {
        Some(p) => {
            setup.set.check_covers(p)?;
            p.clone()
        }
        None => setup.set.params().map(str::to_string).collect(),
    };
    let mut req = vec![RunRequest::Gold];
    req.extend(params.iter().cloned().map(RunRequest::MarginalOnly));
    req.extend(
        setup
            .extra_marginal
            .iter()
            .filter(|(_, s)| params.contains(&s.param))
            .map(|(l, _)| RunRequest::MarginalOnly(l.clone())),
    );
    req.push(RunRequest::Pilot);
    req.extend(params.into_iter().map(RunRequest::PilotPlus));
    Ok(req)
}

fn marginal_subset(setup: &Setup, name: &str) -> Result<(String, MarginalSubset)> {
    if let Some((label, subset)) = setup.extra_marginal.iter().find(|(l, _)| l == name) {
        return Ok((label.clone(), subset.clone()));
    }
    let subset = MarginalSubset {
        param: name.to_string(),
        indices: setup.set.indices(name)?,
    };
    Ok((only_label(name), subset))
}

/// Executes `requests` in order; a continuation without an earlier pilot
/// request runs the pilot first (and reports it). `on_run` sees each run
/// as it completes.
pub fn execute_runs(
    config: &ExperimentConfig,
    setup: &Setup,
    metric: &DistanceMetric,
    requests: &[RunRequest],
    mut on_run: impl FnMut(&RunOutcome) -> Result<()>,
) -> Result<Vec<RunOutcome>> {
    let root = RandomStream::root(config.seed);
    let problem = setup.problem.as_ref();
    let smc = &config.smc;
    let stop = StoppingRule::from_config(smc);
    let p0 = config
        .pilot_acc_threshold
        .unwrap_or(config.experiment.default_pilot_threshold());
    let loc = LocalizeConfig::new(p0).with_final(smc.stop_acc_rate);
    loc.validate()?;
    let mut runs = Vec::new();
    let mut pilot = None;
    let mut emit = |run: RunOutcome, runs: &mut Vec<RunOutcome>| -> Result<()> {
        on_run(&run)?;
        runs.push(run);
        Ok(())
    };
    for request in requests {
        match request {
            RunRequest::Gold => {
                let (pop, trace) = smc_abc(problem, &setup.observed, metric, smc, stop, &root.derive(tag::GOLD))?;
                emit(summarize(GOLD_LABEL.into(), RunKind::Gold, None, pop, trace), &mut runs)?;
            }
            RunRequest::MarginalOnly(name) => {
                let (label, subset) = marginal_subset(setup, name)?;
                let param = subset.param.clone();
                let stream = root.derive(tag::MARGINAL_ONLY).derive_label(&label);
                let (pop, trace) = smc_abc_marginal(problem, &setup.observed, metric, subset, smc, stop, &stream)?;
                emit(
                    summarize(label, RunKind::MarginalOnly, Some(param), pop, trace),
                    &mut runs,
                )?;
            }
            RunRequest::Pilot | RunRequest::PilotPlus(_) if pilot.is_none() => {
                let p = pilot_run(problem, &setup.observed, metric, smc, p0, &root)?;
                emit(
                    summarize(
                        PILOT_LABEL.into(),
                        RunKind::Pilot,
                        None,
                        p.population.clone(),
                        p.trace.clone(),
                    ),
                    &mut runs,
                )?;
                pilot = Some(p);
                if let RunRequest::PilotPlus(param) = request {
                    let (pop, trace) = localize(
                        pilot.as_ref().expect("pilot just ran"),
                        &setup.set,
                        param,
                        &setup.observed,
                        problem,
                        smc,
                        &loc,
                        &root,
                    )?;
                    emit(
                        summarize(
                            pilot_plus_label(param),
                            RunKind::PilotPlus,
                            Some(param.clone()),
                            pop,
                            trace,
                        ),
                        &mut runs,
                    )?;
                }
            }
            RunRequest::Pilot => {}
            RunRequest::PilotPlus(param) => {
                let p = pilot.as_ref().expect("pilot present");
                let (pop, trace) = localize(p, &setup.set, param, &setup.observed, problem, smc, &loc, &root)?;
                emit(
                    summarize(
                        pilot_plus_label(param),
                        RunKind::PilotPlus,
                        Some(param.clone()),
                        pop,
                        trace,
                    ),
                    &mut runs,
                )?;
            }
        }
    }
    Ok(runs)
}

/// Per-parameter TV of every labelled marginal against the gold marginal.
pub fn compare_tables(gold_label: &str, tables: &[(String, PopulationTable)]) -> Result<ComparisonReport> {
    let gold = &tables
        .iter()
        .find(|(l, _)| l == gold_label)
        .ok_or_else(|| Error::MissingLabel(gold_label.to_string()))?
        .1;
    let mut params = Vec::new();
    for param in gold.param_names.iter() {
        let g = gold.column(param)?;
        let records = tables
            .iter()
            .map(|(label, t)| marginal_record(label, &t.column(param)?, &g))
            .collect::<Result<_>>()?;
        params.push(ParamComparison {
            param: param.clone(),
            records,
        });
    }
    Ok(ComparisonReport {
        gold_label: gold_label.to_string(),
        params,
    })
}

/// Reads `populations/<label>.csv` for the gold and other labels under
/// `run_dir` and compares them.
pub fn compare(run_dir: &Path, gold_label: &str, other_labels: &[String]) -> Result<ComparisonReport> {
    let mut tables = Vec::new();
    for label in std::iter::once(gold_label).chain(other_labels.iter().map(String::as_str)) {
        let path = run_dir.join("populations").join(format!("{label}.csv"));
        if !path.is_file() {
            return Err(Error::MissingLabel(label.to_string()));
        }
        tables.push((label.to_string(), read_population_csv(&std::fs::read_to_string(path)?)?));
    }
    compare_tables(gold_label, &tables)
}

/// Marginal KDEs of every run on one shared grid per parameter.
fn kde_grids(runs: &[RunOutcome], param: &str) -> Result<Vec<(String, String)>> {
    let cols: Vec<(String, Vec<f64>)> = runs
        .iter()
        .map(|r| Ok((r.summary.label.clone(), r.population.column(param)?)))
        .collect::<Result<_>>()?;
    let mut h_max = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, c) in &cols {
        h_max = h_max.max(silverman_bandwidth(c)?);
        lo = c.iter().cloned().fold(lo, f64::min);
        hi = c.iter().cloned().fold(hi, f64::max);
    }
    let grid = linspace(lo - 3.0 * h_max, hi + 3.0 * h_max, TV_GRID_POINTS);
    cols.iter()
        .map(|(label, c)| {
            let h = silverman_bandwidth(c)?;
            Ok((label.clone(), kde_with_bandwidth(c, &grid, h)?.to_csv()))
        })
        .collect()
}

fn manifest_json(m: &Manifest) -> Result<String> {
    Ok(serde_json::to_string_pretty(m)? + "\n")
}

/// Runs the full matrix for `config`, writing artifacts when an output
/// directory is configured. On failure the files written so far are kept
/// and the manifest records the error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_requests(config, None)
}

/// As [`run_experiment`] but running only `requests` (the full matrix when
/// `None`). The comparison report needs the gold run and is empty without it.
pub fn run_requests(config: &ExperimentConfig, requests: Option<&[RunRequest]>) -> Result<ExperimentResult> {
    let config = config.resolved()?;
    let setup = build_setup(&config)?;
    let mut writer = match &config.output_dir {
        Some(dir) => Some(ArtifactWriter::new(dir)?),
        None => None,
    };
    let mut manifest = Manifest {
        status: "running".into(),
        error: None,
        experiment: config.experiment,
        seed: config.seed,
        data_seed: config.data_seed(),
        git_describe: git_describe(),
        config: config.clone(),
        true_theta: setup.true_theta.values.clone(),
        observed_summary_names: setup.observed.names.to_vec(),
        observed_summaries: setup.observed.values.clone(),
        runs: Vec::new(),
        files: Vec::new(),
    };
    let outcome = run_stages(&config, &setup, requests, writer.as_mut(), &mut manifest);
    if let Some(w) = &writer {
        manifest.files = w.files().to_vec();
    }
    match outcome {
        Ok((metric, runs, report, references)) => {
            manifest.status = "ok".into();
            if let Some(w) = &writer {
                std::fs::write(w.root().join("manifest.json"), manifest_json(&manifest)?)?;
            }
            Ok(ExperimentResult {
                dir: config.output_dir.clone(),
                setup,
                metric,
                runs,
                report,
                references,
                manifest,
            })
        }
        Err(e) => {
            manifest.status = "error".into();
            manifest.error = Some(e.to_string());
            if let Some(w) = &writer {
                std::fs::write(w.root().join("manifest.json"), manifest_json(&manifest)?)?;
            }
            Err(e)
        }
    }
}

type Stages = (
    DistanceMetric,
    Vec<RunOutcome>,
    ComparisonReport,
    Option<NormalMarginals>,
);

fn run_stages(
    config: &ExperimentConfig,
    setup: &Setup,
    requests: Option<&[RunRequest]>,
    mut writer: Option<&mut ArtifactWriter>,
    manifest: &mut Manifest,
) -> Result<Stages> {
    if let Some(w) = writer.as_deref_mut() {
        w.write("observed/data.csv", &setup.data.to_csv())?;
        w.write(
            "observed/summaries.json",
            &(serde_json::to_string_pretty(&serde_json::json!({
                "true_theta": setup.true_theta.values,
                "param_names": setup.true_theta.names.to_vec(),
                "summary_names": setup.observed.names.to_vec(),
                "summaries": setup.observed.values,
            }))? + "\n"),
        )?;
    }
    let references = match (&setup.data, setup.normal_hyper) {
        (ObservedData::Univariate(y), Some(h)) => {
            let m = normal_exact_marginals(y, &h)?;
            if let Some(w) = writer.as_deref_mut() {
                for (name, g) in m.named() {
                    w.write(&format!("reference/{name}.csv"), &g.to_csv())?;
                }
            }
            Some(m)
        }
        _ => None,
    };
    let metric = calibrate_metric(
        setup.problem.as_ref(),
        config.metric_sims,
        &RandomStream::root(config.seed),
    )?;
    let requests = match requests {
        Some(r) => r.to_vec(),
        None => matrix_requests(config, setup)?,
    };
    let runs = execute_runs(config, setup, &metric, &requests, |run| {
        manifest.runs.push(run.summary.clone());
        if let Some(w) = writer.as_deref_mut() {
            w.write(
                &format!("populations/{}.csv", run.summary.label),
                &population_csv(&run.population),
            )?;
            w.write(&format!("traces/{}.csv", run.summary.label), &run.trace.to_csv())?;
        }
        Ok(())
    })?;

    let tables: Vec<(String, PopulationTable)> = runs
        .iter()
        .map(|r| (r.summary.label.clone(), PopulationTable::from(&r.population)))
        .collect();
    let mut report = if tables.iter().any(|(l, _)| l == GOLD_LABEL) {
        compare_tables(GOLD_LABEL, &tables)?
    } else {
        ComparisonReport {
            gold_label: GOLD_LABEL.into(),
            params: Vec::new(),
        }
    };
    if config.experiment == ExperimentId::Ma2 && !report.params.is_empty() {
        if let AlternateRoot::Root(center) = ma2_alternate_root(&setup.true_theta.values)? {
            add_ball_probe(
                &mut report,
                &tables,
                "theta1",
                "mass_near_alternate_root",
                &center,
                ALT_ROOT_RADIUS,
            )?;
        }
    }
    if let Some(w) = writer {
        for param in setup.true_theta.names.iter() {
            for (label, csv) in kde_grids(&runs, param)? {
                w.write(&format!("grids/{param}/{label}.csv"), &csv)?;
            }
        }
        w.write("report.json", &(report.to_json()? + "\n"))?;
    }
    Ok((metric, runs, report, references))
}

fn add_ball_probe(
    report: &mut ComparisonReport,
    tables: &[(String, PopulationTable)],
    param: &str,
    name: &str,
    center: &ParamVector,
    radius: f64,
) -> Result<()> {
    let comparison = report
        .params
        .iter_mut()
        .find(|p| p.param == param)
        .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
    for (record, (_, table)) in comparison.records.iter_mut().zip(tables) {
        record.probes.push(Probe {
            name: name.to_string(),
            value: table_mass_in_ball(table, center, radius)?,
        });
    }
    Ok(())
}

/// Names of the parameters of an experiment, in model order.
pub fn param_names(id: ExperimentId) -> Vec<String> {
    let n: &[&str] = match id {
        ExperimentId::Normal | ExperimentId::NormalIdealized => &["mu", "phi"],
        ExperimentId::Ma2 => &["theta1", "theta2"],
        ExperimentId::Gandk => &["a", "b", "g", "k"],
        ExperimentId::Bivgandk => &["a1", "b1", "g1", "k1", "a2", "b2", "g2", "k2", "r"],
        ExperimentId::Regression => &["beta1", "beta2", "beta3", "sigma"],
    };
    names(n).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(id: ExperimentId) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(id, 7).reduced_n();
        c.smc.n_particles = 100;
        c.smc.max_simulations = 6000;
        c.metric_sims = 200;
        c
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{id}\""));
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn config_json_defaults_and_overrides() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"ma2","seed":5,"smc":{"n_particles":200}}"#).unwrap();
        assert_eq!(c.smc.n_particles, 200);
        assert_eq!(c.smc.drop_fraction, 0.5);
        let r = c.resolved().unwrap();
        assert_eq!(r.pilot_acc_threshold, Some(0.30));
        assert_eq!(r.true_theta, Some(vec![0.9, -0.05]));
        assert_eq!(r.n_obs, Some(10_000));
        assert_eq!(
            ExperimentConfig::from_json(&serde_json::to_string(&r).unwrap()).unwrap(),
            r
        );
        assert!(ExperimentConfig::from_json(r#"{"experiment":"ma2","seed":5,"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"ma2"}"#).is_err());
        assert_eq!(ExperimentConfig::new(ExperimentId::Gandk, 1).reduced_n().n(), REDUCED_N);
        assert_eq!(
            ExperimentConfig::new(ExperimentId::Gandk, 1)
                .resolved()
                .unwrap()
                .pilot_acc_threshold,
            Some(0.20)
        );
    }

    #[test]
    fn setups_match_their_summary_sets() {
        for id in ExperimentId::ALL {
            let s = build_setup(&small(id)).unwrap();
            assert_eq!(s.true_theta.names.to_vec(), param_names(id), "{id}");
            assert_eq!(s.observed.names, s.problem.summary_names());
            assert!(s.observed.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn data_seed_is_separate_from_inference_seed() {
        let a = build_setup(&small(ExperimentId::Ma2)).unwrap();
        let mut other = small(ExperimentId::Ma2);
        other.seed = 999;
        assert_eq!(build_setup(&other).unwrap().observed, a.observed);
        other.data_seed = Some(1);
        assert_ne!(build_setup(&other).unwrap().observed, a.observed);
    }

    #[test]
    fn ma2_matrix_has_six_approximations() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentId::Ma2);
        c.output_dir = Some(dir.path().to_path_buf());
        let r = run_experiment(&c).unwrap();
        let labels: Vec<&str> = r.runs.iter().map(|x| x.summary.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "gold",
                "only_theta1",
                "only_theta2",
                "pilot",
                "pilot_plus_theta1",
                "pilot_plus_theta2"
            ]
        );
        assert_eq!(r.report.tv("theta1", "gold"), Some(0.0));
        assert!(r
            .report
            .param("theta1")
            .unwrap()
            .records
            .iter()
            .all(|x| x.probes.len() == 1));
        let m: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.status, "ok");
        for f in &m.files {
            let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
            assert_eq!(crate::io::sha256_hex(&bytes), f.sha256, "{}", f.path);
        }
        assert!(m.files.iter().any(|f| f.path == "grids/theta2/pilot.csv"));
        let again = compare(dir.path(), "gold", &["pilot".into(), "only_theta2".into()]).unwrap();
        assert_eq!(again.tv("theta2", "pilot"), r.report.tv("theta2", "pilot"));
        assert!(matches!(
            compare(dir.path(), "gold", &["nope".into()]),
            Err(Error::MissingLabel(_))
        ));
    }

    #[test]
    fn normal_writes_reference_grids() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentId::Normal);
        c.output_dir = Some(dir.path().to_path_buf());
        c.params = Some(vec!["mu".into()]);
        let r = run_experiment(&c).unwrap();
        assert!(r.references.is_some());
        let n = std::fs::read_dir(dir.path().join("reference")).unwrap().count();
        assert_eq!(n, 4);
        assert!(r.run("pilot_plus_phi").is_err());
    }

    #[test]
    fn failure_leaves_error_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentId::Ma2);
        c.output_dir = Some(dir.path().to_path_buf());
        // the gold run cannot even fill its first population
        c.smc.max_simulations = 50;
        assert!(run_experiment(&c).is_err());
        let m: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.status, "error");
        assert!(m.error.is_some());
        assert!(m.files.iter().any(|f| f.path == "observed/data.csv"));
    }
}
