//! Experiment runner behind the `cznd` command line tool.
//!
//! Initial states come from `ChaCha8Rng::seed_from_u64(seed)` with the stream
//! set to the run index, so run `k` starts from the same `X₀` whatever the
//! model or gain. Runs execute on the rayon pool; files are written afterwards
//! by the calling thread in run order.

pub mod csvio;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::RVector;
use crate::models::{Gain, Linear, ModelError, ModelKind, ModelSystem};
use crate::ode::{integrate, IntegratorConfig, IntegratorStats, OdeError, Trajectory};
use crate::problem::{self, load_problem, ProblemError, TvsscmeProblem, UniquenessReport};

pub use csvio::{log_residual, read_trajectory, state_columns, write_table, write_trajectory, Metadata};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot load problem: {0}")]
    ProblemLoad(#[from] ProblemError),
    #[error("all {runs} runs failed; first error: {first}")]
    AllRunsFailed { runs: usize, first: String },
    #[error("malformed CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 2 usage, 3 problem load, 4 every run failed, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Model(_) => 2,
            HarnessError::ProblemLoad(_) => 3,
            HarnessError::AllRunsFailed { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// `example3` or a path to a `.tvp` file.
pub fn resolve_problem(source: &str) -> Result<TvsscmeProblem> {
    if source == "example3" {
        Ok(problem::example3())
    } else {
        Ok(load_problem(source)?)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub problem: String,
    pub model: ModelKind,
    pub gamma: Gain,
    pub span: (f64, f64),
    pub runs: usize,
    pub init_range: f64,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    /// Output path prefix; no files are written when `None`.
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(model: ModelKind, gamma: Gain) -> Self {
        Self {
            problem: "example3".into(),
            model,
            gamma,
            span: (0.0, 10.0),
            runs: 8,
            init_range: 5.0,
            seed: 0,
            integrator: IntegratorConfig::default(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::Usage("--runs must be at least 1".into()));
        }
        if !(self.init_range > 0.0) {
            return Err(HarnessError::Usage("initial range must be positive".into()));
        }
        if !(self.span.1 > self.span.0) {
            return Err(HarnessError::Usage(format!(
                "span end must exceed start, got {}:{}",
                self.span.0, self.span.1
            )));
        }
        self.integrator
            .validate(self.span.0, self.span.1)
            .map_err(|e| HarnessError::Usage(e.to_string()))
    }
}

/// `X₀` for run `index`: entries uniform in `[-range, range]`.
pub fn initial_state(seed: u64, index: usize, dim: usize, range: f64) -> RVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    RVector((0..dim).map(|_| rng.gen_range(-range..=range)).collect())
}

/// Tolerance scale at one sample: `‖(abs_tol + rel_tol·|x_i|)_i‖₂`.
pub fn sample_tolerance(cfg: &IntegratorConfig, reference: &[f64]) -> f64 {
    reference
        .iter()
        .map(|x| (cfg.abs_tol + cfg.rel_tol * x.abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Per-sample bands `10 · sample_tolerance` along the exact solution, or
/// along `fallback` states when the problem has none.
pub fn tolerance_band(p: &TvsscmeProblem, cfg: &IntegratorConfig, taus: &[f64], fallback: &[RVector]) -> Vec<f64> {
    taus.iter()
        .enumerate()
        .map(|(k, &t)| {
            let reference = match p.exact_state(t) {
                Some(Ok(x)) => x,
                _ => fallback[k].clone(),
            };
            10.0 * sample_tolerance(cfg, &reference)
        })
        .collect()
}

/// One run's result.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub index: usize,
    pub x0: RVector,
    pub result: std::result::Result<Trajectory, OdeError>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub index: usize,
    pub final_residual: Option<f64>,
    /// Residual at the first sample with `τ ≥ 2`.
    pub residual_at_2: Option<f64>,
    pub cond_min: Option<f64>,
    pub cond_max: Option<f64>,
    pub stats: Option<IntegratorStats>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: ModelKind,
    pub gamma: Gain,
    pub runs: Vec<RunSummary>,
    pub median_final_residual: Option<f64>,
    pub median_residual_at_2: Option<f64>,
    pub files: Vec<PathBuf>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

pub fn summarize(outcome: &RunOutcome) -> RunSummary {
    match &outcome.result {
        Ok(tr) => {
            let at2 = tr.taus.iter().position(|&t| t >= 2.0).map(|k| tr.residuals[k]);
            let finite: Vec<f64> = tr.cond_estimates.iter().copied().filter(|c| c.is_finite()).collect();
            RunSummary {
                index: outcome.index,
                final_residual: tr.residuals.last().copied(),
                residual_at_2: at2,
                cond_min: finite.iter().copied().reduce(f64::min),
                cond_max: finite.iter().copied().reduce(f64::max),
                stats: Some(tr.stats),
                error: None,
            }
        }
        Err(e) => RunSummary {
            index: outcome.index,
            final_residual: None,
            residual_at_2: None,
            cond_min: None,
            cond_max: None,
            stats: None,
            error: Some(e.to_string()),
        },
    }
}

fn build_report(model: ModelKind, gamma: Gain, outcomes: &[RunOutcome]) -> RunReport {
    let runs: Vec<RunSummary> = outcomes.iter().map(summarize).collect();
    let finals: Vec<f64> = runs.iter().filter_map(|r| r.final_residual).collect();
    let at2: Vec<f64> = runs.iter().filter_map(|r| r.residual_at_2).collect();
    RunReport {
        model,
        gamma,
        median_final_residual: median(&finals),
        median_residual_at_2: median(&at2),
        runs,
        files: Vec::new(),
    }
}

/// Integrates every run of `spec` for `model`/`gamma` on `p`, in parallel.
pub fn simulate(p: &TvsscmeProblem, spec: &ExperimentSpec, model: ModelKind, gamma: Gain) -> Result<Vec<RunOutcome>> {
    spec.validate()?;
    let sys = ModelSystem::new(model, p, gamma, Arc::new(Linear))?;
    let residual = |t: f64, x: &[f64]| p.residual(t, x).unwrap_or(f64::NAN);
    let outcomes: Vec<RunOutcome> = (0..spec.runs)
        .into_par_iter()
        .map(|k| {
            let x0 = initial_state(spec.seed, k, p.state_dim(), spec.init_range);
            let result = integrate(&sys, &x0, spec.span, &spec.integrator, Some(&residual));
            RunOutcome { index: k, x0, result }
        })
        .collect();
    if outcomes.iter().all(|o| o.result.is_err()) {
        let first = outcomes[0].result.as_ref().err().map(|e| e.to_string()).unwrap_or_default();
        return Err(HarnessError::AllRunsFailed {
            runs: spec.runs,
            first,
        });
    }
    Ok(outcomes)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run_metadata(spec: &ExperimentSpec, model: ModelKind, gamma: Gain, index: usize) -> Metadata {
    vec![
        ("model".into(), model.name().into()),
        ("gamma".into(), gamma.to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("run".into(), index.to_string()),
        ("rel_tol".into(), format!("{:e}", spec.integrator.rel_tol)),
        ("abs_tol".into(), format!("{:e}", spec.integrator.abs_tol)),
    ]
}

/// Shared sample grid of the successful outcomes, if any.
fn common_taus(outcomes: &[RunOutcome]) -> Option<Vec<f64>> {
    outcomes.iter().find_map(|o| o.result.as_ref().ok().map(|t| t.taus.clone()))
}

fn residual_column(o: &RunOutcome, len: usize) -> Vec<f64> {
    match &o.result {
        Ok(t) => t.residuals.clone(),
        Err(_) => vec![f64::NAN; len],
    }
}

fn log_column(v: &[f64]) -> Vec<f64> {
    v.iter().map(|r| if r.is_nan() { f64::NAN } else { log_residual(*r) }).collect()
}

/// Runs one model: a CSV per run plus an aggregate CSV when `spec.out` is set.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    let p = resolve_problem(&spec.problem)?;
    run_on(&p, spec)
}

pub fn run_on(p: &TvsscmeProblem, spec: &ExperimentSpec) -> Result<RunReport> {
    let outcomes = simulate(p, spec, spec.model, spec.gamma)?;
    let mut report = build_report(spec.model, spec.gamma, &outcomes);
    if let Some(prefix) = &spec.out {
        for o in &outcomes {
            if let Ok(tr) = &o.result {
                let path = with_suffix(prefix, &format!("_run{}.csv", o.index));
                let mut w = create(&path)?;
                write_trajectory(&mut w, p.m(), p.n(), tr, &run_metadata(spec, spec.model, spec.gamma, o.index))?;
                w.flush()?;
                report.files.push(path);
            }
        }
        if let Some(taus) = common_taus(&outcomes) {
            let mut cols = Vec::new();
            for o in &outcomes {
                cols.push((format!("residual_run{}", o.index), residual_column(o, taus.len())));
            }
            for o in &outcomes {
                let r = residual_column(o, taus.len());
                cols.push((format!("log10_residual_run{}", o.index), log_column(&r)));
            }
            let path = with_suffix(prefix, "_aggregate.csv");
            let mut w = create(&path)?;
            write_table(&mut w, &taus, &cols)?;
            w.flush()?;
            report.files.push(path);
        }
    }
    Ok(report)
}

/// Residual series of one configuration, indexed by run.
#[derive(Debug, Clone)]
pub struct SeriesSet {
    pub label: String,
    pub model: ModelKind,
    pub gamma: Gain,
    pub outcomes: Vec<RunOutcome>,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub taus: Vec<f64>,
    pub series: Vec<SeriesSet>,
    /// `10 × tolerance` along the reference solution at every sample.
    pub band: Vec<f64>,
    pub files: Vec<PathBuf>,
}

impl ComparisonReport {
    /// Largest `|r_a - r_b| / band` over samples and shared successful runs.
    pub fn worst_band_ratio(&self, a: usize, b: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (oa, ob) in self.series[a].outcomes.iter().zip(&self.series[b].outcomes) {
            if let (Ok(ta), Ok(tb)) = (&oa.result, &ob.result) {
                for k in 0..self.taus.len() {
                    worst = worst.max((ta.residuals[k] - tb.residuals[k]).abs() / self.band[k]);
                }
            }
        }
        worst
    }

    /// Per-run, per-sample `r_a - r_b`.
    pub fn difference(&self, a: usize, b: usize) -> Vec<Vec<f64>> {
        self.series[a]
            .outcomes
            .iter()
            .zip(&self.series[b].outcomes)
            .map(|(oa, ob)| {
                let ra = residual_column(oa, self.taus.len());
                let rb = residual_column(ob, self.taus.len());
                ra.iter().zip(&rb).map(|(x, y)| x - y).collect()
            })
            .collect()
    }
}

fn compare_configs(
    p: &TvsscmeProblem,
    spec: &ExperimentSpec,
    configs: &[(String, ModelKind, Gain)],
    file_tag: &str,
) -> Result<ComparisonReport> {
    let mut series = Vec::with_capacity(configs.len());
    for (label, model, gamma) in configs {
        let outcomes = simulate(p, spec, *model, *gamma)?;
        let report = build_report(*model, *gamma, &outcomes);
        series.push(SeriesSet {
            label: label.clone(),
            model: *model,
            gamma: *gamma,
            outcomes,
            report,
        });
    }
    let first_ok = series
        .iter()
        .flat_map(|s| s.outcomes.iter())
        .find_map(|o| o.result.as_ref().ok())
        .expect("simulate guarantees a successful run");
    let taus = first_ok.taus.clone();
    let band = tolerance_band(p, &spec.integrator, &taus, &first_ok.states);
    let mut report = ComparisonReport {
        taus,
        series,
        band,
        files: Vec::new(),
    };

    if let Some(prefix) = &spec.out {
        let n = report.taus.len();
        let mut cols = Vec::new();
        for s in &report.series {
            for o in &s.outcomes {
                cols.push((format!("residual_{}_run{}", s.label, o.index), residual_column(o, n)));
            }
        }
        for s in &report.series {
            for o in &s.outcomes {
                let r = residual_column(o, n);
                cols.push((format!("log10_residual_{}_run{}", s.label, o.index), log_column(&r)));
            }
        }
        for b in 1..report.series.len() {
            for (k, d) in report.difference(0, b).into_iter().enumerate() {
                let name = format!("diff_{}_minus_{}_run{}", report.series[0].label, report.series[b].label, k);
                cols.push((name, d));
            }
        }
        cols.push(("tolerance_band".into(), report.band.clone()));
        let path = with_suffix(prefix, &format!("_{file_tag}.csv"));
        let mut w = create(&path)?;
        write_table(&mut w, &report.taus, &cols)?;
        w.flush()?;
        report.files.push(path);
    }
    Ok(report)
}

/// Same model and shared `X₀` across several gains.
pub fn gamma_sweep(spec: &ExperimentSpec, gammas: &[Gain]) -> Result<ComparisonReport> {
    if gammas.is_empty() {
        return Err(HarnessError::Usage("sweep-gamma needs at least one --gamma".into()));
    }
    let p = resolve_problem(&spec.problem)?;
    let configs: Vec<_> = gammas
        .iter()
        .map(|g| (format!("gamma={g}"), spec.model, *g))
        .collect();
    compare_configs(&p, spec, &configs, "sweep")
}

/// Several models with the gain of `spec` and shared `X₀`.
pub fn compare_models(spec: &ExperimentSpec, models: &[ModelKind]) -> Result<ComparisonReport> {
    if models.is_empty() {
        return Err(HarnessError::Usage("compare needs at least one --model".into()));
    }
    let p = resolve_problem(&spec.problem)?;
    compare_models_on(&p, spec, models)
}

pub fn compare_models_on(p: &TvsscmeProblem, spec: &ExperimentSpec, models: &[ModelKind]) -> Result<ComparisonReport> {
    let configs: Vec<_> = models
        .iter()
        .map(|m| (m.name().to_string(), *m, spec.gamma))
        .collect();
    compare_configs(p, spec, &configs, "compare")
}

/// Uniqueness check over `points` grid instants, optionally written as CSV.
pub fn check_uniqueness(
    p: &TvsscmeProblem,
    span: (f64, f64),
    points: usize,
    out: Option<&Path>,
) -> Result<UniquenessReport> {
    if points == 0 {
        return Err(HarnessError::Usage("uniqueness grid needs at least one point".into()));
    }
    let grid = problem::default_grid(span.0, span.1, points);
    let report = problem::check_uniqueness(p, &grid, problem::DEFAULT_EPS_EIG, problem::DEFAULT_EPS_DET)?;
    if let Some(prefix) = out {
        let s = &report.samples;
        let mut cols = vec![
            ("eigen_gap".to_string(), s.iter().map(|x| x.eigen_gap.unwrap_or(f64::NAN)).collect()),
            ("log_abs_det".to_string(), s.iter().map(|x| x.log_abs_det.unwrap_or(f64::NAN)).collect()),
            (
                "det_sign".to_string(),
                s.iter().map(|x| x.det_sign.map_or(f64::NAN, f64::from)).collect(),
            ),
        ];
        for (label, pick) in [("aa", 0usize), ("ff", 1usize)] {
            let count = if pick == 0 { p.m() } else { p.n() };
            for k in 0..count {
                let get = |x: &problem::UniquenessSample| {
                    let v = if pick == 0 { &x.eig_aa } else { &x.eig_ff };
                    v.get(k).copied()
                };
                cols.push((format!("eig_{label}_{k}_re"), s.iter().map(|x| get(x).map_or(f64::NAN, |z| z.re)).collect()));
                cols.push((format!("eig_{label}_{k}_im"), s.iter().map(|x| get(x).map_or(f64::NAN, |z| z.im)).collect()));
            }
        }
        let path = with_suffix(prefix, "_uniqueness.csv");
        let mut w = create(&path)?;
        write_table(&mut w, &report.tau_grid, &cols)?;
        w.flush()?;
    }
    Ok(report)
}

/// Checks that window maxima of `residuals` over consecutive windows of width
/// `window`, starting at `from`, never increase unless both neighbours sit
/// below `floor` (the tolerance plateau).
pub fn envelope_is_monotone(taus: &[f64], residuals: &[f64], from: f64, window: f64, floor: f64) -> bool {
    let end = taus.last().copied().unwrap_or(from);
    let mut maxima = Vec::new();
    let mut start = from;
    while start < end {
        let stop = start + window;
        let last = stop >= end;
        let m = taus
            .iter()
            .zip(residuals)
            .filter(|(t, _)| **t >= start && (**t < stop || (last && **t <= end)))
            .map(|(_, r)| *r)
            .fold(f64::NEG_INFINITY, f64::max);
        if m.is_finite() {
            maxima.push(m);
        }
        start = stop;
    }
    maxima.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor)
}
