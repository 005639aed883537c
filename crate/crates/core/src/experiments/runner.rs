//! Monte-Carlo trials, sweep aggregation and CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{solve_digital_16qam, solve_exhaustive, solve_only_5g, solve_only_wifi, DigitalSolution};
use crate::optimizer::{solve, AlgoConfig, Solution, TraceRecord};
use crate::params::ScenarioParams;
use crate::rng::{self, tag};
use crate::scenario::Scenario;
use crate::{Error, Result};

use super::config::{ExperimentConfig, Scheme, SweepAxis};

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "sweep_axis",
    "sweep_value",
    "trials",
    "mse_mean",
    "mse_stderr",
    "cost_mean",
    "delay_mean",
    "objective_mean",
    "iters_mean",
];

/// Seed of trial `index`; independent of how many trials are run.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    rng::derive(base_seed, &[tag::TRIAL, index as u64])
}

#[derive(Debug, Clone)]
pub enum SchemeResult {
    Analog(Solution),
    Digital(DigitalSolution),
}

impl SchemeResult {
    pub fn objective(&self) -> f64 {
        match self {
            SchemeResult::Analog(s) => s.objective,
            SchemeResult::Digital(d) => d.objective,
        }
    }
}

pub fn run_scheme(scn: &Scenario, scheme: Scheme, algo: &AlgoConfig) -> Result<SchemeResult> {
    Ok(match scheme {
        Scheme::Proposed => SchemeResult::Analog(solve(scn, algo)?),
        Scheme::Only5g => SchemeResult::Analog(solve_only_5g(scn, algo)?),
        Scheme::Onlywifi => SchemeResult::Analog(solve_only_wifi(scn, algo)?),
        Scheme::Exhaustive => SchemeResult::Analog(solve_exhaustive(scn, algo)?),
        Scheme::Qam16 => SchemeResult::Digital(solve_digital_16qam(scn, algo)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub mse: f64,
    pub cost: f64,
    /// Seconds.
    pub delay: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `E_k - energy used` per device.
    pub energy_slack: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

impl TrialMetrics {
    fn from_result(res: &SchemeResult, params: &ScenarioParams) -> Self {
        let sum = |f: &dyn Fn(&crate::metrics::SlotMetrics) -> f64, slots: &[crate::metrics::SlotMetrics]| {
            slots.iter().map(f).sum::<f64>()
        };
        let (slots, objective, iterations, converged, used, trace) = match res {
            SchemeResult::Analog(s) => (&s.slots, s.objective, s.iterations, s.converged, &s.energy_used, s.trace.clone()),
            SchemeResult::Digital(d) => (&d.slots, d.objective, d.iterations, true, &d.energy_used, Vec::new()),
        };
        Self {
            mse: sum(&|m| m.mse, slots),
            cost: sum(&|m| m.cost, slots),
            delay: sum(&|m| m.delay, slots),
            objective,
            iterations,
            converged,
            energy_slack: used.iter().enumerate().map(|(k, u)| params.energy_budget.get(k) - u).collect(),
            trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Done(TrialMetrics),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub scheme: Scheme,
    pub sweep_value: Option<f64>,
    pub trial: usize,
    pub outcome: TrialOutcome,
    pub wall_ms: f64,
}

impl TrialRecord {
    pub fn metrics(&self) -> Option<&TrialMetrics> {
        match &self.outcome {
            TrialOutcome::Done(m) => Some(m),
            TrialOutcome::Skipped(_) => None,
        }
    }
}

fn record(scn: Result<&Scenario, &Error>, params: &ScenarioParams, scheme: Scheme, value: Option<f64>, trial: usize, seed: u64, algo: &AlgoConfig) -> TrialRecord {
    let start = Instant::now();
    let outcome = match scn.map_err(|e| e.to_string()).and_then(|s| run_scheme(s, scheme, algo).map_err(|e| e.to_string())) {
        Ok(res) => TrialOutcome::Done(TrialMetrics::from_result(&res, params)),
        Err(reason) => {
            log::warn!("{scheme} trial {trial} (seed {seed}) skipped: {reason}");
            TrialOutcome::Skipped(reason)
        }
    };
    TrialRecord { seed, scheme, sweep_value: value, trial, outcome, wall_ms: start.elapsed().as_secs_f64() * 1e3 }
}

/// One scheme on one trial at one sweep point.
pub fn run_trial(cfg: &ExperimentConfig, scheme: Scheme, sweep_value: Option<f64>, trial: usize) -> Result<TrialRecord> {
    cfg.validate()?;
    let params = match (&cfg.sweep, sweep_value) {
        (Some(sw), Some(v)) => sw.apply(&cfg.scenario, v)?,
        (None, None) => cfg.scenario.clone(),
        _ => return Err(Error::Config("sweep value given without a sweep axis, or missing".into())),
    };
    let seed = trial_seed(cfg.base_seed, trial);
    let scn = Scenario::generate(&params, seed);
    Ok(record(scn.as_ref(), &params, scheme, sweep_value, trial, seed, &cfg.algo))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub axis: Option<SweepAxis>,
    pub sweep_value: Option<f64>,
    /// Trials that completed.
    pub trials: usize,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub cost_mean: f64,
    pub delay_mean: f64,
    pub objective_mean: f64,
    pub iters_mean: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for a single sample.
pub fn stderr(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

pub fn summarize(scheme: Scheme, axis: Option<SweepAxis>, value: Option<f64>, records: &[&TrialRecord]) -> SummaryRow {
    let done: Vec<&TrialMetrics> = records.iter().filter_map(|r| r.metrics()).collect();
    let col = |f: fn(&TrialMetrics) -> f64| done.iter().map(|m| f(m)).collect::<Vec<f64>>();
    let mse = col(|m| m.mse);
    SummaryRow {
        scheme,
        axis,
        sweep_value: value,
        trials: done.len(),
        mse_mean: mean(&mse),
        mse_stderr: stderr(&mse),
        cost_mean: mean(&col(|m| m.cost)),
        delay_mean: mean(&col(|m| m.delay)),
        objective_mean: mean(&col(|m| m.objective)),
        iters_mean: mean(&col(|m| m.iterations as f64)),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Sorted by scheme, sweep point and trial index.
    pub records: Vec<TrialRecord>,
    /// One row per scheme and sweep point, in the same order.
    pub rows: Vec<SummaryRow>,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = cfg.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let mut records: Vec<(usize, usize, usize, TrialRecord)> = jobs
        .par_iter()
        .flat_map_iter(|&(pi, trial)| {
            let (value, params) = &points[pi];
            let seed = trial_seed(cfg.base_seed, trial);
            let scn = Scenario::generate(params, seed);
            cfg.schemes
                .iter()
                .enumerate()
                .map(|(si, &scheme)| (si, pi, trial, record(scn.as_ref(), params, scheme, *value, trial, seed, &cfg.algo)))
                .collect::<Vec<_>>()
        })
        .collect();
    records.sort_by_key(|r| (r.0, r.1, r.2));
    let axis = cfg.sweep.as_ref().map(|s| s.axis);
    let mut rows = Vec::new();
    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        for (pi, (value, _)) in points.iter().enumerate() {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.0 == si && r.1 == pi).map(|r| &r.3).collect();
            rows.push(summarize(scheme, axis, *value, &group));
        }
    }
    Ok(SweepOutput { records: records.into_iter().map(|r| r.3).collect(), rows })
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            r.axis.map_or("none".into(), |a| a.name().to_string()),
            r.sweep_value.map_or(String::new(), |v| v.to_string()),
            r.trials.to_string(),
            r.mse_mean.to_string(),
            r.mse_stderr.to_string(),
            r.cost_mean.to_string(),
            r.delay_mean.to_string(),
            r.objective_mean.to_string(),
            r.iters_mean.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "dual_value", "flag"])?;
    for t in trace {
        w.write_record([t.iter.to_string(), t.dual_value.to_string(), t.flag.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn write_summary_file(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_summary_csv(rows, std::io::BufWriter::new(create(path)?))
}

/// `<dir>/<stem>.trace.<scheme>[.<axis><value>].csv`
pub fn trace_path(out: &Path, scheme: Scheme, axis: Option<SweepAxis>, value: Option<f64>) -> PathBuf {
    let stem = out.file_stem().map_or("results".into(), |s| s.to_string_lossy().into_owned());
    let point = match (axis, value) {
        (Some(a), Some(v)) => format!(".{}{}", a.name(), v),
        _ => String::new(),
    };
    out.with_file_name(format!("{stem}.trace.{scheme}{point}.csv"))
}

/// Dual-value traces of the first completed trial of every scheme and sweep
/// point that records one. Returns the written paths.
pub fn write_traces(output: &SweepOutput, axis: Option<SweepAxis>, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for row in &output.rows {
        let first = output
            .records
            .iter()
            .filter(|r| r.scheme == row.scheme && r.sweep_value == row.sweep_value)
            .find_map(|r| r.metrics().filter(|m| !m.trace.is_empty()));
        if let Some(m) = first {
            let path = trace_path(out, row.scheme, axis, row.sweep_value);
            write_trace_csv(&m.trace, std::io::BufWriter::new(create(&path)?))?;
            written.push(path);
        }
    }
    Ok(written)
}
