//! Experiment orchestration: the same benchmark and requirement run R times
//! per strategy, every strategy reusing the same initial training set within
//! a run index, summarized as error curves and win rates against the entropy
//! strategy.
//!
//! Config files are TOML with one `[[experiment]]` table per experiment:
//!
//! ```toml
//! [[experiment]]
//! name = "mrac-tracking"          # names the output subdirectory
//! benchmark = "mrac2d"            # mrac2d | mrac3d | autopilot
//! formula = "mrac_tracking"       # preset name or literal formula text
//! resolution = [41, 41]           # grid nodes per dimension
//! strategies = ["entropy", "random"]
//! runs = 20
//! master_seed = 7
//! initial_count = 50
//! batch_size = 5
//! batch_count = 20
//! batch_method = "kdpp"           # kdpp | approx_entropy | plain_argmax
//! hyper_mode = "optimize_each_batch"  # or "static"
//! candidate_draws = 200           # importance-weighted draws per batch
//! dpp_bandwidth = 5.0
//! lengthscale_factor = 0.25
//! restarts = 3
//! confidence_threshold = 0.95
//! ```
//!
//! Everything after `benchmark` is optional; omitted keys take the defaults
//! shown by `LoopConfig::default` and the benchmark registry.
//!
//! Artifacts per experiment, under `<out>/<name>/`:
//! - `runs.csv`: one row per (run, strategy, batch) with columns
//!   `run,strategy,batch,training_size,error,filtered_error,coverage,sigma_f2,lengthscales`;
//!   lengthscales are `;`-joined. Byte-identical across repeat runs of the
//!   same config.
//! - `timing.csv`: `run,strategy,batch,seconds`. Wall time, so the one
//!   artifact that is legitimately not reproducible.
//! - `aggregate.csv`: per (strategy, batch) means, population sigma, and the
//!   win rate against the entropy strategy. Empty cells mean no data.
//! - `summary.json`, `error.svg`, `filtered_error.svg`, `win_rate.svg`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::Strategy;
use crate::bench::{benchmark, resolve_formula, Benchmark};
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::kdpp::DppConfig;
use crate::sim::System;
use crate::stl::StlFormula;
use crate::stl_parse::parse;
use crate::verify::{
    ground_truth_sweep, run_closed_loop, BatchMethod, GroundTruth, HyperMode, LoopConfig,
    RegionEstimate, RunResult,
};

/// One `[[experiment]]` section, typed and defaulted.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub benchmark: String,
    /// Preset name or literal formula text; resolved at run time.
    pub formula: Option<String>,
    /// Grid nodes per dimension; empty means the benchmark default.
    pub resolution: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub runs: usize,
    pub master_seed: u64,
    pub initial_count: usize,
    pub batch_size: usize,
    pub batch_count: usize,
    /// Batch mechanism for the entropy strategy. Other strategies have no
    /// importance distribution to thin, so they always take top-M scores.
    pub batch_method: BatchMethod,
    pub hyper_mode: HyperMode,
    pub dpp: DppConfig,
    pub lengthscale_factor: f64,
    pub restarts: usize,
    pub confidence_threshold: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    benchmark: String,
    formula: Option<String>,
    resolution: Option<Vec<usize>>,
    strategies: Option<Vec<String>>,
    runs: Option<usize>,
    master_seed: Option<u64>,
    initial_count: Option<usize>,
    batch_size: Option<usize>,
    batch_count: Option<usize>,
    batch_method: Option<String>,
    hyper_mode: Option<String>,
    candidate_draws: Option<usize>,
    dpp_bandwidth: Option<f64>,
    lengthscale_factor: Option<f64>,
    restarts: Option<usize>,
    confidence_threshold: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: Vec<RawExperiment>,
}

impl ExperimentSpec {
    fn from_raw(raw: RawExperiment) -> Result<Self> {
        if raw.name.is_empty()
            || !raw
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(Error::InvalidExperiment(format!(
                "experiment name {:?} must be non-empty and filesystem-safe \
                 (ascii letters, digits, '-', '_', '.')",
                raw.name
            )));
        }
        let strategies = match raw.strategies {
            None => vec![Strategy::Entropy],
            Some(names) => names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<Strategy>>>()?,
        };
        for (i, s) in strategies.iter().enumerate() {
            if strategies[..i].contains(s) {
                return Err(Error::InvalidExperiment(format!(
                    "strategy {s} listed twice"
                )));
            }
        }
        if strategies.is_empty() {
            return Err(Error::InvalidExperiment(
                "strategy list must be non-empty".into(),
            ));
        }
        let defaults = LoopConfig::default();
        let dpp_defaults = DppConfig::default();
        Ok(Self {
            name: raw.name,
            benchmark: raw.benchmark,
            formula: raw.formula,
            resolution: raw.resolution.unwrap_or_default(),
            strategies,
            runs: raw.runs.unwrap_or(1),
            master_seed: raw.master_seed.unwrap_or(0),
            initial_count: raw.initial_count.unwrap_or(defaults.initial_count),
            batch_size: raw.batch_size.unwrap_or(defaults.batch_size),
            batch_count: raw.batch_count.unwrap_or(defaults.batch_count),
            batch_method: match raw.batch_method {
                None => defaults.batch_method,
                Some(m) => m.parse()?,
            },
            hyper_mode: match raw.hyper_mode {
                None => defaults.hyper_mode,
                Some(m) => m.parse()?,
            },
            dpp: DppConfig {
                m_t: raw.candidate_draws.unwrap_or(dpp_defaults.m_t),
                bandwidth: raw.dpp_bandwidth.unwrap_or(dpp_defaults.bandwidth),
            },
            lengthscale_factor: raw.lengthscale_factor.unwrap_or(defaults.lengthscale_factor),
            restarts: raw.restarts.unwrap_or(defaults.restarts),
            confidence_threshold: raw
                .confidence_threshold
                .unwrap_or(defaults.confidence_threshold),
        })
    }

    /// Per-run loop seed. Every strategy in a run index gets the same seed,
    /// so the `init` stream (and with it the initial training set) is shared
    /// across strategies; selection and optimizer draws live on separately
    /// named streams and cannot disturb it.
    pub fn run_seed(&self, run: usize) -> u64 {
        let mut z = self
            .master_seed
            .wrapping_add((run as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Loop configuration for one cell of the run matrix. Non-entropy
    /// strategies fall back to plain top-M selection because both batch
    /// algorithms are defined on entropy weights.
    pub fn loop_config(&self, strategy: Strategy, run: usize) -> LoopConfig {
        let batch_method = if strategy == Strategy::Entropy {
            self.batch_method
        } else {
            BatchMethod::PlainArgmax
        };
        LoopConfig {
            initial_count: self.initial_count,
            batch_size: self.batch_size,
            batch_count: self.batch_count,
            strategy,
            batch_method,
            hyper_mode: self.hyper_mode,
            seed: self.run_seed(run),
            dpp: self.dpp.clone(),
            lengthscale_factor: self.lengthscale_factor,
            restarts: self.restarts,
            confidence_threshold: self.confidence_threshold,
        }
    }

    pub fn validate(&self, grid_len: usize) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidExperiment(
                "an experiment needs at least one run".into(),
            ));
        }
        for &s in &self.strategies {
            self.loop_config(s, 0).validate(grid_len)?;
        }
        Ok(())
    }

    /// Looks up the benchmark and materializes the formula and grid.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let bench = benchmark(&self.benchmark)?;
        let formula_text = resolve_formula(
            self.formula.as_deref().unwrap_or(bench.default_formula),
        )
        .to_string();
        let formula = parse(&formula_text)?;
        let resolution = if self.resolution.is_empty() {
            bench.default_resolution.clone()
        } else {
            self.resolution.clone()
        };
        let grid = ParamGrid::new(bench.system.bounds().clone(), &resolution)?;
        Ok(ResolvedExperiment {
            bench,
            formula_text,
            formula,
            grid,
        })
    }
}

/// An experiment spec with names replaced by live objects.
pub struct ResolvedExperiment {
    pub bench: Benchmark,
    pub formula_text: String,
    pub formula: StlFormula,
    pub grid: ParamGrid,
}

pub fn parse_config(text: &str) -> Result<Vec<ExperimentSpec>> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::InvalidExperiment(format!("config: {e}")))?;
    if raw.experiment.is_empty() {
        return Err(Error::InvalidExperiment(
            "config declares no [[experiment]] sections".into(),
        ));
    }
    let specs = raw
        .experiment
        .into_iter()
        .map(ExperimentSpec::from_raw)
        .collect::<Result<Vec<_>>>()?;
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.name == s.name) {
            return Err(Error::InvalidExperiment(format!(
                "experiment name {:?} used twice",
                s.name
            )));
        }
    }
    Ok(specs)
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentSpec>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Outcome of one (run, strategy) cell.
#[derive(Debug, Clone)]
pub enum CellOutcome {
    Completed(RunResult),
    Failed { batch: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct RunCell {
    pub run: usize,
    pub strategy: Strategy,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run: usize,
    pub strategy: String,
    pub batch: usize,
    pub message: String,
}

/// Mean and spread curves for one strategy. Vectors hold one entry per
/// record (the initial fit plus every batch); NaN marks a batch with no
/// completed runs and serializes as an empty CSV cell.
#[derive(Debug, Clone)]
pub struct StrategyCurve {
    pub strategy: Strategy,
    pub completed_runs: usize,
    pub mean_error: Vec<f64>,
    /// Population standard deviation across completed runs.
    pub std_error: Vec<f64>,
    pub mean_filtered_error: Vec<f64>,
    pub mean_coverage: Vec<f64>,
}

/// Fraction of runs where the entropy strategy's error was at or below the
/// competitor's, per batch. A tie counts as a match, so entropy against
/// itself is 1 everywhere.
#[derive(Debug, Clone)]
pub struct WinRateCurve {
    pub competitor: Strategy,
    /// Runs where both strategies completed.
    pub pairs: usize,
    pub rate: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub name: String,
    /// Training set size after each record; the shared x axis.
    pub training_sizes: Vec<usize>,
    pub curves: Vec<StrategyCurve>,
    /// One curve per strategy, present only when entropy is among them.
    pub win_rates: Vec<WinRateCurve>,
    pub failures: Vec<RunFailure>,
}

/// Executes the full run × strategy matrix in parallel. Cell failures are
/// captured, not propagated; a single diverging run must not cost the rest
/// of the experiment.
pub fn run_matrix(
    system: &dyn System,
    formula: &StlFormula,
    grid: &ParamGrid,
    truth: &GroundTruth,
    spec: &ExperimentSpec,
) -> Vec<RunCell> {
    let jobs: Vec<(usize, Strategy)> = (0..spec.runs)
        .flat_map(|r| spec.strategies.iter().map(move |&s| (r, s)))
        .collect();
    jobs.par_iter()
        .map(|&(run, strategy)| {
            let config = spec.loop_config(strategy, run);
            let outcome = match run_closed_loop(system, formula, grid, truth, &config) {
                Ok(result) => CellOutcome::Completed(result),
                Err(Error::LoopAborted { batch, source }) => CellOutcome::Failed {
                    batch,
                    message: source.to_string(),
                },
                Err(other) => CellOutcome::Failed {
                    batch: 0,
                    message: other.to_string(),
                },
            };
            RunCell {
                run,
                strategy,
                outcome,
            }
        })
        .collect()
}

fn completed<'a>(cells: &'a [RunCell], strategy: Strategy) -> Vec<(usize, &'a RunResult)> {
    cells
        .iter()
        .filter(|c| c.strategy == strategy)
        .filter_map(|c| match &c.outcome {
            CellOutcome::Completed(r) => Some((c.run, r)),
            CellOutcome::Failed { .. } => None,
        })
        .collect()
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates a run matrix into curves and win rates. `strategies` fixes
/// the row order; cells for strategies not listed are ignored.
pub fn build_report(name: &str, strategies: &[Strategy], cells: &[RunCell]) -> ComparisonReport {
    let records_len = cells
        .iter()
        .find_map(|c| match &c.outcome {
            CellOutcome::Completed(r) => Some(r.records.len()),
            CellOutcome::Failed { .. } => None,
        })
        .unwrap_or(0);
    let training_sizes: Vec<usize> = cells
        .iter()
        .find_map(|c| match &c.outcome {
            CellOutcome::Completed(r) => {
                Some(r.records.iter().map(|rec| rec.training_size).collect())
            }
            CellOutcome::Failed { .. } => None,
        })
        .unwrap_or_default();

    let curves: Vec<StrategyCurve> = strategies
        .iter()
        .map(|&s| {
            let done = completed(cells, s);
            let column = |f: &dyn Fn(&crate::verify::BatchRecord) -> f64, t: usize| {
                let vals: Vec<f64> = done.iter().map(|(_, r)| f(&r.records[t])).collect();
                mean_and_std(&vals)
            };
            let mut curve = StrategyCurve {
                strategy: s,
                completed_runs: done.len(),
                mean_error: Vec::with_capacity(records_len),
                std_error: Vec::with_capacity(records_len),
                mean_filtered_error: Vec::with_capacity(records_len),
                mean_coverage: Vec::with_capacity(records_len),
            };
            for t in 0..records_len {
                let (m, sd) = column(&|r| r.error, t);
                curve.mean_error.push(m);
                curve.std_error.push(sd);
                curve.mean_filtered_error.push(column(&|r| r.filtered_error, t).0);
                curve.mean_coverage.push(column(&|r| r.coverage, t).0);
            }
            curve
        })
        .collect();

    let win_rates = if strategies.contains(&Strategy::Entropy) {
        let entropy_done = completed(cells, Strategy::Entropy);
        strategies
            .iter()
            .map(|&s| {
                let other_done = completed(cells, s);
                let pairs: Vec<(&RunResult, &RunResult)> = entropy_done
                    .iter()
                    .filter_map(|&(run, e)| {
                        other_done
                            .iter()
                            .find(|&&(r, _)| r == run)
                            .map(|&(_, o)| (e, o))
                    })
                    .collect();
                let rate = (0..records_len)
                    .map(|t| {
                        if pairs.is_empty() {
                            f64::NAN
                        } else {
                            let wins = pairs
                                .iter()
                                .filter(|(e, o)| e.records[t].error <= o.records[t].error)
                                .count();
                            wins as f64 / pairs.len() as f64
                        }
                    })
                    .collect();
                WinRateCurve {
                    competitor: s,
                    pairs: pairs.len(),
                    rate,
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let failures = cells
        .iter()
        .filter_map(|c| match &c.outcome {
            CellOutcome::Failed { batch, message } => Some(RunFailure {
                run: c.run,
                strategy: c.strategy.name().to_string(),
                batch: *batch,
                message: message.clone(),
            }),
            CellOutcome::Completed(_) => None,
        })
        .collect();

    ComparisonReport {
        name: name.to_string(),
        training_sizes,
        curves,
        win_rates,
        failures,
    }
}

/// Shortest round-trip float text; NaN becomes the empty cell.
fn csv_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn runs_csv(cells: &[RunCell]) -> String {
    let mut out = String::from(
        "run,strategy,batch,training_size,error,filtered_error,coverage,sigma_f2,lengthscales\n",
    );
    for cell in cells {
        let CellOutcome::Completed(result) = &cell.outcome else {
            continue;
        };
        for r in &result.records {
            let ls: Vec<String> = r.lengthscales.iter().map(|l| format!("{l}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                cell.run,
                cell.strategy,
                r.batch,
                r.training_size,
                csv_num(r.error),
                csv_num(r.filtered_error),
                csv_num(r.coverage),
                csv_num(r.sigma_f2),
                ls.join(";"),
            ));
        }
    }
    out
}

pub fn timing_csv(cells: &[RunCell]) -> String {
    let mut out = String::from("run,strategy,batch,seconds\n");
    for cell in cells {
        let CellOutcome::Completed(result) = &cell.outcome else {
            continue;
        };
        for r in &result.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                cell.run,
                cell.strategy,
                r.batch,
                csv_num(r.seconds)
            ));
        }
    }
    out
}

pub fn aggregate_csv(report: &ComparisonReport) -> String {
    let mut out = String::from(
        "strategy,batch,training_size,completed_runs,mean_error,std_error,\
         mean_filtered_error,mean_coverage,win_rate_vs_entropy\n",
    );
    for curve in &report.curves {
        let win = report
            .win_rates
            .iter()
            .find(|w| w.competitor == curve.strategy);
        for t in 0..curve.mean_error.len() {
            let win_cell = win
                .map(|w| csv_num(w.rate[t]))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                curve.strategy,
                t,
                report.training_sizes[t],
                curve.completed_runs,
                csv_num(curve.mean_error[t]),
                csv_num(curve.std_error[t]),
                csv_num(curve.mean_filtered_error[t]),
                csv_num(curve.mean_coverage[t]),
                win_cell,
            ));
        }
    }
    out
}

/// Rebuilds run cells from `runs.csv` text, for re-rendering plots without
/// re-running anything. Only the metric rows survive the round trip:
/// timings, region estimates, and observation orders are not in the file.
pub fn read_runs_csv(text: &str) -> Result<Vec<RunCell>> {
    let bad = |line: usize, what: &str| {
        Error::InvalidExperiment(format!("runs.csv line {}: {what}", line + 1))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.starts_with("run,strategy,batch,") => {}
        _ => return Err(Error::InvalidExperiment("runs.csv: missing header".into())),
    }
    let mut cells: Vec<RunCell> = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(ln, "expected 9 columns"));
        }
        let run: usize = f[0].parse().map_err(|_| bad(ln, "bad run id"))?;
        let strategy: Strategy = f[1].parse()?;
        let num = |i: usize, what: &str| -> Result<f64> {
            f[i].parse().map_err(|_| bad(ln, what))
        };
        let record = crate::verify::BatchRecord {
            batch: f[2].parse().map_err(|_| bad(ln, "bad batch index"))?,
            training_size: f[3].parse().map_err(|_| bad(ln, "bad training size"))?,
            error: num(4, "bad error")?,
            filtered_error: num(5, "bad filtered error")?,
            coverage: num(6, "bad coverage")?,
            filtered_empty: f[6] == "0",
            sigma_f2: num(7, "bad sigma_f2")?,
            lengthscales: f[8]
                .split(';')
                .map(|l| l.parse().map_err(|_| bad(ln, "bad lengthscale")))
                .collect::<Result<_>>()?,
            seconds: 0.0,
            degenerate_importance: false,
        };
        let slot = cells
            .iter_mut()
            .find(|c| c.run == run && c.strategy == strategy);
        match slot {
            Some(cell) => {
                let CellOutcome::Completed(result) = &mut cell.outcome else {
                    unreachable!("reader only builds completed cells");
                };
                result.records.push(record);
            }
            None => cells.push(RunCell {
                run,
                strategy,
                outcome: CellOutcome::Completed(RunResult {
                    records: vec![record],
                    estimate: RegionEstimate {
                        sat_mask: Vec::new(),
                        confidence: Vec::new(),
                    },
                    observed: Vec::new(),
                }),
            }),
        }
    }
    Ok(cells)
}

/// Strategies in first-appearance order, for rebuilding a report from CSV
/// alone.
pub fn strategies_in(cells: &[RunCell]) -> Vec<Strategy> {
    let mut out = Vec::new();
    for c in cells {
        if !out.contains(&c.strategy) {
            out.push(c.strategy);
        }
    }
    out
}

#[derive(Serialize)]
struct SummaryStrategy {
    strategy: String,
    completed_runs: usize,
    final_mean_error: Option<f64>,
    final_std_error: Option<f64>,
    final_mean_filtered_error: Option<f64>,
    final_mean_coverage: Option<f64>,
    final_win_rate_vs_entropy: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    benchmark: &'a str,
    formula: &'a str,
    resolution: &'a [usize],
    runs: usize,
    master_seed: u64,
    strategies: Vec<&'static str>,
    initial_count: usize,
    batch_size: usize,
    batch_count: usize,
    batch_method: &'static str,
    hyper_mode: &'static str,
    candidate_draws: usize,
    dpp_bandwidth: f64,
    lengthscale_factor: f64,
    restarts: usize,
    confidence_threshold: f64,
    total_budget: usize,
    grid_size: usize,
    results: Vec<SummaryStrategy>,
    failures: &'a [RunFailure],
}

fn not_nan(x: f64) -> Option<f64> {
    if x.is_nan() {
        None
    } else {
        Some(x)
    }
}

pub fn summary_json(
    spec: &ExperimentSpec,
    formula_text: &str,
    resolution: &[usize],
    grid_size: usize,
    report: &ComparisonReport,
) -> String {
    let results = report
        .curves
        .iter()
        .map(|c| {
            let win = report
                .win_rates
                .iter()
                .find(|w| w.competitor == c.strategy)
                .and_then(|w| w.rate.last().copied().and_then(not_nan));
            SummaryStrategy {
                strategy: c.strategy.name().to_string(),
                completed_runs: c.completed_runs,
                final_mean_error: c.mean_error.last().copied().and_then(not_nan),
                final_std_error: c.std_error.last().copied().and_then(not_nan),
                final_mean_filtered_error: c
                    .mean_filtered_error
                    .last()
                    .copied()
                    .and_then(not_nan),
                final_mean_coverage: c.mean_coverage.last().copied().and_then(not_nan),
                final_win_rate_vs_entropy: win,
            }
        })
        .collect();
    let summary = Summary {
        name: &spec.name,
        benchmark: &spec.benchmark,
        formula: formula_text,
        resolution,
        runs: spec.runs,
        master_seed: spec.master_seed,
        strategies: spec.strategies.iter().map(|s| s.name()).collect(),
        initial_count: spec.initial_count,
        batch_size: spec.batch_size,
        batch_count: spec.batch_count,
        batch_method: spec.batch_method.name(),
        hyper_mode: spec.hyper_mode.name(),
        candidate_draws: spec.dpp.m_t,
        dpp_bandwidth: spec.dpp.bandwidth,
        lengthscale_factor: spec.lengthscale_factor,
        restarts: spec.restarts,
        confidence_threshold: spec.confidence_threshold,
        total_budget: spec.initial_count + spec.batch_size * spec.batch_count,
        grid_size,
        results,
        failures: &report.failures,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

/// Writes every artifact for one experiment under `out_dir/<name>/` and
/// returns the paths, deterministic files first, `timing.csv` last.
pub fn write_artifacts(
    spec: &ExperimentSpec,
    formula_text: &str,
    resolution: &[usize],
    grid_size: usize,
    cells: &[RunCell],
    report: &ComparisonReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join(&spec.name);
    std::fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        paths.push(path);
        Ok(())
    };
    emit("runs.csv", runs_csv(cells))?;
    emit("aggregate.csv", aggregate_csv(report))?;
    emit(
        "summary.json",
        summary_json(spec, formula_text, resolution, grid_size, report),
    )?;
    for (name, svg) in crate::plot::render_plots(report) {
        emit(name, svg)?;
    }
    emit("timing.csv", timing_csv(cells))?;
    Ok(paths)
}

/// Per-grid-location ground truth as CSV: location index, coordinates,
/// robustness, and the satisfaction label.
pub fn truth_csv(grid: &ParamGrid, truth: &GroundTruth) -> String {
    let mut out = String::from("index");
    for d in 0..grid.dim() {
        out.push_str(&format!(",theta{d}"));
    }
    out.push_str(",robustness,satisfied\n");
    for i in 0..grid.len() {
        let p = grid.point(i);
        out.push_str(&format!("{i}"));
        for d in 0..grid.dim() {
            out.push_str(&format!(",{}", p[d]));
        }
        out.push_str(&format!(
            ",{},{}\n",
            truth.robustness[i], truth.sat_mask[i] as u8
        ));
    }
    out
}

/// End to end: resolve, sweep (cached under `out_dir/truth-cache`), run the
/// matrix, aggregate, and write artifacts. Individual run failures are
/// recorded in the report and summary, not raised; inspect
/// `report.failures` for completeness.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ComparisonReport> {
    let resolved = spec.resolve()?;
    spec.validate(resolved.grid.len())?;
    let cache = out_dir.join("truth-cache");
    let truth = ground_truth_sweep(
        resolved.bench.system.as_ref(),
        &resolved.formula_text,
        &resolved.grid,
        &resolved.bench.system.default_sim_config(),
        Some(&cache),
    )?;
    let cells = run_matrix(
        resolved.bench.system.as_ref(),
        &resolved.formula,
        &resolved.grid,
        &truth,
        spec,
    );
    let report = build_report(&spec.name, &spec.strategies, &cells);
    write_artifacts(
        spec,
        &resolved.formula_text,
        &resolved.grid.resolution(),
        resolved.grid.len(),
        &cells,
        &report,
        out_dir,
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::BatchRecord;

    const FULL: &str = r#"
[[experiment]]
name = "desk"
benchmark = "mrac2d"
formula = "mrac_tracking"
resolution = [41, 41]
strategies = ["entropy", "random"]
runs = 20
master_seed = 7
initial_count = 50
batch_size = 5
batch_count = 20
batch_method = "kdpp"
hyper_mode = "optimize_each_batch"
candidate_draws = 200
dpp_bandwidth = 5.0
lengthscale_factor = 0.25
restarts = 3
confidence_threshold = 0.95

[[experiment]]
name = "mini"
benchmark = "mrac2d"
"#;

    #[test]
    fn config_parses_with_and_without_optionals() {
        let specs = parse_config(FULL).unwrap();
        assert_eq!(specs.len(), 2);
        let desk = &specs[0];
        assert_eq!(desk.name, "desk");
        assert_eq!(desk.strategies, vec![Strategy::Entropy, Strategy::Random]);
        assert_eq!(desk.runs, 20);
        assert_eq!(desk.dpp.m_t, 200);
        assert_eq!(desk.resolution, vec![41, 41]);

        let mini = &specs[1];
        assert_eq!(mini.strategies, vec![Strategy::Entropy]);
        assert_eq!(mini.runs, 1);
        assert_eq!(mini.master_seed, 0);
        assert!(mini.resolution.is_empty());
        assert_eq!(mini.initial_count, LoopConfig::default().initial_count);
        assert_eq!(mini.dpp.m_t, DppConfig::default().m_t);
    }

    #[test]
    fn config_rejects_malformed_sections() {
        for (text, what) in [
            ("", "no sections"),
            (
                "[[experiment]]\nname = \"a\"\nbenchmark = \"mrac2d\"\ntypo_key = 1\n",
                "unknown key",
            ),
            (
                "[[experiment]]\nname = \"a\"\nbenchmark = \"mrac2d\"\nstrategies = [\"novel\"]\n",
                "unknown strategy",
            ),
            (
                "[[experiment]]\nname = \"a\"\nbenchmark = \"mrac2d\"\nstrategies = [\"random\", \"random\"]\n",
                "duplicate strategy",
            ),
            (
                "[[experiment]]\nname = \"a/b\"\nbenchmark = \"mrac2d\"\n",
                "unsafe name",
            ),
            (
                "[[experiment]]\nname = \"a\"\nbenchmark = \"mrac2d\"\n\n[[experiment]]\nname = \"a\"\nbenchmark = \"mrac2d\"\n",
                "duplicate name",
            ),
        ] {
            assert!(parse_config(text).is_err(), "should reject: {what}");
        }
    }

    #[test]
    fn run_seeds_are_shared_across_strategies_and_distinct_across_runs() {
        let spec = &parse_config(FULL).unwrap()[0];
        let entropy = spec.loop_config(Strategy::Entropy, 3);
        let random = spec.loop_config(Strategy::Random, 3);
        assert_eq!(entropy.seed, random.seed);
        assert_eq!(entropy.batch_method, BatchMethod::Kdpp);
        assert_eq!(random.batch_method, BatchMethod::PlainArgmax);

        let mut seeds: Vec<u64> = (0..100).map(|r| spec.run_seed(r)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 100);

        let other = ExperimentSpec {
            master_seed: 8,
            ..spec.clone()
        };
        assert_ne!(spec.run_seed(0), other.run_seed(0));
    }

    #[test]
    fn validation_covers_every_strategy() {
        let mut spec = parse_config(FULL).unwrap()[0].clone();
        assert!(spec.validate(41 * 41).is_ok());
        assert!(matches!(
            spec.validate(100),
            Err(Error::BudgetExceedsGrid { .. })
        ));
        spec.runs = 0;
        assert!(spec.validate(41 * 41).is_err());
    }

    fn record(batch: usize, training: usize, error: f64) -> BatchRecord {
        BatchRecord {
            batch,
            training_size: training,
            error,
            filtered_error: error / 2.0,
            coverage: 0.8,
            filtered_empty: false,
            sigma_f2: 1.5,
            lengthscales: vec![2.0, 3.0],
            seconds: 0.1,
            degenerate_importance: false,
        }
    }

    fn completed_cell(run: usize, strategy: Strategy, errors: &[f64]) -> RunCell {
        let records = errors
            .iter()
            .enumerate()
            .map(|(t, &e)| record(t, 10 + 2 * t, e))
            .collect();
        RunCell {
            run,
            strategy,
            outcome: CellOutcome::Completed(RunResult {
                records,
                estimate: RegionEstimate {
                    sat_mask: Vec::new(),
                    confidence: Vec::new(),
                },
                observed: Vec::new(),
            }),
        }
    }

    #[test]
    fn report_aggregates_match_hand_computation() {
        let cells = vec![
            completed_cell(0, Strategy::Entropy, &[0.4, 0.2, 0.1]),
            completed_cell(0, Strategy::Random, &[0.4, 0.3, 0.2]),
            completed_cell(1, Strategy::Entropy, &[0.5, 0.3, 0.2]),
            completed_cell(1, Strategy::Random, &[0.5, 0.2, 0.3]),
        ];
        let report = build_report("t", &[Strategy::Entropy, Strategy::Random], &cells);
        assert_eq!(report.training_sizes, vec![10, 12, 14]);

        let e = &report.curves[0];
        assert_eq!(e.completed_runs, 2);
        assert!((e.mean_error[0] - 0.45).abs() < 1e-15);
        // Population sigma of {0.4, 0.5} is 0.05.
        assert!((e.std_error[0] - 0.05).abs() < 1e-15);
        assert!((e.mean_error[2] - 0.15).abs() < 1e-15);

        // Entropy vs itself: ties everywhere, rate 1.
        let self_rate = &report.win_rates[0];
        assert_eq!(self_rate.competitor, Strategy::Entropy);
        assert!(self_rate.rate.iter().all(|&r| r == 1.0));

        // Vs random: batch 0 ties (2/2), batch 1 run0 wins run1 loses (1/2),
        // batch 2 entropy wins both (2/2).
        let vs_random = &report.win_rates[1];
        assert_eq!(vs_random.pairs, 2);
        assert_eq!(vs_random.rate, vec![1.0, 0.5, 1.0]);
    }

    #[test]
    fn failed_cells_are_marked_not_fatal() {
        let cells = vec![
            completed_cell(0, Strategy::Entropy, &[0.4, 0.2]),
            RunCell {
                run: 1,
                strategy: Strategy::Entropy,
                outcome: CellOutcome::Failed {
                    batch: 2,
                    message: "simulation diverged".into(),
                },
            },
            RunCell {
                run: 0,
                strategy: Strategy::Random,
                outcome: CellOutcome::Failed {
                    batch: 0,
                    message: "bad init".into(),
                },
            },
        ];
        let report = build_report("t", &[Strategy::Entropy, Strategy::Random], &cells);
        assert_eq!(report.curves[0].completed_runs, 1);
        assert_eq!(report.curves[1].completed_runs, 0);
        assert!(report.curves[1].mean_error.iter().all(|m| m.is_nan()));
        assert_eq!(report.failures.len(), 2);
        assert_eq!(report.failures[0].batch, 2);

        // No completed random runs, so the pair set is empty and the win
        // rate has no value.
        let vs_random = &report.win_rates[1];
        assert_eq!(vs_random.pairs, 0);
        assert!(vs_random.rate.iter().all(|r| r.is_nan()));

        let agg = aggregate_csv(&report);
        let random_row = agg
            .lines()
            .find(|l| l.starts_with("random,0,"))
            .unwrap();
        assert_eq!(random_row, "random,0,10,0,,,,,");
    }

    #[test]
    fn runs_csv_round_trips_through_the_reader() {
        let cells = vec![
            completed_cell(0, Strategy::Entropy, &[0.4, 0.25]),
            completed_cell(0, Strategy::Random, &[0.4, 0.35]),
            completed_cell(1, Strategy::Entropy, &[0.125, 0.0625]),
        ];
        let text = runs_csv(&cells);
        let back = read_runs_csv(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(strategies_in(&back), vec![Strategy::Entropy, Strategy::Random]);
        for (a, b) in cells.iter().zip(&back) {
            assert_eq!(a.run, b.run);
            assert_eq!(a.strategy, b.strategy);
            let (CellOutcome::Completed(ra), CellOutcome::Completed(rb)) =
                (&a.outcome, &b.outcome)
            else {
                panic!("round trip lost a cell");
            };
            assert_eq!(ra.records.len(), rb.records.len());
            for (x, y) in ra.records.iter().zip(&rb.records) {
                assert_eq!(x.batch, y.batch);
                assert_eq!(x.training_size, y.training_size);
                assert_eq!(x.error, y.error);
                assert_eq!(x.filtered_error, y.filtered_error);
                assert_eq!(x.coverage, y.coverage);
                assert_eq!(x.sigma_f2, y.sigma_f2);
                assert_eq!(x.lengthscales, y.lengthscales);
            }
        }

        assert!(read_runs_csv("nonsense").is_err());
        let truncated: String = text.lines().take(2).collect::<Vec<_>>().join("\n")
            + "\n0,entropy,9\n";
        assert!(read_runs_csv(&truncated).is_err());
    }

    #[test]
    fn summary_serializes_without_nan() {
        let spec = parse_config(FULL).unwrap()[0].clone();
        let cells = vec![completed_cell(0, Strategy::Entropy, &[0.4, 0.2])];
        let report = build_report("desk", &spec.strategies, &cells);
        let text = summary_json(&spec, "G[0,40](1 >= 0)", &[41, 41], 1681, &report);
        assert!(!text.contains("NaN"));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["results"][0]["final_mean_error"], 0.2);
        // Random completed no runs, so its final cells are null.
        assert!(value["results"][1]["final_mean_error"].is_null());
        assert_eq!(value["total_budget"], 150);
    }
}
