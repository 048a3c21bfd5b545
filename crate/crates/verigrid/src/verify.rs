//! Closed-loop verification drivers.
//!
//! A run starts from a random training set, fits the surrogate, and then
//! alternates batch selection, simulation, and retraining for a fixed number
//! of batches under a hard simulation budget. Region estimates are scored
//! against an exhaustive ground-truth sweep by total misclassification error
//! and by the error among locations the model is confident about.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    entropy_score, importance_distribution, score_pool, AcquisitionScores, CandidatePool, Strategy,
};
use crate::error::{Error, Result};
use crate::gp::{
    fit, prob_satisfaction, GpModel, KernelParams, PredictiveDistribution, TrainingSet,
};
use crate::grid::{ParamGrid, ParamPoint};
use crate::hyperopt::{optimize_hyperparams, OptimizerOptions};
use crate::kdpp::{select_batch, DppConfig};
use crate::sim::{measure, SimConfig, System};
use crate::stl::StlFormula;
use crate::stl_parse::parse;

/// Stream derivation: one master seed fans out into named, decorrelated
/// streams so initialization, selection, and optimizer restarts never share
/// draws.
pub fn derive_rng(seed: u64, tag: &str) -> ChaCha12Rng {
    let mut h = 0xcbf29ce484222325u64 ^ seed.wrapping_mul(0x9e3779b97f4a7c15);
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^= h >> 31;
    ChaCha12Rng::seed_from_u64(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMethod {
    /// Importance-weighted candidates thinned by the determinantal sampler.
    Kdpp,
    /// Greedy argmax of estimated entropy with covariance-only updates.
    ApproxEntropy,
    /// Top-M scores with no diversity mechanism.
    PlainArgmax,
}

impl BatchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BatchMethod::Kdpp => "kdpp",
            BatchMethod::ApproxEntropy => "approx_entropy",
            BatchMethod::PlainArgmax => "plain_argmax",
        }
    }
}

impl std::str::FromStr for BatchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kdpp" => Ok(BatchMethod::Kdpp),
            "approx_entropy" => Ok(BatchMethod::ApproxEntropy),
            "plain_argmax" => Ok(BatchMethod::PlainArgmax),
            other => Err(Error::InvalidExperiment(format!(
                "unknown batch method {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for BatchMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperMode {
    /// Re-optimize after every batch, warm-started from the previous optimum.
    OptimizeEachBatch,
    /// Keep the initial hyperparameters for the whole run.
    Static,
}

impl HyperMode {
    pub fn name(self) -> &'static str {
        match self {
            HyperMode::OptimizeEachBatch => "optimize_each_batch",
            HyperMode::Static => "static",
        }
    }
}

impl std::str::FromStr for HyperMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimize_each_batch" => Ok(HyperMode::OptimizeEachBatch),
            "static" => Ok(HyperMode::Static),
            other => Err(Error::InvalidExperiment(format!(
                "unknown hyperparameter mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for HyperMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Everything one closed-loop run needs besides the system and requirement.
#[derive(Debug, Clone)]
pub struct LoopConfig {
    /// Random training points observed before the loop starts.
    pub initial_count: usize,
    /// Locations simulated per batch (M).
    pub batch_size: usize,
    /// Number of batches (T).
    pub batch_count: usize,
    pub strategy: Strategy,
    pub batch_method: BatchMethod,
    pub hyper_mode: HyperMode,
    pub seed: u64,
    pub dpp: DppConfig,
    /// Initial lengthscales as a fraction of each dimension's span. The
    /// hyperparameter ablation mis-scales this on purpose.
    pub lengthscale_factor: f64,
    /// Optimizer restarts for the initial fit; batch refits warm-start from
    /// the previous optimum with a single start.
    pub restarts: usize,
    pub confidence_threshold: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            initial_count: 50,
            batch_size: 5,
            batch_count: 20,
            strategy: Strategy::Entropy,
            batch_method: BatchMethod::Kdpp,
            hyper_mode: HyperMode::OptimizeEachBatch,
            seed: 0,
            dpp: DppConfig::default(),
            lengthscale_factor: 0.25,
            restarts: 3,
            confidence_threshold: 0.95,
        }
    }
}

impl LoopConfig {
    /// Total simulations a run consumes: the initial set plus T batches of M.
    pub fn total_budget(&self) -> usize {
        self.initial_count + self.batch_size * self.batch_count
    }

    pub fn validate(&self, grid_len: usize) -> Result<()> {
        if self.initial_count < 2 {
            return Err(Error::InvalidExperiment(
                "initial training set needs at least 2 points".into(),
            ));
        }
        if self.batch_size < 1 || self.batch_count < 1 {
            return Err(Error::InvalidExperiment(
                "batch size and batch count must be at least 1".into(),
            ));
        }
        if self.total_budget() > grid_len {
            return Err(Error::BudgetExceedsGrid {
                budget: self.total_budget(),
                grid: grid_len,
            });
        }
        if !(0.5..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::InvalidExperiment(format!(
                "confidence threshold {} outside [0.5, 1]",
                self.confidence_threshold
            )));
        }
        if !(self.lengthscale_factor > 0.0) {
            return Err(Error::InvalidExperiment(
                "lengthscale factor must be positive".into(),
            ));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidExperiment(
                "optimizer needs at least one start".into(),
            ));
        }
        if self.batch_method != BatchMethod::PlainArgmax && self.strategy != Strategy::Entropy {
            return Err(Error::InvalidExperiment(format!(
                "batch method {} weights candidates by entropy and cannot run under the {} strategy",
                self.batch_method, self.strategy
            )));
        }
        Ok(())
    }
}

/// Predicted partition of the grid plus per-location confidence. The fail
/// region is the complement of `sat_mask`, so the two estimated regions
/// partition the grid by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub sat_mask: Vec<bool>,
    /// Probability of satisfaction at each location.
    pub confidence: Vec<f64>,
}

/// Labels every grid location by the sign of the posterior mean. A location
/// is satisfied only when the mean is strictly positive; an exactly-zero
/// mean lands on the fail side, matching the robustness convention.
pub fn classify_regions(model: &GpModel, grid: &ParamGrid) -> Result<RegionEstimate> {
    let dists: Vec<PredictiveDistribution> = (0..grid.len())
        .into_par_iter()
        .map(|i| model.predict(&grid.point(i)))
        .collect::<Result<_>>()?;
    Ok(RegionEstimate {
        sat_mask: dists.iter().map(|d| d.mean > 0.0).collect(),
        confidence: dists.iter().map(prob_satisfaction).collect(),
    })
}

/// Fraction of grid locations whose predicted label disagrees with truth.
pub fn misclassification_error(estimate: &RegionEstimate, truth: &[bool]) -> Result<f64> {
    if estimate.sat_mask.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: estimate.sat_mask.len(),
        });
    }
    let wrong = estimate
        .sat_mask
        .iter()
        .zip(truth)
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Error among confidently-labeled locations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredError {
    /// Misclassified fraction of the retained locations.
    pub error: f64,
    /// Fraction of the grid that met the threshold.
    pub coverage: f64,
    /// True when nothing met the threshold; error and coverage are both 0.
    pub empty: bool,
}

/// Misclassification error restricted to locations where the model commits
/// to either label with probability at least `threshold`. At threshold 0.5
/// every location is retained and the result equals the total error.
pub fn confidence_filtered_error(
    estimate: &RegionEstimate,
    truth: &[bool],
    threshold: f64,
) -> Result<FilteredError> {
    if estimate.sat_mask.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: estimate.sat_mask.len(),
        });
    }
    if !(0.5..=1.0).contains(&threshold) {
        return Err(Error::InvalidExperiment(format!(
            "confidence threshold {threshold} outside [0.5, 1]"
        )));
    }
    let mut retained = 0usize;
    let mut wrong = 0usize;
    for ((&sat, &p), &t) in estimate
        .sat_mask
        .iter()
        .zip(&estimate.confidence)
        .zip(truth)
    {
        if p.max(1.0 - p) >= threshold {
            retained += 1;
            if sat != t {
                wrong += 1;
            }
        }
    }
    if retained == 0 {
        return Ok(FilteredError {
            error: 0.0,
            coverage: 0.0,
            empty: true,
        });
    }
    Ok(FilteredError {
        error: wrong as f64 / retained as f64,
        coverage: retained as f64 / truth.len() as f64,
        empty: false,
    })
}

/// Exhaustive reference: robustness at every grid location plus the derived
/// satisfaction mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub robustness: Vec<f64>,
    pub sat_mask: Vec<bool>,
}

impl GroundTruth {
    pub fn from_robustness(robustness: Vec<f64>) -> Self {
        let sat_mask = robustness.iter().map(|&r| r > 0.0).collect();
        Self {
            robustness,
            sat_mask,
        }
    }
}

/// On-disk form of a cached sweep. The key fields are stored alongside the
/// data and re-checked on load, so a filename hash collision cannot serve
/// stale truth.
#[derive(Serialize, Deserialize)]
struct TruthFile {
    benchmark: String,
    formula: String,
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    dt: f64,
    t_final: f64,
    robustness: Vec<f64>,
}

impl TruthFile {
    fn key_matches(&self, other: &TruthFile) -> bool {
        self.benchmark == other.benchmark
            && self.formula == other.formula
            && self.bounds == other.bounds
            && self.resolution == other.resolution
            && self.dt == other.dt
            && self.t_final == other.t_final
    }
}

fn truth_cache_path(dir: &Path, key: &TruthFile) -> PathBuf {
    let mut h = DefaultHasher::new();
    format!(
        "{}|{}|{:?}|{:?}|{:?}|{:?}",
        key.benchmark, key.formula, key.bounds, key.resolution, key.dt, key.t_final
    )
    .hash(&mut h);
    dir.join(format!("truth-{}-{:016x}.json", key.benchmark, h.finish()))
}

/// Measures the requirement at every grid location, in parallel. With a
/// cache directory, a sweep whose key (benchmark, formula, grid, integrator
/// step) matches a stored file is loaded instead of recomputed; unreadable
/// or mismatched files are silently recomputed and overwritten.
pub fn ground_truth_sweep(
    system: &dyn System,
    formula_text: &str,
    grid: &ParamGrid,
    sim: &SimConfig,
    cache_dir: Option<&Path>,
) -> Result<GroundTruth> {
    let key = TruthFile {
        benchmark: system.name().to_string(),
        formula: formula_text.to_string(),
        bounds: (0..grid.dim())
            .map(|d| (grid.bounds().lo(d), grid.bounds().hi(d)))
            .collect(),
        resolution: grid.resolution(),
        dt: sim.dt,
        t_final: sim.t_final,
        robustness: Vec::new(),
    };
    let path = cache_dir.map(|d| truth_cache_path(d, &key));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(stored) = serde_json::from_str::<TruthFile>(&text) {
                if stored.key_matches(&key) && stored.robustness.len() == grid.len() {
                    return Ok(GroundTruth::from_robustness(stored.robustness));
                }
            }
        }
    }
    let formula = parse(formula_text)?;
    let robustness: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| measure(system, &grid.point(i), &formula, sim).map(|m| m.value))
        .collect::<Result<_>>()?;
    if let Some(p) = &path {
        let file = TruthFile { robustness: robustness.clone(), ..key };
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string(&file).expect("truth file serializes");
        std::fs::write(p, text)?;
    }
    Ok(GroundTruth::from_robustness(robustness))
}

/// Posterior variance of a model whose training locations were extended by
/// pending, not-yet-measured points. Measurements never enter the variance,
/// so the refit uses placeholder values; its mean is meaningless and the
/// held mean must come from the original model.
pub struct PendingVariance {
    refit: GpModel,
}

impl PendingVariance {
    pub fn variance(&self, query: &ParamPoint) -> Result<f64> {
        Ok(self.refit.predict(query)?.variance)
    }
}

pub fn update_covariance_with_pending(
    model: &GpModel,
    pending: &[ParamPoint],
) -> Result<PendingVariance> {
    let mut augmented = TrainingSet::new();
    for p in model.training_points() {
        augmented.push(p.clone(), 0.0);
    }
    for (slot, p) in pending.iter().enumerate() {
        if !augmented.push(p.clone(), 0.0) {
            return Err(Error::DuplicatePoint(slot));
        }
    }
    Ok(PendingVariance {
        refit: fit(&augmented, model.params())?,
    })
}

/// Greedy batch selection by estimated entropy: each pick maximizes the
/// entropy of the approximate satisfaction probability, whose mean is held
/// at the trained model while the variance absorbs the pending picks. A
/// picked location's variance collapses, so its entropy dies and the next
/// pick lands elsewhere.
pub fn select_batch_approx_entropy(
    model: &GpModel,
    pool: &CandidatePool,
    batch: usize,
) -> Result<Vec<usize>> {
    if pool.len() < batch {
        return Err(Error::BatchTooLarge {
            batch,
            candidates: pool.len(),
        });
    }
    let grid = pool.grid();
    let available = pool.available_indices();
    let held_means: Vec<f64> = available
        .par_iter()
        .map(|&g| model.predict(&grid.point(g)).map(|d| d.mean))
        .collect::<Result<_>>()?;
    let mut chosen: Vec<usize> = Vec::with_capacity(batch);
    let mut chosen_points: Vec<ParamPoint> = Vec::with_capacity(batch);
    for _ in 0..batch {
        let updated = update_covariance_with_pending(model, &chosen_points)?;
        let scores: Vec<Option<f64>> = available
            .par_iter()
            .zip(&held_means)
            .map(|(&g, &mean)| {
                if chosen.contains(&g) {
                    return Ok(None);
                }
                let variance = updated.variance(&grid.point(g))?;
                let p = prob_satisfaction(&PredictiveDistribution { mean, variance });
                Ok(Some(entropy_score(p)))
            })
            .collect::<Result<_>>()?;
        let mut best: Option<(usize, f64)> = None;
        for (pos, score) in scores.iter().enumerate() {
            if let Some(h) = score {
                if best.is_none_or(|(_, hb)| *h > hb) {
                    best = Some((available[pos], *h));
                }
            }
        }
        let (g, _) = best.ok_or(Error::EmptyPool)?;
        chosen.push(g);
        chosen_points.push(grid.point(g));
    }
    Ok(chosen)
}

/// Top-M scores, ties broken toward the lower grid index. With random
/// scores this is exactly passive sampling of M distinct locations.
fn select_top_m(scores: &AcquisitionScores, batch: usize) -> Result<Vec<usize>> {
    if scores.scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidScores("scores contain NaN".into()));
    }
    if scores.indices.len() < batch {
        return Err(Error::BatchTooLarge {
            batch,
            candidates: scores.indices.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.indices.len()).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .unwrap()
            .then(scores.indices[a].cmp(&scores.indices[b]))
    });
    Ok(order[..batch].iter().map(|&i| scores.indices[i]).collect())
}

/// One row of run metrics, captured after the initial fit (batch 0) and
/// after every batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch: usize,
    pub training_size: usize,
    pub error: f64,
    pub filtered_error: f64,
    pub coverage: f64,
    pub filtered_empty: bool,
    pub sigma_f2: f64,
    pub lengthscales: Vec<f64>,
    /// Wall time of this step. Excluded from deterministic outputs.
    pub seconds: f64,
    /// True when the importance distribution had to fall back to uniform.
    pub degenerate_importance: bool,
}

/// A finished run: per-batch metrics, the final region estimate, and every
/// observed grid index in observation order.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<BatchRecord>,
    pub estimate: RegionEstimate,
    pub observed: Vec<usize>,
}

fn measure_at(
    system: &dyn System,
    formula: &StlFormula,
    grid: &ParamGrid,
    sim: &SimConfig,
    ids: &[usize],
) -> Result<Vec<f64>> {
    ids.par_iter()
        .map(|&g| measure(system, &grid.point(g), formula, sim).map(|m| m.value))
        .collect()
}

/// Hyperparameters before any optimization: signal variance from the sample
/// variance of the measurements (floored away from zero) and lengthscales
/// proportional to each dimension's span.
fn initial_params(training: &TrainingSet, grid: &ParamGrid, factor: f64) -> Result<KernelParams> {
    let y = training.values();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let lengthscales = (0..grid.dim())
        .map(|d| factor * grid.bounds().span(d))
        .collect();
    KernelParams::new(var.max(1e-6), lengthscales)
}

struct LoopState<'a> {
    system: &'a dyn System,
    formula: &'a StlFormula,
    grid: &'a ParamGrid,
    truth: &'a GroundTruth,
    config: &'a LoopConfig,
    sim: SimConfig,
    pool: CandidatePool,
    training: TrainingSet,
    params: KernelParams,
    model: Option<GpModel>,
    observed: Vec<usize>,
    rng_select: ChaCha12Rng,
    rng_hyper: ChaCha12Rng,
}

impl LoopState<'_> {
    fn refit(&mut self, restarts: usize) -> Result<()> {
        if self.config.hyper_mode == HyperMode::OptimizeEachBatch {
            let options = OptimizerOptions::default();
            self.params = optimize_hyperparams(
                &self.training,
                &self.params,
                restarts,
                &options,
                &mut self.rng_hyper,
            )?
            .params;
        }
        self.model = Some(fit(&self.training, &self.params)?);
        Ok(())
    }

    fn observe(&mut self, ids: &[usize]) -> Result<()> {
        let values = measure_at(self.system, self.formula, self.grid, &self.sim, ids)?;
        for (&g, &v) in ids.iter().zip(&values) {
            self.pool.mark_observed(g)?;
            self.training.push(self.grid.point(g), v);
            self.observed.push(g);
        }
        Ok(())
    }

    fn select(&mut self) -> Result<(Vec<usize>, bool)> {
        let model = self.model.as_ref().expect("model fitted before selection");
        let m = self.config.batch_size;
        match self.config.batch_method {
            BatchMethod::Kdpp => {
                let scores =
                    score_pool(model, &self.pool, self.config.strategy, &mut self.rng_select)?;
                let dist = importance_distribution(&scores)?;
                let ids = select_batch(
                    &dist,
                    &self.pool,
                    m,
                    &self.config.dpp,
                    &mut self.rng_select,
                )?;
                Ok((ids, dist.degenerate))
            }
            BatchMethod::ApproxEntropy => {
                Ok((select_batch_approx_entropy(model, &self.pool, m)?, false))
            }
            BatchMethod::PlainArgmax => {
                let scores =
                    score_pool(model, &self.pool, self.config.strategy, &mut self.rng_select)?;
                Ok((select_top_m(&scores, m)?, false))
            }
        }
    }

    fn snapshot(
        &self,
        batch: usize,
        seconds: f64,
        degenerate: bool,
    ) -> Result<(BatchRecord, RegionEstimate)> {
        let model = self.model.as_ref().expect("model fitted before snapshot");
        let estimate = classify_regions(model, self.grid)?;
        let error = misclassification_error(&estimate, &self.truth.sat_mask)?;
        let filtered = confidence_filtered_error(
            &estimate,
            &self.truth.sat_mask,
            self.config.confidence_threshold,
        )?;
        let record = BatchRecord {
            batch,
            training_size: self.training.len(),
            error,
            filtered_error: filtered.error,
            coverage: filtered.coverage,
            filtered_empty: filtered.empty,
            sigma_f2: model.params().signal_variance(),
            lengthscales: model.params().lengthscales().to_vec(),
            seconds,
            degenerate_importance: degenerate,
        };
        Ok((record, estimate))
    }
}

/// Runs the full closed loop: random initialization, then T batches of
/// select, simulate, extend, retrain. Returns per-batch metrics (batch 0 is
/// the state after the initial fit), the final region estimate, and the
/// observation order. Any failure aborts the run tagged with its batch
/// index; the initialization phase counts as batch 0.
pub fn run_closed_loop(
    system: &dyn System,
    formula: &StlFormula,
    grid: &ParamGrid,
    truth: &GroundTruth,
    config: &LoopConfig,
) -> Result<RunResult> {
    config.validate(grid.len())?;
    if truth.sat_mask.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: truth.sat_mask.len(),
        });
    }
    let mut state = LoopState {
        system,
        formula,
        grid,
        truth,
        config,
        sim: system.default_sim_config(),
        pool: CandidatePool::new(grid.clone()),
        training: TrainingSet::new(),
        params: KernelParams::new(1.0, vec![1.0; grid.dim()])?,
        model: None,
        observed: Vec::with_capacity(config.total_budget()),
        rng_select: derive_rng(config.seed, "select"),
        rng_hyper: derive_rng(config.seed, "hyper"),
    };

    let wrap = |batch: usize| move |e: Error| Error::LoopAborted { batch, source: Box::new(e) };

    let start = Instant::now();
    let mut rng_init = derive_rng(config.seed, "init");
    let initial: Vec<usize> =
        rand::seq::index::sample(&mut rng_init, grid.len(), config.initial_count).into_vec();
    state.observe(&initial).map_err(wrap(0))?;
    state.params = initial_params(&state.training, grid, config.lengthscale_factor)?;
    state.refit(config.restarts).map_err(wrap(0))?;
    let (record, mut estimate) = state
        .snapshot(0, start.elapsed().as_secs_f64(), false)
        .map_err(wrap(0))?;
    let mut records = vec![record];

    for batch in 1..=config.batch_count {
        let start = Instant::now();
        let (ids, degenerate) = state.select().map_err(wrap(batch))?;
        state.observe(&ids).map_err(wrap(batch))?;
        state.refit(1).map_err(wrap(batch))?;
        let (record, est) = state
            .snapshot(batch, start.elapsed().as_secs_f64(), degenerate)
            .map_err(wrap(batch))?;
        records.push(record);
        estimate = est;
    }

    Ok(RunResult {
        records,
        estimate,
        observed: state.observed,
    })
}

/// The greedy approximate-entropy variant of the loop: identical
/// bookkeeping, with batches chosen by covariance-only entropy updates
/// instead of the determinantal sampler.
pub fn run_batch_approx_entropy(
    system: &dyn System,
    formula: &StlFormula,
    grid: &ParamGrid,
    truth: &GroundTruth,
    config: &LoopConfig,
) -> Result<RunResult> {
    let mut config = config.clone();
    config.strategy = Strategy::Entropy;
    config.batch_method = BatchMethod::ApproxEntropy;
    run_closed_loop(system, formula, grid, truth, &config)
}
