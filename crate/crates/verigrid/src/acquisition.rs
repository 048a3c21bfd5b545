//! Scoring of unobserved grid locations for the active-sampling loop.
//!
//! Four strategies, all expressed as score maximization so one selection
//! path serves them all: binary classification entropy of the satisfaction
//! probability, posterior variance, expected model change (stored as
//! negated |mean|, since the smallest margin changes the model most), and
//! seeded-random scores as the passive baseline. Entropy scores double as
//! the weights of the importance distribution the batch sampler draws
//! candidates from.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::{prob_satisfaction, GpModel, PredictiveDistribution};
use crate::grid::ParamGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Entropy,
    Variance,
    Emc,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Entropy,
        Strategy::Variance,
        Strategy::Emc,
        Strategy::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Entropy => "entropy",
            Strategy::Variance => "variance",
            Strategy::Emc => "emc",
            Strategy::Random => "random",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Strategy::Entropy),
            "variance" => Ok(Strategy::Variance),
            "emc" => Ok(Strategy::Emc),
            "random" => Ok(Strategy::Random),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Binary classification entropy in bits; 0*log(0) reads as 0, so certainty
/// at either end scores exactly zero and p = 1/2 scores exactly one.
pub fn entropy_score(p_sat: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_sat));
    let term = |q: f64| if q <= 0.0 { 0.0 } else { q * q.log2() };
    -(term(p_sat) + term(1.0 - p_sat))
}

/// Score of one predictive distribution under a non-random strategy.
pub fn strategy_score(strategy: Strategy, dist: &PredictiveDistribution) -> f64 {
    match strategy {
        Strategy::Entropy => entropy_score(prob_satisfaction(dist)),
        Strategy::Variance => dist.variance,
        Strategy::Emc => -dist.mean.abs(),
        Strategy::Random => panic!("random scores come from the seeded stream, not the model"),
    }
}

/// The unobserved portion U of the sampling grid. Locations leave the pool
/// as they are observed and never return, which keeps U and the training
/// set disjoint.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    grid: ParamGrid,
    available: Vec<bool>,
    remaining: usize,
}

impl CandidatePool {
    pub fn new(grid: ParamGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            available: vec![true; n],
            remaining: n,
        }
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    pub fn is_available(&self, index: usize) -> bool {
        self.available.get(index).copied().unwrap_or(false)
    }

    /// Removes a location from the pool; observing the same location twice
    /// would put it in U and D simultaneously, so that is an error.
    pub fn mark_observed(&mut self, index: usize) -> Result<()> {
        if index >= self.available.len() || !self.available[index] {
            return Err(Error::DuplicatePoint(index));
        }
        self.available[index] = false;
        self.remaining -= 1;
        Ok(())
    }

    /// Grid indices still available, ascending.
    pub fn available_indices(&self) -> Vec<usize> {
        self.available
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }
}

/// Per-location scores for the available part of a pool. `indices[k]`
/// names the grid location that `scores[k]` rates; indices ascend.
#[derive(Debug, Clone)]
pub struct AcquisitionScores {
    pub strategy: Strategy,
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Scores every available location. Only the random strategy consumes the
/// RNG; model-based strategies leave it untouched so seed bookkeeping stays
/// independent of strategy choice.
pub fn score_pool(
    model: &GpModel,
    pool: &CandidatePool,
    strategy: Strategy,
    rng: &mut impl Rng,
) -> Result<AcquisitionScores> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let indices = pool.available_indices();
    let scores = match strategy {
        Strategy::Random => indices.iter().map(|_| rng.random::<f64>()).collect(),
        _ => indices
            .par_iter()
            .map(|&i| {
                let dist = model.predict(&pool.grid().point(i))?;
                Ok(strategy_score(strategy, &dist))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok(AcquisitionScores {
        strategy,
        indices,
        scores,
    })
}

/// Argmax selection; equal scores fall to the lowest grid index, so a
/// given score vector always picks the same location.
pub fn select_sequential(scores: &AcquisitionScores) -> Result<usize> {
    if scores.scores.is_empty() {
        return Err(Error::InvalidScores("no scores to select from".into()));
    }
    if scores.scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidScores("scores contain NaN".into()));
    }
    let mut best = 0;
    for (k, &s) in scores.scores.iter().enumerate() {
        if s > scores.scores[best] {
            best = k;
        }
    }
    Ok(scores.indices[best])
}

/// Entropy-proportional selection probabilities over the available pool.
#[derive(Debug, Clone)]
pub struct ImportanceDistribution {
    pub indices: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// The entropy mass Z_H the probabilities were normalized by.
    pub normalizer: f64,
    /// True when Z_H was too small to normalize and the distribution fell
    /// back to uniform. Loops near convergence hit this once the model is
    /// certain everywhere; falling back keeps them sampling instead of
    /// dying, and the flag surfaces in run metrics.
    pub degenerate: bool,
}

pub fn importance_distribution(scores: &AcquisitionScores) -> Result<ImportanceDistribution> {
    if scores.strategy != Strategy::Entropy {
        return Err(Error::InvalidScores(format!(
            "importance weights need entropy scores, got {}",
            scores.strategy
        )));
    }
    if scores.scores.is_empty() || scores.scores.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidScores(
            "entropy scores must be nonnegative".into(),
        ));
    }
    let z: f64 = scores.scores.iter().sum();
    let n = scores.scores.len();
    let (probabilities, degenerate) = if z < 1e-12 {
        (vec![1.0 / n as f64; n], true)
    } else {
        (scores.scores.iter().map(|&h| h / z).collect(), false)
    };
    Ok(ImportanceDistribution {
        indices: scores.indices.clone(),
        probabilities,
        normalizer: z,
        degenerate,
    })
}
