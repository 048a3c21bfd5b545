use thiserror::Error;

/// Unified error type for the whole toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("kernel matrix is not positive definite (final jitter tried: {jitter:.3e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training set too small: need at least {need}, have {have}")]
    TrainingSetTooSmall { need: usize, have: usize },

    #[error("syntax error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },

    #[error("trace has no channel named {0:?}")]
    MissingChannel(String),

    #[error("temporal window [{lo:.6}, {hi:.6}] contains no trace samples")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("state blew up (non-finite) at t = {t:.4}")]
    NonFiniteState { t: f64 },

    #[error("parameter point outside system bounds in dimension {dim}")]
    OutOfBounds { dim: usize },

    #[error("unknown benchmark {0:?}")]
    UnknownBenchmark(String),

    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),

    #[error("acquisition scores are empty (no available locations)")]
    EmptyPool,

    #[error("invalid acquisition scores: {0}")]
    InvalidScores(String),

    #[error("batch size {batch} exceeds available candidates {candidates}")]
    BatchTooLarge { batch: usize, candidates: usize },

    #[error("k-DPP phase 1 failed to select {want} eigenvectors after {attempts} attempts")]
    DppPhaseOne { want: usize, attempts: usize },

    #[error("k-DPP phase 2 basis update failed: {0}")]
    DppPhaseTwo(String),

    #[error("invalid DPP kernel: {0}")]
    InvalidDppKernel(String),

    #[error("simulation budget {budget} exceeds grid size {grid}")]
    BudgetExceedsGrid { budget: usize, grid: usize },

    #[error("run aborted in batch {batch}: {source}")]
    LoopAborted {
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid experiment config: {0}")]
    InvalidExperiment(String),

    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
