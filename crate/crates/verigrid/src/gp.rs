//! Gaussian-process regression over noise-free robustness samples.
//!
//! The model is standard GP regression with an ARD squared-exponential
//! kernel. Simulations are deterministic, so there is no measurement-noise
//! term; a small diagonal jitter keeps the Cholesky factorization alive when
//! training points nearly coincide. For a query point the posterior is
//!
//! ```text
//! mean     = k*' K^-1 y
//! variance = k(q, q) - k*' K^-1 k*
//! ```
//!
//! with `K` the kernel matrix over the training inputs plus jitter on the
//! diagonal. [`prob_satisfaction`] converts a posterior into the probability
//! that the underlying robustness value is positive, which downstream code
//! treats as the probability that the requirement holds at that parameter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::ParamPoint;

/// Jitter ladder: start at `1e-10 * signal_variance`, escalate by 10x while
/// the factorization fails, give up past `1e-4 * signal_variance`.
const JITTER_START_RATIO: f64 = 1e-10;
const JITTER_CAP_RATIO: f64 = 1e-4;

/// ARD squared-exponential kernel hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    signal_variance: f64,
    lengthscales: Vec<f64>,
    jitter: f64,
}

impl KernelParams {
    /// Jitter defaults to `1e-10 * signal_variance`.
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        let jitter = JITTER_START_RATIO * signal_variance;
        Self::with_jitter(signal_variance, lengthscales, jitter)
    }

    pub fn with_jitter(signal_variance: f64, lengthscales: Vec<f64>, jitter: f64) -> Result<Self> {
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(Error::InvalidHyperparameters(format!(
                "signal variance must be positive and finite, got {signal_variance}"
            )));
        }
        if lengthscales.is_empty() {
            return Err(Error::InvalidHyperparameters(
                "need at least one lengthscale".into(),
            ));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidHyperparameters(format!(
                "lengthscales must be positive and finite, got {l}"
            )));
        }
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(Error::InvalidHyperparameters(format!(
                "jitter must be non-negative and finite, got {jitter}"
            )));
        }
        Ok(Self {
            signal_variance,
            lengthscales,
            jitter,
        })
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }
}

/// `sigma_f^2 * exp(-1/2 * sum_d (a_d - b_d)^2 / l_d^2)`.
pub fn kernel_eval(a: &ParamPoint, b: &ParamPoint, params: &KernelParams) -> Result<f64> {
    if a.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: a.dim(),
        });
    }
    if b.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: b.dim(),
        });
    }
    Ok(params.signal_variance * kernel_correlation(a.coords(), b.coords(), &params.lengthscales))
}

/// Correlation part, without the signal-variance factor.
fn kernel_correlation(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    let mut q = 0.0;
    for d in 0..lengthscales.len() {
        let r = (a[d] - b[d]) / lengthscales[d];
        q += r * r;
    }
    (-0.5 * q).exp()
}

/// Parameter points paired with their measured robustness values.
///
/// Exact coordinate duplicates are dropped, keeping the first occurrence.
/// Points in the closed loop always come from distinct grid locations, so
/// dedup here is a guard against caller mistakes rather than a merge policy.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    points: Vec<ParamPoint>,
    values: Vec<f64>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (ParamPoint, f64)>) -> Self {
        let mut set = Self::new();
        for (p, v) in pairs {
            set.push(p, v);
        }
        set
    }

    /// Returns false when the point was an exact duplicate and got dropped.
    pub fn push(&mut self, point: ParamPoint, value: f64) -> bool {
        if self.points.iter().any(|p| p == &point) {
            return false;
        }
        self.points.push(point);
        self.values.push(value);
        true
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ParamPoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(ParamPoint::dim)
    }
}

/// Posterior mean and variance at a single query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: f64,
    pub variance: f64,
}

/// A fitted GP: hyperparameters, training data, and the Cholesky factor of
/// the jittered kernel matrix together with `alpha = K^-1 y`.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    jitter_used: f64,
    points: Vec<ParamPoint>,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
}

/// Builds the kernel matrix (no jitter) over a point set.
pub(crate) fn kernel_matrix(points: &[ParamPoint], params: &KernelParams) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance;
        for j in 0..i {
            let v = params.signal_variance
                * kernel_correlation(
                    points[i].coords(),
                    points[j].coords(),
                    &params.lengthscales,
                );
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Tries `chol(K + jitter*I)`, escalating jitter by 10x per failure up to
/// `JITTER_CAP_RATIO * signal_variance`. Returns the lower factor and the
/// jitter that actually worked.
pub(crate) fn factorize_with_ladder(
    k: &DMatrix<f64>,
    signal_variance: f64,
    start_jitter: f64,
) -> Result<(DMatrix<f64>, f64)> {
    let cap = JITTER_CAP_RATIO * signal_variance;
    let mut jitter = start_jitter.max(JITTER_START_RATIO * signal_variance);
    loop {
        let mut kj = k.clone();
        for i in 0..k.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = kj.cholesky() {
            return Ok((chol.unpack(), jitter));
        }
        if jitter >= cap {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        jitter = (jitter * 10.0).min(cap);
    }
}

/// Fits the GP, i.e. factorizes the kernel matrix and solves for alpha.
pub fn fit(training: &TrainingSet, params: &KernelParams) -> Result<GpModel> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let dim = training.dim().unwrap();
    if dim != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: dim,
        });
    }
    let k = kernel_matrix(training.points(), params);
    let (chol_l, jitter_used) = factorize_with_ladder(&k, params.signal_variance, params.jitter)?;
    let y = DVector::from_column_slice(training.values());
    // alpha = L^-T (L^-1 y)
    let mut alpha = y;
    chol_l.solve_lower_triangular_mut(&mut alpha);
    chol_l.tr_solve_lower_triangular_mut(&mut alpha);
    Ok(GpModel {
        params: params.clone(),
        jitter_used,
        points: training.points().to_vec(),
        chol_l,
        alpha,
    })
}

impl GpModel {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Jitter the factorization ended up using (>= the configured jitter).
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn training_len(&self) -> usize {
        self.points.len()
    }

    pub fn training_points(&self) -> &[ParamPoint] {
        &self.points
    }

    /// Posterior at one query. Negative variances from cancellation are
    /// clamped to zero.
    pub fn predict(&self, query: &ParamPoint) -> Result<PredictiveDistribution> {
        if query.dim() != self.params.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim(),
                got: query.dim(),
            });
        }
        let n = self.points.len();
        let mut kstar = DVector::zeros(n);
        for i in 0..n {
            kstar[i] = self.params.signal_variance
                * kernel_correlation(
                    self.points[i].coords(),
                    query.coords(),
                    &self.params.lengthscales,
                );
        }
        let mean = kstar.dot(&self.alpha);
        let mut w = kstar;
        self.chol_l.solve_lower_triangular_mut(&mut w);
        let variance = (self.params.signal_variance - w.norm_squared()).max(0.0);
        Ok(PredictiveDistribution { mean, variance })
    }
}

/// Probability that the latent value at the query is positive:
/// `1/2 + 1/2 * erf(mean / sqrt(2 * variance))`.
///
/// At zero variance the posterior is a point mass, so the probability
/// degenerates to 1, 0, or 1/2 depending on the sign of the mean.
pub fn prob_satisfaction(dist: &PredictiveDistribution) -> f64 {
    if dist.variance <= 0.0 {
        return if dist.mean > 0.0 {
            1.0
        } else if dist.mean < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    0.5 + 0.5 * libm::erf(dist.mean / (2.0 * dist.variance).sqrt())
}
