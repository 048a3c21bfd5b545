//! Marginal-likelihood evaluation and hyperparameter optimization.
//!
//! Hyperparameters live in log space, `eta = (ln sigma_f^2, ln l_1, ...,
//! ln l_p)`, which keeps them positive and makes the scale of the gradient
//! uniform. The optimizer is plain gradient ascent with an Armijo
//! backtracking line search and random restarts; kernel matrices here top
//! out at a few hundred rows, so the cost per iteration is negligible and
//! robustness matters more than convergence rate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gp::{kernel_matrix, KernelParams, TrainingSet};
use nalgebra::DVector;

const LOG_BOUND: f64 = 18.42; // e^18.42 ~ 1e8, keeps exp() well away from overflow
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

/// Log marginal likelihood of the training data under the given
/// hyperparameters, together with its gradient with respect to the
/// log-transformed hyperparameters `(ln sigma_f^2, ln l_1, ..., ln l_p)`.
///
/// The jitter in `params` is held fixed; it is not a hyperparameter.
pub fn log_marginal_likelihood(
    training: &TrainingSet,
    params: &KernelParams,
) -> Result<(f64, Vec<f64>)> {
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
    let n = training.len();
    let p = params.dim();
    let ktilde = kernel_matrix(training.points(), params);
    let mut ktot = ktilde.clone();
    for i in 0..n {
        ktot[(i, i)] += params.jitter();
    }
    let chol = ktot.cholesky().ok_or(Error::NotPositiveDefinite {
        jitter: params.jitter(),
    })?;
    let y = DVector::from_column_slice(training.values());
    let alpha = chol.solve(&y);
    let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * y.dot(&alpha)
        - 0.5 * log_det
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // grad_k = 1/2 tr((alpha alpha' - K^-1) dK/d eta_k), evaluated pairwise
    // so the dK matrices never materialize.
    let kinv = chol.inverse();
    let mut grad = vec![0.0; 1 + p];
    let points = training.points();
    let ls = params.lengthscales();
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let wk = w * ktilde[(i, j)];
            grad[0] += wk;
            for d in 0..p {
                let r = (points[i].coords()[d] - points[j].coords()[d]) / ls[d];
                grad[1 + d] += wk * r * r;
            }
        }
    }
    for g in &mut grad {
        *g *= 0.5;
    }
    Ok((lml, grad))
}

/// Optimizer knobs. The defaults are what the closed loop uses.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-3,
        }
    }
}

/// Result of a hyperparameter search.
#[derive(Debug, Clone)]
pub struct OptimizedParams {
    pub params: KernelParams,
    pub lml: f64,
    pub grad_norm: f64,
    /// False when the iteration cap (or a line-search stall) ended the
    /// search before the gradient-norm tolerance was met.
    pub converged: bool,
}

fn eta_from(params: &KernelParams) -> Vec<f64> {
    let mut eta = vec![params.signal_variance().ln()];
    eta.extend(params.lengthscales().iter().map(|l| l.ln()));
    eta
}

fn params_from(eta: &[f64]) -> KernelParams {
    // default (auto) jitter follows the current signal variance
    KernelParams::new(eta[0].exp(), eta[1..].iter().map(|e| e.exp()).collect())
        .expect("log-space parameters are always positive")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximizes the log marginal likelihood by multi-start gradient ascent.
///
/// `restarts` counts total starts: the initial point plus `restarts - 1`
/// log-uniform perturbations of it in `[1e-2, 1e2] * init` per coordinate.
/// The best final point across starts wins, so the result never scores
/// below the initial point (when the initial point itself is evaluable).
pub fn optimize_hyperparams(
    training: &TrainingSet,
    init: &KernelParams,
    restarts: usize,
    options: &OptimizerOptions,
    rng: &mut impl Rng,
) -> Result<OptimizedParams> {
    if training.len() < 2 {
        return Err(Error::TrainingSetTooSmall {
            need: 2,
            have: training.len(),
        });
    }
    let restarts = restarts.max(1);
    let eta0 = eta_from(init);
    let mut best: Option<OptimizedParams> = None;
    let mut last_err = None;

    for r in 0..restarts {
        let mut eta: Vec<f64> = if r == 0 {
            eta0.clone()
        } else {
            eta0.iter()
                .map(|e| e + rng.random_range(-2.0..2.0) * std::f64::consts::LN_10)
                .collect()
        };
        for e in &mut eta {
            *e = e.clamp(-LOG_BOUND, LOG_BOUND);
        }

        let (mut f, mut g) = match log_marginal_likelihood(training, &params_from(&eta)) {
            Ok(fg) => fg,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut converged = false;
        let mut step = 0.1 / (1.0 + norm(&g));
        for _ in 0..options.max_iters {
            let gnorm = norm(&g);
            if gnorm <= options.grad_tol {
                converged = true;
                break;
            }
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = eta
                    .iter()
                    .zip(&g)
                    .map(|(e, gi)| (e + step * gi).clamp(-LOG_BOUND, LOG_BOUND))
                    .collect();
                match log_marginal_likelihood(training, &params_from(&trial)) {
                    Ok((ft, gt)) if ft >= f + ARMIJO_C * step * gnorm * gnorm => {
                        eta = trial;
                        f = ft;
                        g = gt;
                        step = (step * 1.5).min(100.0);
                        accepted = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !accepted {
                // line search stalled: flat to machine precision along g
                converged = norm(&g) <= options.grad_tol;
                break;
            }
        }
        let candidate = OptimizedParams {
            params: params_from(&eta),
            lml: f,
            grad_norm: norm(&g),
            converged,
        };
        if best.as_ref().map_or(true, |b| candidate.lml > b.lml) {
            best = Some(candidate);
        }
    }

    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::InvalidHyperparameters("no evaluable start".into()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit, TrainingSet};
    use crate::grid::ParamPoint;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn pt(coords: &[f64]) -> ParamPoint {
        ParamPoint::new(coords.to_vec())
    }

    /// Determinant via Gaussian elimination, independent of nalgebra.
    fn det_dense(mut a: Vec<Vec<f64>>) -> f64 {
        let n = a.len();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            if pivot != col {
                a.swap(col, pivot);
                det = -det;
            }
            det *= a[col][col];
            if a[col][col] == 0.0 {
                return 0.0;
            }
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        det
    }

    fn jittered_kernel(training: &TrainingSet, params: &KernelParams) -> Vec<Vec<f64>> {
        let n = training.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut v = crate::gp::kernel_eval(
                            &training.points()[i],
                            &training.points()[j],
                            params,
                        )
                        .unwrap();
                        if i == j {
                            v += params.jitter();
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    fn random_training(rng: &mut impl Rng, n: usize, dim: usize) -> TrainingSet {
        let points = crate::gp::tests::random_points(rng, n, dim);
        TrainingSet::from_pairs(
            points
                .into_iter()
                .map(|p| (p, rng.random_range(-2.0..2.0))),
        )
    }

    #[test]
    fn lml_single_point_closed_form() {
        let params = KernelParams::new(1.5, vec![1.0]).unwrap();
        let training = TrainingSet::from_pairs([(pt(&[0.0]), 2.0)]);
        let (lml, _) = log_marginal_likelihood(&training, &params).unwrap();
        let s = 1.5 + params.jitter();
        let expected = -0.5 * 4.0 / s - 0.5 * s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(lml, expected, max_relative = 1e-12);
    }

    #[test]
    fn lml_zero_values_leave_only_complexity_terms() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let params = KernelParams::new(2.0, vec![1.0, 1.5]).unwrap();
        let training = TrainingSet::from_pairs((0..4).map(|_| {
            (
                ParamPoint::new(vec![
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ]),
                0.0,
            )
        }));
        let (lml, _) = log_marginal_likelihood(&training, &params).unwrap();
        let det = det_dense(jittered_kernel(&training, &params));
        let expected = -0.5 * det.ln() - 2.0 * (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(lml, expected, max_relative = 1e-10);
    }

    #[test]
    fn lml_matches_dense_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10 {
            let dim = rng.random_range(1..=3);
            let n = rng.random_range(2..=6);
            let ls = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
            let params = KernelParams::new(rng.random_range(0.5..2.5), ls).unwrap();
            let training = random_training(&mut rng, n, dim);
            let (lml, _) = log_marginal_likelihood(&training, &params).unwrap();

            let k = jittered_kernel(&training, &params);
            let alpha = crate::gp::tests::solve_dense(k.clone(), training.values().to_vec());
            let data_term: f64 = training
                .values()
                .iter()
                .zip(&alpha)
                .map(|(y, a)| y * a)
                .sum();
            let expected = -0.5 * data_term
                - 0.5 * det_dense(k).ln()
                - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            assert_relative_eq!(lml, expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let h = 1e-5;
        for _ in 0..10 {
            let dim = rng.random_range(1..=3);
            let n = rng.random_range(3..=6);
            let ls: Vec<f64> = (0..dim).map(|_| rng.random_range(0.6..2.0)).collect();
            let sf2 = rng.random_range(0.5..2.5);
            let params = KernelParams::new(sf2, ls.clone()).unwrap();
            let training = random_training(&mut rng, n, dim);
            let (_, grad) = log_marginal_likelihood(&training, &params).unwrap();

            let mut fd = vec![0.0; 1 + dim];
            for k in 0..=dim {
                let eval = |delta: f64| {
                    let mut sv = sf2;
                    let mut l = ls.clone();
                    if k == 0 {
                        sv = (sf2.ln() + delta).exp();
                    } else {
                        l[k - 1] = (l[k - 1].ln() + delta).exp();
                    }
                    // jitter pinned to the unperturbed value
                    let p = KernelParams::with_jitter(sv, l, params.jitter()).unwrap();
                    log_marginal_likelihood(&training, &p).unwrap().0
                };
                fd[k] = (eval(h) - eval(-h)) / (2.0 * h);
            }
            let err = grad
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = fd.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-8);
            assert!(
                err / scale <= 1e-4,
                "gradient {grad:?} vs finite differences {fd:?}"
            );
        }
    }

    #[test]
    fn optimize_never_decreases_lml() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for _ in 0..5 {
            let training = random_training(&mut rng, 6, 2);
            let init = KernelParams::new(1.0, vec![1.0, 1.0]).unwrap();
            let (lml0, _) = log_marginal_likelihood(&training, &init).unwrap();
            let out = optimize_hyperparams(
                &training,
                &init,
                3,
                &OptimizerOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert!(out.lml >= lml0 - 1e-9, "{} < {}", out.lml, lml0);
            assert!(out.converged || out.grad_norm > 1e-3 || out.grad_norm.is_finite());
            assert!(out.params.signal_variance() > 0.0);
            assert!(out.params.lengthscales().iter().all(|l| *l > 0.0));
        }
    }

    #[test]
    fn optimize_improves_held_out_prediction() {
        // smooth 1D target sampled on a coarse grid; init lengthscale is 5x
        // the span, so the initial fit oversmooths badly
        let f = |x: f64| (1.3 * x).sin() + 0.3 * x;
        let training =
            TrainingSet::from_pairs((0..9).map(|i| (pt(&[i as f64 * 0.5]), f(i as f64 * 0.5))));
        let init = KernelParams::new(1.0, vec![20.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let out =
            optimize_hyperparams(&training, &init, 3, &OptimizerOptions::default(), &mut rng)
                .unwrap();

        let rmse = |params: &KernelParams| {
            let model = fit(&training, params).unwrap();
            let mut s = 0.0;
            for i in 0..8 {
                let x = 0.25 + i as f64 * 0.5;
                let d = model.predict(&pt(&[x])).unwrap();
                s += (d.mean - f(x)).powi(2);
            }
            (s / 8.0).sqrt()
        };
        assert!(
            rmse(&out.params) < rmse(&init),
            "optimized {} vs initial {}",
            rmse(&out.params),
            rmse(&init)
        );
        assert!(out.params.lengthscales()[0] < 20.0);
    }

    #[test]
    fn optimize_is_deterministic_for_a_fixed_seed() {
        let mut rng_a = ChaCha12Rng::seed_from_u64(31);
        let mut rng_b = ChaCha12Rng::seed_from_u64(31);
        let training = random_training(&mut ChaCha12Rng::seed_from_u64(32), 7, 2);
        let init = KernelParams::new(0.8, vec![1.0, 2.0]).unwrap();
        let a = optimize_hyperparams(&training, &init, 3, &OptimizerOptions::default(), &mut rng_a)
            .unwrap();
        let b = optimize_hyperparams(&training, &init, 3, &OptimizerOptions::default(), &mut rng_b)
            .unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.lml.to_bits(), b.lml.to_bits());
    }

    #[test]
    fn optimize_requires_two_points() {
        let training = TrainingSet::from_pairs([(pt(&[0.0]), 1.0)]);
        let init = KernelParams::new(1.0, vec![1.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(matches!(
            optimize_hyperparams(&training, &init, 3, &OptimizerOptions::default(), &mut rng),
            Err(Error::TrainingSetTooSmall { .. })
        ));
    }
}
