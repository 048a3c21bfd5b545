//! Diversity-enforcing batch selection via k-DPP sampling.
//!
//! Drawing a whole batch from the importance distribution alone piles the
//! samples onto whichever entropy peak dominates. Instead, a large candidate
//! set is drawn from that distribution and a size-M subset is sampled from a
//! determinantal point process conditioned on subset size, where the subset
//! probability is proportional to det(L_S) for a similarity kernel L. Similar
//! candidates produce near-singular minors, so the batch spreads across the
//! high-entropy regions rather than stacking inside one. Only the final M
//! points are ever simulated; the candidate set is bookkeeping.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::acquisition::{CandidatePool, ImportanceDistribution};
use crate::error::{Error, Result};
use crate::grid::ParamPoint;

/// Knobs for the batch sampler.
#[derive(Debug, Clone)]
pub struct DppConfig {
    /// Candidates drawn per batch. Needs to be large enough to stand in for
    /// the importance distribution; simulation cost does not scale with it.
    pub m_t: usize,
    /// Similarity length scale, in normalized grid units.
    pub bandwidth: f64,
}

impl Default for DppConfig {
    fn default() -> Self {
        Self {
            m_t: 1000,
            bandwidth: 5.0,
        }
    }
}

/// Draws `count` locations i.i.d. with replacement from the importance
/// distribution. Returns grid flat indices; repeats are expected and left in
/// place, since the point process itself suppresses co-selection of
/// coincident candidates.
pub fn draw_candidates(
    dist: &ImportanceDistribution,
    pool: &CandidatePool,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if dist.indices.is_empty() {
        return Err(Error::EmptyPool);
    }
    debug_assert!(dist.indices.iter().all(|&i| pool.is_available(i)));
    let weights = WeightedIndex::new(&dist.probabilities)
        .map_err(|e| Error::InvalidScores(format!("importance weights: {e}")))?;
    Ok((0..count)
        .map(|_| dist.indices[rng.sample(&weights)])
        .collect())
}

/// Similarity matrix over a candidate set, L(i,j) = exp(-|c_i - c_j|^2 / l^2).
/// Symmetric with unit diagonal by construction.
#[derive(Debug, Clone)]
pub struct DppKernel {
    candidates: Vec<ParamPoint>,
    matrix: DMatrix<f64>,
    bandwidth: f64,
}

impl DppKernel {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn candidate(&self, i: usize) -> &ParamPoint {
        &self.candidates[i]
    }
}

pub fn build_kernel(candidates: &[ParamPoint], bandwidth: f64) -> DppKernel {
    assert!(!candidates.is_empty(), "kernel needs at least one candidate");
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    let dim = candidates[0].dim();
    assert!(candidates.iter().all(|c| c.dim() == dim));
    let n = candidates.len();
    let inv = 1.0 / (bandwidth * bandwidth);
    // Each pair is evaluated once and mirrored, so symmetry holds to the bit.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let d2: f64 = candidates[i]
                        .coords()
                        .iter()
                        .zip(candidates[j].coords())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (-d2 * inv).exp()
                })
                .collect()
        })
        .collect();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    DppKernel {
        candidates: candidates.to_vec(),
        matrix,
        bandwidth,
    }
}

/// Table of elementary symmetric polynomials over eigenvalue prefixes:
/// `e[m][j]` sums, over every m-subset of the first j values, the product of
/// that subset. Row 0 is all ones and each entry satisfies
/// `e[m][j] = e[m][j-1] + lambda_j * e[m-1][j-1]`.
pub fn elementary_symmetric(lambdas: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = lambdas.len();
    let mut e = vec![vec![0.0; n + 1]; order + 1];
    e[0] = vec![1.0; n + 1];
    for m in 1..=order {
        for j in 1..=n {
            e[m][j] = e[m][j - 1] + lambdas[j - 1] * e[m - 1][j - 1];
        }
    }
    e
}

/// Eigenstructure of a similarity kernel plus the polynomial table the
/// eigenvector-selection phase consumes.
pub struct DppSpectrum {
    /// Descending, clamped to [0, inf).
    eigenvalues: Vec<f64>,
    /// Column c pairs with eigenvalues[c].
    vectors: DMatrix<f64>,
    esp: Vec<Vec<f64>>,
}

impl DppSpectrum {
    /// Decomposes the kernel and tabulates the elementary symmetric
    /// polynomials up to `batch_size`. Eigenvalues in (-1e-9, 1e-12) are
    /// clamped to zero; anything below -1e-9 is not roundoff and gets
    /// rejected.
    pub fn new(kernel: &DppKernel, batch_size: usize) -> Result<Self> {
        let eig = kernel.matrix.clone().symmetric_eigen();
        let n = kernel.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let mut eigenvalues = Vec::with_capacity(n);
        let mut vectors = DMatrix::zeros(n, n);
        for (c, &o) in order.iter().enumerate() {
            let lam = eig.eigenvalues[o];
            if lam < -1e-9 {
                return Err(Error::InvalidDppKernel(format!(
                    "eigenvalue {lam:.3e} is negative beyond roundoff"
                )));
            }
            eigenvalues.push(if lam < 1e-12 { 0.0 } else { lam });
            vectors.set_column(c, &eig.eigenvectors.column(o));
        }
        let esp = elementary_symmetric(&eigenvalues, batch_size);
        Ok(Self {
            eigenvalues,
            vectors,
            esp,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalues that survived clamping; the largest batch this spectrum
    /// can support. Coincident candidates shed exact zeros, so the rank can
    /// sit well below the candidate count.
    pub fn usable_rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > 0.0).count()
    }
}

/// A diverse draw: positions into the kernel's candidate list, plus the
/// candidate points themselves in selection order.
#[derive(Debug, Clone)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub points: Vec<ParamPoint>,
}

/// One eigenvector-selection pass: walk j from n down to 1 keeping index j
/// with probability lambda_j * e_{m-1}^{j-1} / e_m^j, where m counts picks
/// still owed. Exact arithmetic always lands exactly `batch` picks; clamped
/// eigenvalues can starve the walk, which reports as None for a retry.
fn phase_one(spec: &DppSpectrum, batch: usize, rng: &mut impl Rng) -> Option<Vec<usize>> {
    let n = spec.eigenvalues.len();
    let mut kept = Vec::with_capacity(batch);
    let mut m = batch;
    for j in (1..=n).rev() {
        if m == 0 {
            break;
        }
        let lam = spec.eigenvalues[j - 1];
        if lam == 0.0 {
            if j == m {
                return None;
            }
            continue;
        }
        let accept = if j == m {
            // Every remaining index is owed a pick and the ratio collapses
            // to exactly 1, so skip the draw rather than risk roundoff.
            true
        } else {
            let denom = spec.esp[m][j];
            if denom <= 0.0 {
                return None;
            }
            rng.random::<f64>() < lam * spec.esp[m - 1][j - 1] / denom
        };
        if accept {
            kept.push(j - 1);
            m -= 1;
        }
    }
    (m == 0).then_some(kept)
}

/// Item-selection pass: draw item i with probability
/// (1/|V|) sum_{v in V} v_i^2, then shrink V to an orthonormal basis of its
/// subspace with coordinate i zeroed. The projection is against the picked
/// item's coordinate axis, not the picked eigenvector; that is what leaves
/// coordinate i massless afterwards and makes repeats impossible.
fn phase_two(spec: &DppSpectrum, kept: &[usize], rng: &mut impl Rng) -> Result<Vec<usize>> {
    let n = spec.eigenvalues.len();
    let mut v: Vec<DVector<f64>> = kept
        .iter()
        .map(|&c| spec.vectors.column(c).into_owned())
        .collect();
    let mut picked = Vec::with_capacity(v.len());
    while !v.is_empty() {
        let mut weights = vec![0.0; n];
        for col in &v {
            for (w, x) in weights.iter_mut().zip(col.iter()) {
                *w += x * x;
            }
        }
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::DppPhaseTwo(format!("selection weights: {e}")))?;
        let i = rng.sample(&dist);
        picked.push(i);
        // Pivot on the column with the largest coordinate-i component, use
        // it to cancel that coordinate everywhere else, then drop it.
        let pivot = (0..v.len())
            .max_by(|&a, &b| v[a][i].abs().partial_cmp(&v[b][i].abs()).unwrap())
            .unwrap();
        let p = v.swap_remove(pivot);
        if p[i].abs() < 1e-12 {
            return Err(Error::DppPhaseTwo(
                "no basis vector overlaps the selected item".into(),
            ));
        }
        for col in &mut v {
            let f = col[i] / p[i];
            col.axpy(-f, &p, 1.0);
        }
        // The span lost exactly one dimension, so every survivor of the
        // re-orthonormalization must keep a healthy norm.
        for k in 0..v.len() {
            let (head, tail) = v.split_at_mut(k);
            let vk = &mut tail[0];
            for prev in head.iter() {
                let proj = prev.dot(vk);
                vk.axpy(-proj, prev, 1.0);
            }
            let norm = vk.norm();
            if norm < 1e-9 {
                return Err(Error::DppPhaseTwo(
                    "basis collapsed during re-orthonormalization".into(),
                ));
            }
            *vk /= norm;
        }
    }
    Ok(picked)
}

/// Draws a size-`batch` subset of the kernel's candidates with probability
/// proportional to det(L_S). Each attempt burns its own child stream of
/// `rng`, so a starved first pass cannot shift the draws of a later attempt.
pub fn sample_k_dpp(kernel: &DppKernel, batch: usize, rng: &mut impl Rng) -> Result<Batch> {
    assert!(batch >= 1, "a batch draws at least one point");
    if batch > kernel.len() {
        return Err(Error::BatchTooLarge {
            batch,
            candidates: kernel.len(),
        });
    }
    let spec = DppSpectrum::new(kernel, batch)?;
    sample_from_spectrum(&spec, kernel, batch, rng)
}

fn sample_from_spectrum(
    spec: &DppSpectrum,
    kernel: &DppKernel,
    batch: usize,
    rng: &mut impl Rng,
) -> Result<Batch> {
    for _ in 0..10 {
        let mut sub = ChaCha12Rng::from_rng(rng);
        if let Some(kept) = phase_one(spec, batch, &mut sub) {
            let indices = phase_two(spec, &kept, &mut sub)?;
            let points = indices.iter().map(|&i| kernel.candidates[i].clone()).collect();
            return Ok(Batch { indices, points });
        }
    }
    Err(Error::DppPhaseOne {
        want: batch,
        attempts: 10,
    })
}

/// Full batch step at the grid level: draw `m_t` candidates from the
/// importance distribution, build the similarity kernel on unit-cube grid
/// coordinates, sample the point process, and map back to grid locations.
/// Coincident candidates are never co-selected (their minors vanish), but a
/// with-replacement draw can still alias one location under two candidate
/// indices; aliased slots are re-drawn from the importance distribution
/// restricted to locations not already in the batch. The same refill covers
/// a rank-starved kernel: when the importance mass concentrates on fewer
/// distinct locations than the batch needs, the point process draws as many
/// as the spectrum supports and the rest come from the restricted refill.
pub fn select_batch(
    dist: &ImportanceDistribution,
    pool: &CandidatePool,
    batch: usize,
    cfg: &DppConfig,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if cfg.m_t < batch {
        return Err(Error::BatchTooLarge {
            batch,
            candidates: cfg.m_t,
        });
    }
    if pool.len() < batch {
        return Err(Error::BatchTooLarge {
            batch,
            candidates: pool.len(),
        });
    }
    let grid_indices = draw_candidates(dist, pool, cfg.m_t, rng)?;
    let candidates: Vec<ParamPoint> = grid_indices
        .iter()
        .map(|&g| ParamPoint::new(pool.grid().unit_point(g)))
        .collect();
    let kernel = build_kernel(&candidates, cfg.bandwidth);
    let spectrum = DppSpectrum::new(&kernel, batch)?;
    let supported = spectrum.usable_rank().min(batch);
    let mut chosen: Vec<usize> = Vec::with_capacity(batch);
    if supported > 0 {
        let drawn = sample_from_spectrum(&spectrum, &kernel, supported, rng)?;
        for &ci in &drawn.indices {
            let g = grid_indices[ci];
            if !chosen.contains(&g) {
                chosen.push(g);
            }
        }
    }
    fill_aliased_slots(&mut chosen, batch, dist, rng)?;
    Ok(chosen)
}

/// Tops `chosen` back up to `batch` distinct locations by re-drawing from
/// the importance distribution restricted to locations not yet chosen. A
/// restriction with no mass left falls back to uniform over the remaining
/// support, mirroring the degenerate-distribution convention.
fn fill_aliased_slots(
    chosen: &mut Vec<usize>,
    batch: usize,
    dist: &ImportanceDistribution,
    rng: &mut impl Rng,
) -> Result<()> {
    while chosen.len() < batch {
        let mut weights = dist.probabilities.clone();
        for (w, g) in weights.iter_mut().zip(&dist.indices) {
            if chosen.contains(g) {
                *w = 0.0;
            }
        }
        if let Ok(d) = WeightedIndex::new(&weights) {
            chosen.push(dist.indices[rng.sample(&d)]);
        } else {
            let rest: Vec<usize> = dist
                .indices
                .iter()
                .copied()
                .filter(|g| !chosen.contains(g))
                .collect();
            if rest.is_empty() {
                return Err(Error::BatchTooLarge {
                    batch,
                    candidates: chosen.len(),
                });
            }
            chosen.push(rest[rng.random_range(0..rest.len())]);
        }
    }
    Ok(())
}
