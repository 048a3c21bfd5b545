//! Draws one diverse batch from the entropy importance distribution and
//! contrasts it with independent draws from the same distribution. The
//! repulsive batch should spread along the uncertain boundary instead of
//! piling up at its hottest point; minimum pairwise distance makes the
//! difference measurable.

use verigrid::acquisition::{importance_distribution, score_pool, CandidatePool, Strategy};
use verigrid::error::Result;
use verigrid::gp::{fit, KernelParams, TrainingSet};
use verigrid::grid::{ParamBox, ParamGrid, ParamPoint};
use verigrid::kdpp::{build_kernel, draw_candidates, sample_k_dpp, select_batch, DppConfig, DppSpectrum};
use verigrid::verify::derive_rng;

fn margin(p: &ParamPoint) -> f64 {
    let c = p.coords();
    (3.0 * c[0]).sin() - c[1]
}

fn min_pairwise(points: &[ParamPoint]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            let d: f64 = points[i]
                .coords()
                .iter()
                .zip(points[j].coords())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    best
}

fn main() -> Result<()> {
    let bounds = ParamBox::new(vec![(0.0, 2.0), (-1.5, 1.5)])?;
    let grid = ParamGrid::new(bounds, &[21, 21])?;
    let mut training = TrainingSet::new();
    let mut pool = CandidatePool::new(grid.clone());
    for idx in (0..grid.len()).step_by(37) {
        let p = grid.point(idx);
        training.push(p.clone(), margin(&p));
        pool.mark_observed(idx)?;
    }
    let model = fit(&training, &KernelParams::new(1.0, vec![0.5, 0.5])?)?;

    let mut rng = derive_rng(21, "select");
    let scores = score_pool(&model, &pool, Strategy::Entropy, &mut rng)?;
    let dist = importance_distribution(&scores)?;
    println!("entropy mass over {} candidates: {:.4}\n", dist.indices.len(), dist.normalizer);

    let cfg = DppConfig::default();
    let batch = 6;

    // low-level path: candidates -> similarity kernel -> exact k-DPP draw
    let candidate_ids = draw_candidates(&dist, &pool, cfg.m_t, &mut rng)?;
    let points: Vec<ParamPoint> = candidate_ids.iter().map(|&i| grid.point(i)).collect();
    let kernel = build_kernel(&points, cfg.bandwidth);
    let spectrum = DppSpectrum::new(&kernel, batch)?;
    println!(
        "similarity kernel over {} candidates, usable rank {}, top eigenvalues {:?}",
        kernel.len(),
        spectrum.usable_rank(),
        &spectrum.eigenvalues()[..3.min(kernel.len())]
            .iter()
            .map(|l| (l * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    let draw = sample_k_dpp(&kernel, batch, &mut rng)?;
    println!("k-DPP batch of {batch}: min pairwise distance {:.3}", min_pairwise(&draw.points));
    for p in &draw.points {
        println!("  ({:.2}, {:.2})", p.coords()[0], p.coords()[1]);
    }

    // independent draws from the same importance distribution, for contrast
    let naive_ids = draw_candidates(&dist, &pool, batch, &mut rng)?;
    let naive: Vec<ParamPoint> = naive_ids.iter().map(|&i| grid.point(i)).collect();
    println!("\nindependent batch of {batch}: min pairwise distance {:.3}", min_pairwise(&naive));

    // high-level path the closed loop uses: one call, grid indices out
    let picked = select_batch(&dist, &pool, batch, &cfg, &mut derive_rng(21, "select"))?;
    println!("\nselect_batch picked grid indices {picked:?}");
    Ok(())
}
