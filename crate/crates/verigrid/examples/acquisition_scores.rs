//! Scores an unobserved grid under each sampling strategy and prints the
//! argmax pick of each one. The surrogate is trained on a coarse sample of
//! a surface whose zero level set cuts diagonally through the box, so the
//! model-based strategies should all point at the uncertain boundary.

use verigrid::acquisition::{
    importance_distribution, score_pool, select_sequential, CandidatePool, Strategy,
};
use verigrid::error::Result;
use verigrid::gp::{fit, KernelParams, TrainingSet};
use verigrid::grid::{ParamBox, ParamGrid, ParamPoint};
use verigrid::verify::derive_rng;

fn margin(p: &ParamPoint) -> f64 {
    let c = p.coords();
    1.5 - c[0] - 0.6 * c[1]
}

fn main() -> Result<()> {
    let bounds = ParamBox::new(vec![(0.0, 2.0), (0.0, 2.0)])?;
    let grid = ParamGrid::new(bounds, &[15, 15])?;

    // observe a sparse 4x4 subsample, leave the rest as candidates
    let mut training = TrainingSet::new();
    let mut pool = CandidatePool::new(grid.clone());
    for i in (0..15).step_by(4) {
        for j in (0..15).step_by(4) {
            let idx = i + 15 * j;
            let point = grid.point(idx);
            training.push(point.clone(), margin(&point));
            pool.mark_observed(idx)?;
        }
    }
    let model = fit(&training, &KernelParams::new(1.0, vec![0.7, 0.7])?)?;
    println!(
        "trained on {} of {} grid locations, {} candidates remain\n",
        training.len(),
        grid.len(),
        pool.len()
    );

    let fmt = |p: &ParamPoint| format!("({:.2}, {:.2})", p.coords()[0], p.coords()[1]);

    let mut rng = derive_rng(7, "select");
    println!("{:<10} {:>6} {:>14} {:>10}", "strategy", "pick", "theta", "margin");
    for strategy in Strategy::ALL {
        let scores = score_pool(&model, &pool, strategy, &mut rng)?;
        let pick = select_sequential(&scores)?;
        let theta = grid.point(pick);
        println!(
            "{:<10} {:>6} {:>14} {:>10.3}",
            strategy.name(),
            pick,
            fmt(&theta),
            margin(&theta)
        );
    }

    let entropy = score_pool(&model, &pool, Strategy::Entropy, &mut rng)?;
    let dist = importance_distribution(&entropy)?;
    let mut ranked: Vec<usize> = (0..dist.indices.len()).collect();
    ranked.sort_by(|&a, &b| dist.probabilities[b].total_cmp(&dist.probabilities[a]));
    println!("\nentropy mass Z_H = {:.4} (degenerate: {})", dist.normalizer, dist.degenerate);
    println!("most informative candidates under the importance distribution:");
    for &k in ranked.iter().take(5) {
        let theta = grid.point(dist.indices[k]);
        println!(
            "  index {:>3}  theta {:>14}  p = {:.4}",
            dist.indices[k],
            fmt(&theta),
            dist.probabilities[k]
        );
    }
    Ok(())
}
