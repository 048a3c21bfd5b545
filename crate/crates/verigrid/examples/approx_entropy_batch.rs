//! Compares the two batch selectors on the same model state: the stochastic
//! diverse draw and the deterministic greedy one that refits a pending-point
//! covariance between picks. Also demonstrates the covariance update itself:
//! adding a pending point collapses predictive variance in its neighborhood
//! before any simulation result exists.

use verigrid::acquisition::{importance_distribution, score_pool, CandidatePool, Strategy};
use verigrid::error::Result;
use verigrid::gp::{fit, KernelParams, TrainingSet};
use verigrid::grid::{ParamBox, ParamGrid, ParamPoint};
use verigrid::kdpp::{select_batch, DppConfig};
use verigrid::verify::{derive_rng, select_batch_approx_entropy, update_covariance_with_pending};

fn margin(p: &ParamPoint) -> f64 {
    let c = p.coords();
    c[0] * c[0] + c[1] * c[1] - 1.0
}

fn main() -> Result<()> {
    let bounds = ParamBox::new(vec![(-2.0, 2.0), (-2.0, 2.0)])?;
    let grid = ParamGrid::new(bounds, &[17, 17])?;
    let mut training = TrainingSet::new();
    let mut pool = CandidatePool::new(grid.clone());
    for idx in (0..grid.len()).step_by(23) {
        let p = grid.point(idx);
        training.push(p.clone(), margin(&p));
        pool.mark_observed(idx)?;
    }
    let model = fit(&training, &KernelParams::new(2.0, vec![0.8, 0.8])?)?;
    println!(
        "model trained on {} points, {} candidates left (true region: unit disk complement)\n",
        training.len(),
        pool.len()
    );

    let batch = 5;

    let mut rng = derive_rng(3, "select");
    let scores = score_pool(&model, &pool, Strategy::Entropy, &mut rng)?;
    let dist = importance_distribution(&scores)?;
    let diverse = select_batch(&dist, &pool, batch, &DppConfig::default(), &mut rng)?;
    println!("stochastic diverse batch:      {diverse:?}");

    let greedy = select_batch_approx_entropy(&model, &pool, batch)?;
    println!("greedy pending-variance batch: {greedy:?}");
    println!("(the greedy batch is deterministic: no RNG argument exists to vary it)\n");

    // the mechanism behind the greedy selector, shown on its first pick
    let first = grid.point(greedy[0]);
    let mut near_coords = first.coords().to_vec();
    near_coords[0] += if near_coords[0] < 0.0 { 0.05 } else { -0.05 };
    let near = ParamPoint::new(near_coords);
    let before = model.predict(&near)?.variance;
    let pending = update_covariance_with_pending(&model, std::slice::from_ref(&first))?;
    let after = pending.variance(&near)?;
    println!("variance at the neighbor of pick {}: {before:.4} before, {after:.4} after", greedy[0]);
    println!("marking theta = {:?} pending, with no simulated value yet", first.coords());
    Ok(())
}
