//! Fits a surrogate to a handful of noise-free samples of a known surface,
//! optimizes the kernel hyperparameters, and prints predictions against the
//! true values away from the data.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use verigrid::error::Result;
use verigrid::gp::{fit, prob_satisfaction, KernelParams, TrainingSet};
use verigrid::grid::ParamPoint;
use verigrid::hyperopt::{log_marginal_likelihood, optimize_hyperparams, OptimizerOptions};

fn surface(x: f64, y: f64) -> f64 {
    (1.2 * x).sin() * (0.8 * y).cos() + 0.3 * x - 0.2
}

fn main() -> Result<()> {
    let mut training = TrainingSet::new();
    for i in 0..5 {
        for j in 0..5 {
            let (x, y) = (-2.0 + i as f64, -2.0 + j as f64);
            training.push(ParamPoint::new(vec![x, y]), surface(x, y));
        }
    }

    let init = KernelParams::new(1.0, vec![1.5, 1.5])?;
    let (lml0, _) = log_marginal_likelihood(&training, &init)?;
    println!("initial log marginal likelihood: {lml0:.4}");

    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let optimized = optimize_hyperparams(&training, &init, 3, &OptimizerOptions::default(), &mut rng)?;
    println!(
        "optimized: lml {:.4}, sigma_f^2 {:.4}, lengthscales {:.4?} (converged: {})",
        optimized.lml,
        optimized.params.signal_variance(),
        optimized.params.lengthscales(),
        optimized.converged
    );

    let model = fit(&training, &optimized.params)?;
    println!("\n{:>8} {:>8} {:>9} {:>9} {:>9} {:>7}", "x", "y", "truth", "mean", "sd", "p(sat)");
    for &(x, y) in &[(-1.5, -0.5), (0.5, 1.5), (1.3, -1.7), (0.0, 0.0), (2.0, 2.0)] {
        let d = model.predict(&ParamPoint::new(vec![x, y]))?;
        println!(
            "{x:>8.2} {y:>8.2} {:>9.4} {:>9.4} {:>9.4} {:>7.3}",
            surface(x, y),
            d.mean,
            d.variance.sqrt(),
            prob_satisfaction(&d)
        );
    }
    Ok(())
}
