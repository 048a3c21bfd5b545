//! Runs one full verification loop on the adaptive-control benchmark: sweep
//! the (coarse) grid for ground truth, then let the active sampler identify
//! the satisfying region from a small simulation budget. Prints the error
//! trajectory batch by batch and the final confusion counts.

use verigrid::bench::{benchmark, resolve_formula};
use verigrid::error::Result;
use verigrid::grid::ParamGrid;
use verigrid::stl_parse::parse;
use verigrid::verify::{ground_truth_sweep, run_closed_loop, LoopConfig};

fn main() -> Result<()> {
    let bench = benchmark("mrac2d")?;
    let system = bench.system.as_ref();
    let grid = ParamGrid::new(system.bounds().clone(), &[15, 15])?;
    let formula_text = resolve_formula(bench.default_formula);
    let formula = parse(formula_text)?;
    println!("requirement: {formula_text}");
    println!("sweeping {} grid locations for ground truth...", grid.len());

    let sim = system.default_sim_config();
    let truth = ground_truth_sweep(system, formula_text, &grid, &sim, None)?;
    let sat = truth.sat_mask.iter().filter(|&&s| s).count();
    println!("true satisfying region: {sat} of {} locations\n", grid.len());

    let config = LoopConfig {
        initial_count: 12,
        batch_size: 4,
        batch_count: 8,
        seed: 5,
        ..LoopConfig::default()
    };
    println!(
        "active loop: {} random starts + {} batches of {} ({} simulations total)\n",
        config.initial_count,
        config.batch_count,
        config.batch_size,
        config.total_budget()
    );

    let result = run_closed_loop(system, &formula, &grid, &truth, &config)?;
    println!(
        "{:>5} {:>6} {:>8} {:>10} {:>9} {:>9}",
        "batch", "n", "error", "filtered", "coverage", "sigma_f2"
    );
    for r in &result.records {
        println!(
            "{:>5} {:>6} {:>8.4} {:>10.4} {:>9.3} {:>9.3}",
            r.batch, r.training_size, r.error, r.filtered_error, r.coverage, r.sigma_f2
        );
    }

    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (est, tru) in result.estimate.sat_mask.iter().zip(&truth.sat_mask) {
        match (est, tru) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    println!("\nfinal estimate vs truth: {tp} true-sat, {tn} true-unsat, {fp} false-sat, {fn_} false-unsat");
    println!(
        "classified {} locations from {} simulations ({:.1}% of a full sweep)",
        grid.len(),
        result.observed.len(),
        100.0 * result.observed.len() as f64 / grid.len() as f64
    );
    Ok(())
}
