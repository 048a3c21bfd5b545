//! Exhaustively sweeps a benchmark grid for the true satisfying region and
//! demonstrates the sweep cache: the second call with the same key loads the
//! stored result instead of re-simulating, and a changed key (finer time
//! step) recomputes rather than serving stale data.

use std::time::Instant;

use verigrid::bench::{benchmark, resolve_formula};
use verigrid::error::Result;
use verigrid::experiment::truth_csv;
use verigrid::grid::ParamGrid;
use verigrid::sim::SimConfig;
use verigrid::verify::ground_truth_sweep;

fn main() -> Result<()> {
    let bench = benchmark("mrac2d")?;
    let system = bench.system.as_ref();
    let grid = ParamGrid::new(system.bounds().clone(), &[13, 13])?;
    let formula_text = resolve_formula(bench.default_formula);
    let sim = system.default_sim_config();
    let cache = std::env::temp_dir().join("verigrid-truth-cache");

    let t0 = Instant::now();
    let truth = ground_truth_sweep(system, formula_text, &grid, &sim, Some(&cache))?;
    let cold = t0.elapsed();

    let t1 = Instant::now();
    let again = ground_truth_sweep(system, formula_text, &grid, &sim, Some(&cache))?;
    let warm = t1.elapsed();
    assert_eq!(truth.robustness, again.robustness, "cache must round-trip bit-exactly");

    let sat = truth.sat_mask.iter().filter(|&&s| s).count();
    println!("swept {} locations: {sat} satisfy, {} violate", grid.len(), grid.len() - sat);
    println!("cold sweep {cold:.2?}, cached reload {warm:.2?}");

    let min = truth.robustness.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = truth.robustness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("robustness range [{min:.4}, {max:.4}]");

    // a finer integration step is a different sweep, so the cache recomputes
    let fine = SimConfig { dt: sim.dt / 2.0, ..sim };
    let t2 = Instant::now();
    ground_truth_sweep(system, formula_text, &grid, &fine, Some(&cache))?;
    println!("half-dt sweep is a cache miss: {:.2?}", t2.elapsed());

    let csv = truth_csv(&grid, &truth);
    let path = std::env::temp_dir().join("mrac2d-truth.csv");
    std::fs::write(&path, &csv)?;
    println!("\nwrote {} ({} rows); first rows:", path.display(), grid.len());
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
