//! Thin command-line front end. All real work lives in the library; this
//! parses flags, sizes the worker pool, loops over config sections, and maps
//! completeness onto the exit code: 0 when everything finished, 2 when any
//! section or run came back incomplete.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use verigrid::error::Result;
use verigrid::experiment::{
    build_report, load_config, read_runs_csv, run_experiment, runs_csv, truth_csv, CellOutcome,
    ExperimentSpec, RunCell,
};
use verigrid::plot::render_plots;
use verigrid::verify::ground_truth_sweep;

#[derive(Parser)]
#[command(
    name = "verigrid",
    version,
    about = "Closed-loop statistical verification over gridded parameter spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config with one [[experiment]] section per experiment.
    #[arg(long)]
    config: PathBuf,
    /// Directory for artifacts (and the ground-truth cache).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the master seed of every section.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the requirement at every grid location and cache the result.
    Sweep(Common),
    /// One closed-loop run per section, first strategy, run index 0.
    Run(Common),
    /// The full run-by-strategy comparison with CSV, JSON, and SVG output.
    Experiment(Common),
    /// Re-render the SVG charts from an existing runs.csv.
    Plot(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, verb): (&Common, fn(&ExperimentSpec, &Path) -> Result<bool>) =
        match &cli.command {
            Command::Sweep(c) => (c, sweep),
            Command::Run(c) => (c, single_run),
            Command::Experiment(c) => (c, experiment),
            Command::Plot(c) => (c, plot),
        };

    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("worker pool is configured once");
    }

    let mut specs = match load_config(&common.config) {
        Ok(specs) => specs,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        for spec in &mut specs {
            spec.master_seed = seed;
        }
    }

    let mut complete = true;
    for spec in &specs {
        match verb(spec, &common.out) {
            Ok(true) => {}
            Ok(false) => complete = false,
            Err(e) => {
                eprintln!("[{}] error: {e}", spec.name);
                complete = false;
            }
        }
    }
    if complete {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn sweep(spec: &ExperimentSpec, out: &Path) -> Result<bool> {
    let resolved = spec.resolve()?;
    let truth = ground_truth_sweep(
        resolved.bench.system.as_ref(),
        &resolved.formula_text,
        &resolved.grid,
        &resolved.bench.system.default_sim_config(),
        Some(&out.join("truth-cache")),
    )?;
    let dir = out.join(&spec.name);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("truth.csv"), truth_csv(&resolved.grid, &truth))?;
    let sat = truth.sat_mask.iter().filter(|&&s| s).count();
    println!(
        "[{}] swept {} locations: {} satisfied, {} failed",
        spec.name,
        resolved.grid.len(),
        sat,
        resolved.grid.len() - sat
    );
    Ok(true)
}

fn single_run(spec: &ExperimentSpec, out: &Path) -> Result<bool> {
    let resolved = spec.resolve()?;
    spec.validate(resolved.grid.len())?;
    let truth = ground_truth_sweep(
        resolved.bench.system.as_ref(),
        &resolved.formula_text,
        &resolved.grid,
        &resolved.bench.system.default_sim_config(),
        Some(&out.join("truth-cache")),
    )?;
    let strategy = spec.strategies[0];
    let config = spec.loop_config(strategy, 0);
    let result = verigrid::verify::run_closed_loop(
        resolved.bench.system.as_ref(),
        &resolved.formula,
        &resolved.grid,
        &truth,
        &config,
    )?;
    let last = result.records.last().expect("a run has records");
    println!(
        "[{}] {} run finished: error {:.4}, filtered {:.4} at coverage {:.3}",
        spec.name, strategy, last.error, last.filtered_error, last.coverage
    );
    let cell = RunCell {
        run: 0,
        strategy,
        outcome: CellOutcome::Completed(result),
    };
    let dir = out.join(&spec.name);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("single-run.csv"), runs_csv(&[cell]))?;
    Ok(true)
}

fn experiment(spec: &ExperimentSpec, out: &Path) -> Result<bool> {
    let report = run_experiment(spec, out)?;
    for curve in &report.curves {
        let final_error = curve.mean_error.last().copied().unwrap_or(f64::NAN);
        println!(
            "[{}] {}: {} runs, final mean error {:.4}",
            spec.name, curve.strategy, curve.completed_runs, final_error
        );
    }
    for f in &report.failures {
        eprintln!(
            "[{}] run {} ({}) aborted at batch {}: {}",
            spec.name, f.run, f.strategy, f.batch, f.message
        );
    }
    Ok(report.failures.is_empty())
}

fn plot(spec: &ExperimentSpec, out: &Path) -> Result<bool> {
    let dir = out.join(&spec.name);
    let text = std::fs::read_to_string(dir.join("runs.csv"))?;
    let cells = read_runs_csv(&text)?;
    let report = build_report(&spec.name, &spec.strategies, &cells);
    for (name, svg) in render_plots(&report) {
        std::fs::write(dir.join(name), svg)?;
    }
    println!("[{}] re-rendered charts from {} rows", spec.name, text.lines().count() - 1);
    Ok(true)
}
