//! End-to-end experiment checks: artifact reproducibility, shared
//! initialization across strategies, aggregate consistency with the raw
//! per-run rows, and failure isolation when a system diverges mid-matrix.

use std::path::Path;

use verigrid::acquisition::Strategy;
use verigrid::error::Result;
use verigrid::experiment::{
    build_report, read_runs_csv, run_experiment, run_matrix, strategies_in, write_artifacts,
    CellOutcome, ExperimentSpec, RunCell,
};
use verigrid::grid::{ParamBox, ParamGrid, ParamPoint};
use verigrid::kdpp::DppConfig;
use verigrid::sim::{Integrand, SimConfig, System};
use verigrid::stl_parse::parse;
use verigrid::verify::{ground_truth_sweep, BatchMethod, GroundTruth, HyperMode};

fn mrac_spec(name: &str) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        benchmark: "mrac2d".into(),
        formula: None,
        resolution: vec![9, 9],
        strategies: vec![Strategy::Entropy, Strategy::Random],
        runs: 2,
        master_seed: 11,
        initial_count: 6,
        batch_size: 2,
        batch_count: 3,
        batch_method: BatchMethod::Kdpp,
        hyper_mode: HyperMode::OptimizeEachBatch,
        dpp: DppConfig {
            m_t: 60,
            bandwidth: 5.0,
        },
        lengthscale_factor: 0.25,
        restarts: 2,
        confidence_threshold: 0.95,
    }
}

fn read(dir: &Path, name: &str, file: &str) -> String {
    std::fs::read_to_string(dir.join(name).join(file)).unwrap()
}

#[test]
fn artifacts_are_reproducible_and_consistent() {
    let spec = mrac_spec("repro");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec, dir_a.path()).unwrap();
    run_experiment(&spec, dir_b.path()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    for file in [
        "runs.csv",
        "aggregate.csv",
        "summary.json",
        "error.svg",
        "filtered_error.svg",
        "win_rate.svg",
    ] {
        assert_eq!(
            read(dir_a.path(), "repro", file),
            read(dir_b.path(), "repro", file),
            "{file} differs between identical experiments"
        );
    }

    // The wall-time sidecar exists but is exempt from reproducibility.
    assert!(dir_a.path().join("repro/timing.csv").exists());

    let cells = read_runs_csv(&read(dir_a.path(), "repro", "runs.csv")).unwrap();
    assert_eq!(cells.len(), spec.runs * spec.strategies.len());

    // Shared initialization: within a run index, every strategy starts from
    // the same training set, so the whole batch-0 record coincides.
    for run in 0..spec.runs {
        let batch0: Vec<_> = cells
            .iter()
            .filter(|c| c.run == run)
            .map(|c| {
                let CellOutcome::Completed(r) = &c.outcome else {
                    panic!("cell missing");
                };
                &r.records[0]
            })
            .collect();
        assert_eq!(batch0.len(), 2);
        assert_eq!(batch0[0].training_size, spec.initial_count);
        assert_eq!(batch0[0].error, batch0[1].error);
        assert_eq!(batch0[0].sigma_f2, batch0[1].sigma_f2);
        assert_eq!(batch0[0].lengthscales, batch0[1].lengthscales);
    }

    // Rebuilding the aggregate from the raw rows reproduces the report.
    let rebuilt = build_report(&report.name, &strategies_in(&cells), &cells);
    for (a, b) in report.curves.iter().zip(&rebuilt.curves) {
        assert_eq!(a.strategy, b.strategy);
        assert_eq!(a.completed_runs, b.completed_runs);
        for t in 0..a.mean_error.len() {
            assert!((a.mean_error[t] - b.mean_error[t]).abs() < 1e-9);
            assert!((a.std_error[t] - b.std_error[t]).abs() < 1e-9);
            assert!((a.mean_filtered_error[t] - b.mean_filtered_error[t]).abs() < 1e-9);
        }
    }

    // Entropy against itself ties everywhere; every win rate is a fraction.
    let self_rate = report
        .win_rates
        .iter()
        .find(|w| w.competitor == Strategy::Entropy)
        .unwrap();
    assert!(self_rate.rate.iter().all(|&r| r == 1.0));
    for w in &report.win_rates {
        assert_eq!(w.rate.len(), spec.batch_count + 1);
        assert!(w.rate.iter().all(|&r| (0.0..=1.0).contains(&r)));
    }
}

#[test]
fn single_run_report_equals_the_run_itself() {
    let mut spec = mrac_spec("single");
    spec.strategies = vec![Strategy::Entropy];
    spec.runs = 1;
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec, dir.path()).unwrap();

    let cells = read_runs_csv(&read(dir.path(), "single", "runs.csv")).unwrap();
    let CellOutcome::Completed(result) = &cells[0].outcome else {
        panic!("run missing");
    };
    let curve = &report.curves[0];
    assert_eq!(curve.completed_runs, 1);
    for (t, r) in result.records.iter().enumerate() {
        assert_eq!(curve.mean_error[t], r.error);
        assert_eq!(curve.std_error[t], 0.0);
        assert_eq!(curve.mean_filtered_error[t], r.filtered_error);
        assert_eq!(report.training_sizes[t], r.training_size);
    }
}

/// Constant trajectory y = 0.5 - theta, except that a poisoned variant
/// emits NaN derivatives above theta = 0.97 to model a diverging simulator.
struct Ramp {
    poisoned: bool,
    bounds: ParamBox,
}

impl Ramp {
    fn new(poisoned: bool) -> Self {
        Self {
            poisoned,
            bounds: ParamBox::new(vec![(0.0, 1.0)]).unwrap(),
        }
    }
}

struct RampTrajectory {
    y0: f64,
    poison: bool,
}

impl Integrand for RampTrajectory {
    fn state_dim(&self) -> usize {
        1
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![self.y0]
    }
    fn derivative(&self, _t: f64, _x: &[f64], dx: &mut [f64]) {
        dx[0] = if self.poison { f64::NAN } else { 0.0 };
    }
    fn outputs(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = x[0];
    }
}

impl System for Ramp {
    fn name(&self) -> &'static str {
        "ramp"
    }
    fn bounds(&self) -> &ParamBox {
        &self.bounds
    }
    fn channels(&self) -> &'static [&'static str] {
        &["y"]
    }
    fn default_sim_config(&self) -> SimConfig {
        SimConfig {
            t_final: 1.0,
            dt: 0.01,
        }
    }
    fn integrand(&self, theta: &ParamPoint) -> Box<dyn Integrand> {
        Box::new(RampTrajectory {
            y0: 0.5 - theta[0],
            poison: self.poisoned && theta[0] > 0.97,
        })
    }
}

#[test]
fn diverging_runs_are_isolated_not_fatal() -> Result<()> {
    let healthy = Ramp::new(false);
    let poisoned = Ramp::new(true);
    let grid = ParamGrid::new(healthy.bounds().clone(), &[21])?;
    let formula_text = "G[0,1](y - 0 >= 0)";
    let formula = parse(formula_text)?;
    let truth = ground_truth_sweep(
        &healthy,
        formula_text,
        &grid,
        &healthy.default_sim_config(),
        None,
    )?;
    // theta in [0, 0.5) satisfies, the rest fails; both classes non-empty.
    assert!(truth.sat_mask.iter().any(|&s| s));
    assert!(truth.sat_mask.iter().any(|&s| !s));

    let spec = ExperimentSpec {
        name: "flaky".into(),
        benchmark: "ramp".into(),
        formula: Some(formula_text.into()),
        resolution: vec![21],
        strategies: vec![Strategy::Entropy, Strategy::Random],
        runs: 6,
        master_seed: 5,
        initial_count: 4,
        batch_size: 2,
        batch_count: 3,
        batch_method: BatchMethod::Kdpp,
        hyper_mode: HyperMode::Static,
        dpp: DppConfig {
            m_t: 40,
            bandwidth: 5.0,
        },
        lengthscale_factor: 0.25,
        restarts: 1,
        confidence_threshold: 0.95,
    };

    let cells: Vec<RunCell> = run_matrix(&poisoned, &formula, &grid, &truth, &spec);
    assert_eq!(cells.len(), 12);
    let failed = cells
        .iter()
        .filter(|c| matches!(c.outcome, CellOutcome::Failed { .. }))
        .count();
    let completed = cells.len() - failed;
    assert!(failed > 0, "poison region was never touched");
    assert!(completed > 0, "every run touched the poison region");

    let report = build_report(&spec.name, &spec.strategies, &cells);
    assert_eq!(report.failures.len(), failed);
    for f in &report.failures {
        assert!(f.message.contains("non-finite"), "{}", f.message);
    }
    let done_per_curve: usize = report.curves.iter().map(|c| c.completed_runs).sum();
    assert_eq!(done_per_curve, completed);

    // Artifacts still render with holes marked, not dropped on the floor.
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(
        &spec,
        formula_text,
        &[21],
        grid.len(),
        &cells,
        &report,
        dir.path(),
    )?;
    let summary = read(dir.path(), "flaky", "summary.json");
    assert!(summary.contains("\"failures\""));
    assert!(summary.contains("non-finite"));
    let rows = read(dir.path(), "flaky", "runs.csv").lines().count() - 1;
    assert_eq!(rows, completed * (spec.batch_count + 2 - 1));
    Ok(())
}
