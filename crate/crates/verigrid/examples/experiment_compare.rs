//! Runs a small strategy-comparison experiment end to end from a TOML config
//! and prints where the artifacts landed. This is the library-call version
//! of `verigrid experiment --config ...`; the config text below doubles as
//! schema documentation.

use verigrid::acquisition::Strategy;
use verigrid::error::Result;
use verigrid::experiment::{parse_config, run_experiment};

const CONFIG: &str = r#"
[[experiment]]
name = "demo-compare"
benchmark = "mrac2d"
resolution = [11, 11]
strategies = ["entropy", "random"]
runs = 3
master_seed = 2024
initial_count = 10
batch_size = 3
batch_count = 5
candidate_draws = 80
restarts = 2
"#;

fn main() -> Result<()> {
    let specs = parse_config(CONFIG)?;
    let spec = &specs[0];
    println!(
        "experiment {:?}: {} runs of {:?} on {} at {:?}",
        spec.name,
        spec.runs,
        spec.strategies.iter().map(|s| s.name()).collect::<Vec<_>>(),
        spec.benchmark,
        spec.resolution
    );

    let out = std::env::temp_dir().join("verigrid-demo");
    let report = run_experiment(spec, &out)?;

    println!("\nmean misclassification error by training-set size:");
    print!("{:>6}", "n");
    for curve in &report.curves {
        print!(" {:>12}", curve.strategy);
    }
    println!();
    for (k, &n) in report.training_sizes.iter().enumerate() {
        print!("{n:>6}");
        for curve in &report.curves {
            print!(" {:>12.4}", curve.mean_error[k]);
        }
        println!();
    }

    for wr in report.win_rates.iter().filter(|w| w.competitor != Strategy::Entropy) {
        let last = *wr.rate.last().unwrap();
        println!(
            "\nentropy matched or beat {} in {:.0}% of final-batch runs ({} paired runs)",
            wr.competitor,
            100.0 * last,
            wr.pairs
        );
    }
    if !report.failures.is_empty() {
        println!("failures: {:?}", report.failures);
    }

    let dir = out.join(&spec.name);
    println!("\nartifacts in {}:", dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&dir)?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }
    Ok(())
}
