//! Parses a temporal formula, evaluates its robustness degree on two
//! hand-built traces (one satisfying, one violating), and shows how the
//! sign and magnitude of the degree report margin, not just a verdict.

use verigrid::error::Result;
use verigrid::stl::robustness;
use verigrid::stl_parse::parse;
use verigrid::trace::Trace;

fn decaying_trace(amplitude: f64) -> Result<Trace> {
    let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
    let e1: Vec<f64> = times.iter().map(|t| amplitude * (-0.8 * t).exp()).collect();
    Trace::new(times, vec![("e1".to_string(), e1)])
}

fn main() -> Result<()> {
    let text = "G[1,4](0.5 - abs(e1 - 0) >= 0)";
    let formula = parse(text)?;
    println!("formula: {text}");
    println!("  (after t = 1, the tracking error must stay inside +/- 0.5)\n");

    for amplitude in [0.8, 2.0] {
        let trace = decaying_trace(amplitude)?;
        let m = robustness(&formula, &trace)?;
        let verdict = if m.satisfied { "satisfied" } else { "violated" };
        println!(
            "initial error {amplitude:.1}: robustness {:+.4}  ({verdict})",
            m.value
        );
    }

    println!("\nThe degree is the margin at the tightest instant: positive values");
    println!("measure how much slack remains, negative ones how far the trace");
    println!("overshoots the envelope before settling.");
    Ok(())
}
