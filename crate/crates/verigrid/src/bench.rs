//! Named benchmarks and requirement presets.
//!
//! Everything the CLI and experiment configs address by name lives here:
//! the three shipped systems with their default grids, and the STL formulas
//! their requirements are usually written against.

use crate::autopilot::Autopilot;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::mrac::Mrac;
use crate::sim::System;

/// A registered system plus the defaults an experiment falls back to when
/// its config leaves them out.
pub struct Benchmark {
    pub system: Box<dyn System>,
    /// Grid resolution per parameter dimension.
    pub default_resolution: Vec<usize>,
    /// Preset name of the requirement usually verified on this system.
    pub default_formula: &'static str,
    /// Empirical bound on |d rho / d theta| between adjacent grid cells,
    /// calibrated from a full sweep of the default requirement. Used as a
    /// wiring sanity check: adjacent cells that do not straddle the failure
    /// boundary must not jump by more than this slope allows.
    pub robustness_slope_bound: Option<f64>,
}

impl Benchmark {
    /// The default grid over the system's parameter box.
    pub fn default_grid(&self) -> ParamGrid {
        ParamGrid::new(self.system.bounds().clone(), &self.default_resolution)
            .expect("registry defaults are valid")
    }
}

pub const BENCHMARK_NAMES: [&str; 3] = ["mrac2d", "mrac3d", "autopilot"];

pub fn benchmark(name: &str) -> Result<Benchmark> {
    match name {
        "mrac2d" => Ok(Benchmark {
            system: Box::new(Mrac::two_param()),
            default_resolution: vec![201, 201],
            default_formula: "mrac_tracking",
            robustness_slope_bound: Some(MRAC2D_SLOPE_BOUND),
        }),
        "mrac3d" => Ok(Benchmark {
            system: Box::new(Mrac::three_param()),
            default_resolution: vec![101, 101, 21],
            default_formula: "mrac_tracking",
            robustness_slope_bound: None,
        }),
        "autopilot" => Ok(Benchmark {
            system: Box::new(Autopilot::new()),
            default_resolution: vec![61, 36, 61, 7],
            default_formula: "altitude_hold",
            robustness_slope_bound: None,
        }),
        other => Err(Error::UnknownBenchmark(other.to_string())),
    }
}

/// Calibrated from a 41x41 sweep of the default tracking requirement: the
/// largest observed |delta rho| / |delta theta| between adjacent same-sign
/// cells was 0.45, roughly doubled for slack.
pub const MRAC2D_SLOPE_BOUND: f64 = 1.0;

/// Requirement presets, addressable from configs in place of raw STL text.
///
/// The `mrac_reach_2` preset keeps its second conjunct's window at [2,3];
/// `mrac_reach_2_aligned` moves that window to [12,13], matching the first
/// conjunct. The combined `mrac_reach` / `mrac_reach_aligned` presets differ
/// the same way.
pub fn formula_preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "mrac_tracking" => "G[0,40](1 - abs(e1 - 0) >= 0)",
        "mrac_reach_1" => "(F[2,3](x1 - 0.7 >= 0)) and (F[2,3](1.3 - x1 >= 0))",
        "mrac_reach_2" => "(F[12,13](x1 - 1.1 >= 0)) and (F[2,3](1.7 - x1 >= 0))",
        "mrac_reach_2_aligned" => "(F[12,13](x1 - 1.1 >= 0)) and (F[12,13](1.7 - x1 >= 0))",
        "mrac_reach_3" => "(G[22.4,22.6](x1 + 1.6 >= 0)) and (G[22.4,22.6](-1.2 - x1 >= 0))",
        "mrac_reach" => {
            "(F[2,3](x1 - 0.7 >= 0)) and (F[2,3](1.3 - x1 >= 0)) \
             and (F[12,13](x1 - 1.1 >= 0)) and (F[2,3](1.7 - x1 >= 0)) \
             and (G[22.4,22.6](x1 + 1.6 >= 0)) and (G[22.4,22.6](-1.2 - x1 >= 0))"
        }
        "mrac_reach_aligned" => {
            "(F[2,3](x1 - 0.7 >= 0)) and (F[2,3](1.3 - x1 >= 0)) \
             and (F[12,13](x1 - 1.1 >= 0)) and (F[12,13](1.7 - x1 >= 0)) \
             and (G[22.4,22.6](x1 + 1.6 >= 0)) and (G[22.4,22.6](-1.2 - x1 >= 0))"
        }
        "altitude_hold" => "G[0,50](35 - abs(x - 0) >= 0)",
        _ => return None,
    })
}

/// Interprets `text` as a preset name when one matches, otherwise as raw
/// STL source.
pub fn resolve_formula(text: &str) -> &str {
    formula_preset(text).unwrap_or(text)
}
