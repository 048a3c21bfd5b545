//! Quantitative semantics for bounded signal temporal logic over sampled
//! traces.
//!
//! The robustness degree follows the usual min/max recursion: predicates map
//! a sample to a signed margin, negation flips the sign, conjunction takes
//! the pointwise minimum, disjunction the maximum, and the bounded temporal
//! operators take the extremum over every sample whose time falls in the
//! window `[t + t1, t + t2]`. Windows are closed; a sample sitting within
//! 1e-9 of a window edge counts as inside, which keeps `G[0, T]` covering a
//! whole `T`-second trace even though accumulated time stamps carry rounding
//! from repeated addition.
//!
//! A strictly positive robustness value certifies satisfaction and a
//! strictly negative value certifies violation. Zero is reported as
//! unsatisfied: the boundary is where the classification problem downstream
//! puts its decision threshold, so it is treated as failure.

use crate::error::{Error, Result};
use crate::trace::Trace;

const EDGE_SLACK: f64 = 1e-9;

/// Affine margin over a single channel sample: `coeff * s + offset` with
/// `coeff` restricted to +1 or -1 by the parser.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub channel: String,
    pub coeff: f64,
    pub offset: f64,
}

impl Predicate {
    pub fn value(&self, sample: f64) -> f64 {
        self.coeff * sample + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    Pred(Predicate),
    Not(Box<StlFormula>),
    And(Box<StlFormula>, Box<StlFormula>),
    Or(Box<StlFormula>, Box<StlFormula>),
    /// `G[t1, t2]`: minimum over the window.
    Always {
        t1: f64,
        t2: f64,
        sub: Box<StlFormula>,
    },
    /// `F[t1, t2]`: maximum over the window.
    Eventually {
        t1: f64,
        t2: f64,
        sub: Box<StlFormula>,
    },
}

/// Robustness degree at time zero plus the derived satisfaction verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessMeasurement {
    pub value: f64,
    /// `value > 0` exactly; zero counts as unsatisfied.
    pub satisfied: bool,
}

impl RobustnessMeasurement {
    fn from_value(value: f64) -> Self {
        Self {
            value,
            satisfied: value > 0.0,
        }
    }
}

/// Index range of samples with `lo <= t <= hi` up to edge slack.
pub(crate) fn window_indices(times: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let start = times.partition_point(|t| *t < lo - EDGE_SLACK);
    let end = times.partition_point(|t| *t <= hi + EDGE_SLACK);
    start..end
}

/// Robustness of the formula at the start of the trace.
pub fn robustness(formula: &StlFormula, trace: &Trace) -> Result<RobustnessMeasurement> {
    let values = eval_range(formula, trace, 0..1)?;
    Ok(RobustnessMeasurement::from_value(values[0]))
}

/// Minimum over already-measured conjuncts. The value equals what a single
/// `and`-chained formula would have produced on the same trace.
///
/// Panics on an empty slice: an empty conjunction has no robustness degree.
pub fn conjunction_robustness(parts: &[RobustnessMeasurement]) -> RobustnessMeasurement {
    assert!(!parts.is_empty(), "empty conjunction");
    let value = parts.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    RobustnessMeasurement::from_value(value)
}

/// Evaluates the robustness signal for sample indices `range`, recursing
/// only into the index span each temporal window actually needs.
fn eval_range(
    formula: &StlFormula,
    trace: &Trace,
    range: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    debug_assert!(!range.is_empty() && range.end <= trace.len());
    match formula {
        StlFormula::Pred(p) => {
            let samples = trace.channel(&p.channel)?;
            Ok(samples[range].iter().map(|s| p.value(*s)).collect())
        }
        StlFormula::Not(sub) => {
            let mut v = eval_range(sub, trace, range)?;
            for x in &mut v {
                *x = -*x;
            }
            Ok(v)
        }
        StlFormula::And(a, b) => {
            let va = eval_range(a, trace, range.clone())?;
            let vb = eval_range(b, trace, range)?;
            Ok(va.into_iter().zip(vb).map(|(x, y)| x.min(y)).collect())
        }
        StlFormula::Or(a, b) => {
            let va = eval_range(a, trace, range.clone())?;
            let vb = eval_range(b, trace, range)?;
            Ok(va.into_iter().zip(vb).map(|(x, y)| x.max(y)).collect())
        }
        StlFormula::Always { t1, t2, sub } => windowed_extremum(trace, range, *t1, *t2, sub, true),
        StlFormula::Eventually { t1, t2, sub } => {
            windowed_extremum(trace, range, *t1, *t2, sub, false)
        }
    }
}

/// Sliding window min (or max) of the sub-signal. Window edges move
/// monotonically with the evaluation index, so a monotone deque gives the
/// extremum in amortized constant time per index.
fn windowed_extremum(
    trace: &Trace,
    range: std::ops::Range<usize>,
    t1: f64,
    t2: f64,
    sub: &StlFormula,
    minimum: bool,
) -> Result<Vec<f64>> {
    let times = trace.times();
    let windows: Vec<std::ops::Range<usize>> = range
        .clone()
        .map(|i| {
            let w = window_indices(times, times[i] + t1, times[i] + t2);
            if w.is_empty() {
                Err(Error::EmptyWindow {
                    lo: times[i] + t1,
                    hi: times[i] + t2,
                })
            } else {
                Ok(w)
            }
        })
        .collect::<Result<_>>()?;
    let child_range = windows[0].start..windows.last().unwrap().end;
    let child = eval_range(sub, trace, child_range.clone())?;
    let offset = child_range.start;

    let better = |a: f64, b: f64| if minimum { a <= b } else { a >= b };
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut right = child_range.start;
    let mut out = Vec::with_capacity(windows.len());
    for w in &windows {
        while right < w.end {
            let v = child[right - offset];
            while let Some(&back) = deque.back() {
                if better(v, child[back - offset]) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(right);
            right += 1;
        }
        while let Some(&front) = deque.front() {
            if front < w.start {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(child[deque.front().unwrap() - offset]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl_parse::parse;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn constant_trace(seconds: usize, names_values: &[(&str, f64)]) -> Trace {
        let times: Vec<f64> = (0..=seconds).map(|i| i as f64).collect();
        let channels = names_values
            .iter()
            .map(|(n, v)| (n.to_string(), vec![*v; times.len()]))
            .collect();
        Trace::new(times, channels).unwrap()
    }

    fn trace_1ch(name: &str, values: Vec<f64>) -> Trace {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        Trace::new(times, vec![(name.to_string(), values)]).unwrap()
    }

    /// Exhaustive per-sample re-evaluation: direct recursion computing the
    /// value at every index with linear window scans. Independent of the
    /// sliding-deque path.
    pub(crate) fn brute_force(formula: &StlFormula, trace: &Trace, i: usize) -> f64 {
        let times = trace.times();
        match formula {
            StlFormula::Pred(p) => p.value(trace.channel(&p.channel).unwrap()[i]),
            StlFormula::Not(sub) => -brute_force(sub, trace, i),
            StlFormula::And(a, b) => {
                brute_force(a, trace, i).min(brute_force(b, trace, i))
            }
            StlFormula::Or(a, b) => brute_force(a, trace, i).max(brute_force(b, trace, i)),
            StlFormula::Always { t1, t2, sub } => {
                let (lo, hi) = (times[i] + t1, times[i] + t2);
                let mut best = f64::INFINITY;
                let mut any = false;
                for (j, t) in times.iter().enumerate() {
                    if *t >= lo - 1e-9 && *t <= hi + 1e-9 {
                        best = best.min(brute_force(sub, trace, j));
                        any = true;
                    }
                }
                assert!(any, "empty window in oracle");
                best
            }
            StlFormula::Eventually { t1, t2, sub } => {
                let (lo, hi) = (times[i] + t1, times[i] + t2);
                let mut best = f64::NEG_INFINITY;
                let mut any = false;
                for (j, t) in times.iter().enumerate() {
                    if *t >= lo - 1e-9 && *t <= hi + 1e-9 {
                        best = best.max(brute_force(sub, trace, j));
                        any = true;
                    }
                }
                assert!(any, "empty window in oracle");
                best
            }
        }
    }

    /// Boolean STL semantics with non-strict predicate comparisons. Used to
    /// check soundness of the robustness sign.
    pub(crate) fn boolean_eval(formula: &StlFormula, trace: &Trace, i: usize) -> bool {
        let times = trace.times();
        match formula {
            StlFormula::Pred(p) => p.value(trace.channel(&p.channel).unwrap()[i]) >= 0.0,
            StlFormula::Not(sub) => !boolean_eval(sub, trace, i),
            StlFormula::And(a, b) => boolean_eval(a, trace, i) && boolean_eval(b, trace, i),
            StlFormula::Or(a, b) => boolean_eval(a, trace, i) || boolean_eval(b, trace, i),
            StlFormula::Always { t1, t2, sub } => {
                let (lo, hi) = (times[i] + t1, times[i] + t2);
                times
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
                    .all(|(j, _)| boolean_eval(sub, trace, j))
            }
            StlFormula::Eventually { t1, t2, sub } => {
                let (lo, hi) = (times[i] + t1, times[i] + t2);
                times
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
                    .any(|(j, _)| boolean_eval(sub, trace, j))
            }
        }
    }

    pub(crate) fn random_piecewise_linear(
        rng: &mut impl Rng,
        name: &str,
        samples: usize,
        seconds: f64,
    ) -> Trace {
        // a handful of random knots, linearly interpolated onto the axis
        let knots = rng.random_range(3..8);
        let kx: Vec<f64> = {
            let mut v: Vec<f64> = (0..knots).map(|_| rng.random_range(0.0..seconds)).collect();
            v[0] = 0.0;
            v.sort_by(f64::total_cmp);
            v.push(seconds);
            v
        };
        let ky: Vec<f64> = (0..=knots).map(|_| rng.random_range(-2.5..2.5)).collect();
        let times: Vec<f64> = (0..samples)
            .map(|i| i as f64 * seconds / (samples - 1) as f64)
            .collect();
        let values = times
            .iter()
            .map(|t| {
                let k = kx.windows(2).position(|w| *t <= w[1]).unwrap_or(knots - 1);
                let f = (t - kx[k]) / (kx[k + 1] - kx[k]).max(1e-12);
                ky[k] + f.clamp(0.0, 1.0) * (ky[k + 1] - ky[k])
            })
            .collect();
        Trace::new(times, vec![(name.to_string(), values)]).unwrap()
    }

    #[test]
    fn zero_error_trace_saturates_bound_formula() {
        let f = parse("G[0,40](1 - abs(e1 - 0) >= 0)").unwrap();
        let trace = constant_trace(40, &[("e1", 0.0)]);
        let m = robustness(&f, &trace).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(m.satisfied);
    }

    #[test]
    fn zero_robustness_is_not_satisfied() {
        let f = parse("x1 >= 0").unwrap();
        let trace = constant_trace(3, &[("x1", 0.0)]);
        let m = robustness(&f, &trace).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(!m.satisfied);
    }

    #[test]
    fn always_takes_window_minimum() {
        let trace = trace_1ch("x", vec![5.0, 3.0, -1.0, 4.0, 9.0]);
        let f = parse("G[1,3](x >= 0)").unwrap();
        assert_eq!(robustness(&f, &trace).unwrap().value, -1.0);
        let g = parse("G[3,4](x >= 0)").unwrap();
        assert_eq!(robustness(&g, &trace).unwrap().value, 4.0);
    }

    #[test]
    fn eventually_takes_window_maximum() {
        let trace = trace_1ch("x", vec![-5.0, -3.0, -1.0, -4.0, -9.0]);
        let f = parse("F[0,2](x >= 0)").unwrap();
        assert_eq!(robustness(&f, &trace).unwrap().value, -1.0);
    }

    #[test]
    fn nested_temporal_operators() {
        // F[0,2](G[0,1] x): inner minima over pairs, outer max over i=0..2
        let trace = trace_1ch("x", vec![1.0, -2.0, 4.0, 3.0, -7.0]);
        let f = parse("F[0,2](G[0,1](x >= 0))").unwrap();
        // G at i=0: min(1,-2) = -2; i=1: min(-2,4) = -2; i=2: min(4,3) = 3
        assert_eq!(robustness(&f, &trace).unwrap().value, 3.0);
    }

    #[test]
    fn empty_window_is_an_error() {
        let trace = trace_1ch("x", vec![0.0, 1.0, 2.0]);
        let f = parse("G[5,6](x >= 0)").unwrap();
        assert!(matches!(
            robustness(&f, &trace),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn missing_channel_is_an_error() {
        let trace = trace_1ch("x", vec![0.0, 1.0]);
        let f = parse("y >= 0").unwrap();
        assert!(matches!(
            robustness(&f, &trace),
            Err(Error::MissingChannel(_))
        ));
    }

    #[test]
    fn negation_flips_sign_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let f = parse("F[0,5](G[0,2](x - 0.3 >= 0))").unwrap();
        let nf = StlFormula::Not(Box::new(f.clone()));
        for _ in 0..50 {
            let trace = random_piecewise_linear(&mut rng, "x", 101, 10.0);
            let a = robustness(&f, &trace).unwrap().value;
            let b = robustness(&nf, &trace).unwrap().value;
            assert_eq!(a.to_bits(), (-b).to_bits());
        }
    }

    #[test]
    fn robustness_sign_is_sound_for_boolean_semantics() {
        let mut rng = ChaCha12Rng::seed_from_u64(72);
        let formulas = [
            parse("G[0,10](1 - abs(x - 0) >= 0)").unwrap(),
            parse("(F[2,3](x - 0.7 >= 0)) and (F[2,3](1.3 - x >= 0))").unwrap(),
            parse("not (F[0,8](x - 2 >= 0))").unwrap(),
            parse("(G[1,4](x + 1 >= 0)) or (F[5,9](0.5 - x >= 0))").unwrap(),
        ];
        for _ in 0..60 {
            let trace = random_piecewise_linear(&mut rng, "x", 101, 10.0);
            for f in &formulas {
                let m = robustness(f, &trace).unwrap();
                let truth = boolean_eval(f, &trace, 0);
                if m.value > 0.0 {
                    assert!(truth, "positive robustness but boolean false: {f:?}");
                }
                if m.value < 0.0 {
                    assert!(!truth, "negative robustness but boolean true: {f:?}");
                }
            }
        }
    }

    #[test]
    fn agrees_with_brute_force_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(73);
        let formulas = [
            parse("G[0,10](1 - abs(x - 0) >= 0)").unwrap(),
            parse("F[0,3](G[0,2](x >= 0))").unwrap(),
            parse("(F[2,3](x - 0.7 >= 0)) and ((G[4,6](1.3 - x >= 0)) or (x >= 0))").unwrap(),
            parse("not ((x - 1 >= 0) or (F[1,9](x + 2 >= 0)))").unwrap(),
        ];
        for _ in 0..40 {
            let trace = random_piecewise_linear(&mut rng, "x", 81, 10.0);
            for f in &formulas {
                let fast = robustness(f, &trace).unwrap().value;
                let slow = brute_force(f, &trace, 0);
                assert_eq!(fast.to_bits(), slow.to_bits(), "{f:?}");
            }
        }
    }

    #[test]
    fn uniform_increase_of_positive_channel_never_hurts() {
        // every predicate uses +x, so shifting x upward is monotone
        let f = parse("(G[0,6](x + 1 >= 0)) and (F[2,8](x - 0.5 >= 0))").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(74);
        for _ in 0..30 {
            let trace = random_piecewise_linear(&mut rng, "x", 51, 10.0);
            let shifted = Trace::new(
                trace.times().to_vec(),
                vec![(
                    "x".into(),
                    trace.channel("x").unwrap().iter().map(|v| v + 0.3).collect(),
                )],
            )
            .unwrap();
            let a = robustness(&f, &trace).unwrap().value;
            let b = robustness(&f, &shifted).unwrap().value;
            assert!(b >= a);
        }
    }

    #[test]
    fn conjunction_matches_and_chain() {
        let mut rng = ChaCha12Rng::seed_from_u64(75);
        let f1 = parse("F[2,3](x - 0.7 >= 0)").unwrap();
        let f2 = parse("G[0,5](2 - x >= 0)").unwrap();
        let f3 = parse("x + 1 >= 0").unwrap();
        let chained = parse("((F[2,3](x - 0.7 >= 0)) and (G[0,5](2 - x >= 0))) and (x + 1 >= 0)")
            .unwrap();
        for _ in 0..20 {
            let trace = random_piecewise_linear(&mut rng, "x", 61, 10.0);
            let parts: Vec<RobustnessMeasurement> = [&f1, &f2, &f3]
                .iter()
                .map(|f| robustness(f, &trace).unwrap())
                .collect();
            let joined = conjunction_robustness(&parts);
            let direct = robustness(&chained, &trace).unwrap();
            assert_eq!(joined.value.to_bits(), direct.value.to_bits());
            assert_eq!(joined.satisfied, direct.satisfied);
        }
    }

    #[test]
    fn conjunction_of_single_measurement_is_identity() {
        let m = RobustnessMeasurement {
            value: -0.25,
            satisfied: false,
        };
        assert_eq!(conjunction_robustness(&[m]), m);
    }

    #[test]
    fn abs_sugar_evaluates_like_direct_computation() {
        let mut rng = ChaCha12Rng::seed_from_u64(76);
        let f = parse("G[0,10](1.5 - abs(x - 0.25) >= 0)").unwrap();
        for _ in 0..20 {
            let trace = random_piecewise_linear(&mut rng, "x", 101, 10.0);
            let direct = trace
                .channel("x")
                .unwrap()
                .iter()
                .map(|s| 1.5 - (s - 0.25).abs())
                .fold(f64::INFINITY, f64::min);
            let got = robustness(&f, &trace).unwrap().value;
            // the expanded form rounds differently from the literal abs
            // expression, so equality holds only up to a few ulps
            assert!((got - direct).abs() <= 1e-12, "{got} vs {direct}");
        }
    }
}
