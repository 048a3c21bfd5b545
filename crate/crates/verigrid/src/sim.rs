//! Benchmark systems and the fixed-step simulator.
//!
//! A [`System`] describes one benchmark: its uncertain-parameter box, its
//! output channels, and a factory that builds a per-trajectory [`Integrand`]
//! for a concrete parameter point. Splitting the integrand out keeps
//! simulation state (for example the adaptive controller's recorded data
//! stack) owned by the trajectory, so simulations of different points can
//! run concurrently with no shared mutable state and identical inputs always
//! produce bit-identical traces.
//!
//! Integration is classic fourth-order Runge-Kutta with a fixed step. The
//! step doubles as the trace sampling period. Discrete dynamics (controller
//! bookkeeping that changes between integration steps, not within one) hook
//! in through [`Integrand::post_step`].

use crate::error::{Error, Result};
use crate::grid::{ParamBox, ParamPoint};
use crate::stl::{robustness, RobustnessMeasurement, StlFormula};
use crate::trace::Trace;

/// Time horizon and integration step, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_final: f64,
    pub dt: f64,
}

impl SimConfig {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        let cfg = Self { t_final, dt };
        cfg.steps()?;
        Ok(cfg)
    }

    /// Number of integration steps; `t_final` must be an integer multiple
    /// of `dt` to within 1e-9 relative.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_final > 0.0 && self.t_final.is_finite())
        {
            return Err(Error::InvalidSimConfig(format!(
                "t_final {} and dt {} must be positive and finite",
                self.t_final, self.dt
            )));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(Error::InvalidSimConfig(format!(
                "t_final {} is not a multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// One benchmark system.
pub trait System: Send + Sync {
    fn name(&self) -> &'static str;
    fn bounds(&self) -> &ParamBox;
    fn param_dim(&self) -> usize {
        self.bounds().dim()
    }
    fn channels(&self) -> &'static [&'static str];
    fn default_sim_config(&self) -> SimConfig;
    /// Builds the trajectory integrand for one parameter point. The point
    /// has already been checked against `bounds`.
    fn integrand(&self, theta: &ParamPoint) -> Box<dyn Integrand>;
}

/// Continuous dynamics plus optional discrete between-step updates for one
/// trajectory.
pub trait Integrand {
    fn state_dim(&self) -> usize;
    fn initial_state(&self) -> Vec<f64>;
    /// Writes dx/dt into `dx`. Must not mutate the integrand: it is called
    /// four times per step at intermediate states.
    fn derivative(&self, t: f64, x: &[f64], dx: &mut [f64]);
    /// Called once after each accepted step. May mutate internal discrete
    /// state (data stacks, latched modes) and clamp state entries.
    fn post_step(&mut self, _t: f64, _x: &mut [f64]) {}
    /// Writes the declared output channels for the current state.
    fn outputs(&self, t: f64, x: &[f64], out: &mut [f64]);
}

struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

fn rk4_step(f: &dyn Integrand, t: f64, dt: f64, x: &mut [f64], ws: &mut Rk4Workspace) {
    let n = x.len();
    f.derivative(t, x, &mut ws.k1);
    for i in 0..n {
        ws.tmp[i] = x[i] + 0.5 * dt * ws.k1[i];
    }
    f.derivative(t + 0.5 * dt, &ws.tmp, &mut ws.k2);
    for i in 0..n {
        ws.tmp[i] = x[i] + 0.5 * dt * ws.k2[i];
    }
    f.derivative(t + 0.5 * dt, &ws.tmp, &mut ws.k3);
    for i in 0..n {
        ws.tmp[i] = x[i] + dt * ws.k3[i];
    }
    f.derivative(t + dt, &ws.tmp, &mut ws.k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Integrates the system at `theta` and returns the sampled output trace.
pub fn simulate(system: &dyn System, theta: &ParamPoint, config: &SimConfig) -> Result<Trace> {
    let steps = config.steps()?;
    if theta.dim() != system.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.param_dim(),
            got: theta.dim(),
        });
    }
    if let Some(dim) = (0..theta.dim())
        .find(|&d| theta[d] < system.bounds().lo(d) || theta[d] > system.bounds().hi(d))
    {
        return Err(Error::OutOfBounds { dim });
    }

    let mut integrand = system.integrand(theta);
    let mut x = integrand.initial_state();
    debug_assert_eq!(x.len(), integrand.state_dim());
    let mut ws = Rk4Workspace::new(x.len());
    let names = system.channels();
    let mut row = vec![0.0; names.len()];
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); names.len()];
    let mut times = Vec::with_capacity(steps + 1);

    integrand.outputs(0.0, &x, &mut row);
    times.push(0.0);
    for (col, &v) in columns.iter_mut().zip(row.iter()) {
        col.push(v);
    }
    for step in 0..steps {
        let t = step as f64 * config.dt;
        rk4_step(integrand.as_ref(), t, config.dt, &mut x, &mut ws);
        let t_next = (step + 1) as f64 * config.dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        integrand.post_step(t_next, &mut x);
        integrand.outputs(t_next, &x, &mut row);
        times.push(t_next);
        for (col, &v) in columns.iter_mut().zip(row.iter()) {
            col.push(v);
        }
    }

    Trace::new(
        times,
        names
            .iter()
            .map(|n| n.to_string())
            .zip(columns)
            .map(|(n, c)| (n, c))
            .collect(),
    )
}

/// Simulate, then evaluate the requirement on the resulting trace.
pub fn measure(
    system: &dyn System,
    theta: &ParamPoint,
    formula: &StlFormula,
    config: &SimConfig,
) -> Result<RobustnessMeasurement> {
    let trace = simulate(system, theta, config)?;
    robustness(formula, &trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// dx/dt = -x, closed form x(t) = e^-t.
    struct Decay;

    impl Integrand for Decay {
        fn state_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn derivative(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
            dx[0] = -x[0];
        }
        fn outputs(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = x[0];
        }
    }

    struct DecaySystem {
        bounds: ParamBox,
    }

    impl System for DecaySystem {
        fn name(&self) -> &'static str {
            "decay"
        }
        fn bounds(&self) -> &ParamBox {
            &self.bounds
        }
        fn channels(&self) -> &'static [&'static str] {
            &["x"]
        }
        fn default_sim_config(&self) -> SimConfig {
            SimConfig {
                t_final: 1.0,
                dt: 0.01,
            }
        }
        fn integrand(&self, _theta: &ParamPoint) -> Box<dyn Integrand> {
            Box::new(Decay)
        }
    }

    fn decay_system() -> DecaySystem {
        DecaySystem {
            bounds: ParamBox::new(vec![(0.0, 1.0)]).unwrap(),
        }
    }

    #[test]
    fn config_requires_integral_step_count() {
        assert!(SimConfig::new(1.0, 0.01).is_ok());
        assert_eq!(SimConfig::new(40.0, 0.01).unwrap().steps().unwrap(), 4000);
        assert!(SimConfig::new(1.0, 0.3).is_err());
        assert!(SimConfig::new(0.0, 0.1).is_err());
        assert!(SimConfig::new(1.0, -0.1).is_err());
    }

    #[test]
    fn rk4_matches_exponential_decay() {
        let sys = decay_system();
        let trace = simulate(
            &sys,
            &ParamPoint::new(vec![0.5]),
            &SimConfig {
                t_final: 1.0,
                dt: 0.1,
            },
        )
        .unwrap();
        let xs = trace.channel("x").unwrap();
        for (i, &t) in trace.times().iter().enumerate() {
            // per-step truncation for y' = -y at h=0.1 is h^5/120 ~ 8e-8
            assert!((xs[i] - (-t).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let sys = decay_system();
        let theta = ParamPoint::new(vec![0.5]);
        let exact = (-1.0f64).exp();
        let err = |dt: f64| {
            let trace = simulate(&sys, &theta, &SimConfig { t_final: 1.0, dt }).unwrap();
            (trace.channel("x").unwrap().last().unwrap() - exact).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e2 < e1 / 8.0, "halving the step only took {e1} to {e2}");
    }

    #[test]
    fn rejects_out_of_bounds_and_wrong_dim() {
        let sys = decay_system();
        let cfg = sys.default_sim_config();
        assert!(matches!(
            simulate(&sys, &ParamPoint::new(vec![2.0]), &cfg),
            Err(Error::OutOfBounds { dim: 0 })
        ));
        assert!(matches!(
            simulate(&sys, &ParamPoint::new(vec![0.1, 0.2]), &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// dx/dt = x^2, finite-time blow-up at t = 1 from x(0) = 1.
    struct BlowUp;

    impl Integrand for BlowUp {
        fn state_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn derivative(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
            dx[0] = x[0] * x[0];
        }
        fn outputs(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = x[0];
        }
    }

    #[test]
    fn blow_up_reports_the_time() {
        struct BlowSystem {
            bounds: ParamBox,
        }
        impl System for BlowSystem {
            fn name(&self) -> &'static str {
                "blow"
            }
            fn bounds(&self) -> &ParamBox {
                &self.bounds
            }
            fn channels(&self) -> &'static [&'static str] {
                &["x"]
            }
            fn default_sim_config(&self) -> SimConfig {
                SimConfig {
                    t_final: 2.0,
                    dt: 0.01,
                }
            }
            fn integrand(&self, _theta: &ParamPoint) -> Box<dyn Integrand> {
                Box::new(BlowUp)
            }
        }
        let sys = BlowSystem {
            bounds: ParamBox::new(vec![(0.0, 1.0)]).unwrap(),
        };
        match simulate(&sys, &ParamPoint::new(vec![0.5]), &sys.default_sim_config()) {
            Err(Error::NonFiniteState { t }) => assert!(t > 0.9 && t < 1.5),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
