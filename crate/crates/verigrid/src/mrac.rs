//! Adaptive-control benchmark: a second-order plant with matched parametric
//! uncertainty, tracking a reference model under a model-reference adaptive
//! controller with concurrent learning.
//!
//! Plant:            x1' = x2,  x2' = theta1*x1 + theta2*x2 + u
//! Reference model:  xm1' = xm2,  xm2' = -wn^2*xm1 - 2*zeta*wn*xm2 + wn^2*r(t)
//! Control:          u = -wn^2*x1 - 2*zeta*wn*x2 + wn^2*r(t) - th_hat . x
//!
//! The estimate th_hat adapts from the instantaneous tracking error and,
//! concurrently, from a recorded stack of past regressor/uncertainty pairs,
//! which keeps the estimate converging even after the tracking error dies
//! out. All gains below are tuning choices for this benchmark, not physical
//! constants; the interesting object is the map from (theta1, theta2) to the
//! requirement robustness, and the gains only shape where its failure
//! boundary falls.

use crate::grid::{ParamBox, ParamPoint};
use crate::sim::{Integrand, SimConfig, System};

/// Reference-model constants, adaptation gains, and history-stack rules.
#[derive(Debug, Clone)]
pub struct MracConfig {
    /// Reference model natural frequency, rad/s.
    pub natural_freq: f64,
    /// Reference model damping ratio.
    pub damping: f64,
    /// Adaptation rate on the instantaneous tracking error.
    pub adapt_gain: f64,
    /// Adaptation rate on the recorded data stack.
    pub learn_gain: f64,
    /// Maximum recorded regressor pairs.
    pub stack_capacity: usize,
    /// Minimum distance between consecutively recorded plant states; keeps
    /// the stack spread along the trajectory instead of filling with
    /// near-duplicates.
    pub stack_spacing: f64,
    /// Seconds between recording checks. Tied to wall time rather than the
    /// integration step so that refining dt does not change what the stack
    /// records.
    pub stack_period: f64,
    /// Reference command as (start time, level) steps, sorted by time.
    pub command: Vec<(f64, f64)>,
}

impl Default for MracConfig {
    fn default() -> Self {
        Self {
            natural_freq: 1.0,
            damping: 0.5,
            adapt_gain: 4.0,
            learn_gain: 0.8,
            stack_capacity: 20,
            stack_spacing: 0.2,
            stack_period: 0.1,
            command: vec![(0.0, 1.0), (10.0, 1.5), (20.0, -1.4), (30.0, 0.5)],
        }
    }
}

/// The benchmark system. Two flavors share the dynamics: the two-parameter
/// variant perturbs only the plant coefficients, the three-parameter variant
/// additionally shifts the initial condition x1(0) by theta3.
pub struct Mrac {
    cfg: MracConfig,
    bounds: ParamBox,
    uncertain_init: bool,
    /// P*B for the reference model's Lyapunov equation A_m'P + P A_m = -I;
    /// only the column touched by the input matters for the update law.
    pb: [f64; 2],
}

/// Solves A_m'P + P A_m = -I for the 2x2 companion-form A_m = [[0,1],[-a0,-a1]]
/// and returns P*B with B = [0,1]'.
fn lyapunov_pb(a0: f64, a1: f64) -> [f64; 2] {
    let p12 = 1.0 / (2.0 * a0);
    let p22 = (p12 + 0.5) / a1;
    [p12, p22]
}

impl Mrac {
    /// theta = (theta1, theta2) over [-10,10]^2.
    pub fn two_param() -> Self {
        Self::with_config(MracConfig::default(), false)
    }

    /// theta = (theta1, theta2, theta3) over [-5,5]^2 x [-1,1], where theta3
    /// shifts x1(0).
    pub fn three_param() -> Self {
        Self::with_config(MracConfig::default(), true)
    }

    pub fn with_config(cfg: MracConfig, uncertain_init: bool) -> Self {
        let a0 = cfg.natural_freq * cfg.natural_freq;
        let a1 = 2.0 * cfg.damping * cfg.natural_freq;
        let pb = lyapunov_pb(a0, a1);
        let bounds = if uncertain_init {
            ParamBox::new(vec![(-5.0, 5.0), (-5.0, 5.0), (-1.0, 1.0)]).unwrap()
        } else {
            ParamBox::new(vec![(-10.0, 10.0), (-10.0, 10.0)]).unwrap()
        };
        Self {
            cfg,
            bounds,
            uncertain_init,
            pb,
        }
    }

    pub fn config(&self) -> &MracConfig {
        &self.cfg
    }
}

impl System for Mrac {
    fn name(&self) -> &'static str {
        if self.uncertain_init {
            "mrac3d"
        } else {
            "mrac2d"
        }
    }

    fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    fn channels(&self) -> &'static [&'static str] {
        &["x1", "x2", "xm1", "xm2", "e1"]
    }

    fn default_sim_config(&self) -> SimConfig {
        SimConfig {
            t_final: 40.0,
            dt: 0.01,
        }
    }

    fn integrand(&self, theta: &ParamPoint) -> Box<dyn Integrand> {
        Box::new(MracTrajectory {
            theta: [theta[0], theta[1]],
            x1_init: if self.uncertain_init { theta[2] } else { 0.0 },
            a0: self.cfg.natural_freq * self.cfg.natural_freq,
            a1: 2.0 * self.cfg.damping * self.cfg.natural_freq,
            adapt_gain: self.cfg.adapt_gain,
            learn_gain: self.cfg.learn_gain,
            stack_capacity: self.cfg.stack_capacity,
            stack_spacing: self.cfg.stack_spacing,
            pb: self.pb,
            stack: Vec::with_capacity(self.cfg.stack_capacity),
            next_check: self.cfg.stack_period,
            stack_period: self.cfg.stack_period,
            r_level: self.cfg.command.first().map_or(0.0, |&(_, l)| l),
            command: self.cfg.command.clone(),
        })
    }
}

/// State layout: [x1, x2, xm1, xm2, th_hat1, th_hat2].
struct MracTrajectory {
    theta: [f64; 2],
    x1_init: f64,
    a0: f64,
    a1: f64,
    adapt_gain: f64,
    learn_gain: f64,
    stack_capacity: usize,
    stack_spacing: f64,
    command: Vec<(f64, f64)>,
    pb: [f64; 2],
    /// Recorded (plant state, matched uncertainty theta.x) pairs. Mutated
    /// only between integration steps, so stage evaluations within one step
    /// all see the same stack.
    stack: Vec<([f64; 2], f64)>,
    next_check: f64,
    stack_period: f64,
    /// Command level latched at the last step boundary. Holding it constant
    /// within a step keeps each RK4 step integrating a smooth right-hand
    /// side; the switch lands exactly on a boundary for any dt that divides
    /// the switch times.
    r_level: f64,
}

impl MracTrajectory {
    fn command_level(&self, t: f64) -> f64 {
        let mut level = self.command.first().map_or(0.0, |&(_, l)| l);
        for &(start, l) in &self.command {
            if t >= start {
                level = l;
            } else {
                break;
            }
        }
        level
    }
}

impl Integrand for MracTrajectory {
    fn state_dim(&self) -> usize {
        6
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.x1_init, 0.0, 0.0, 0.0, 0.0, 0.0]
    }

    fn derivative(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let (x1, x2, xm1, xm2, th1, th2) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        let r = self.r_level;
        let u = -self.a0 * x1 - self.a1 * x2 + self.a0 * r - (th1 * x1 + th2 * x2);
        dx[0] = x2;
        dx[1] = self.theta[0] * x1 + self.theta[1] * x2 + u;
        dx[2] = xm2;
        dx[3] = -self.a0 * xm1 - self.a1 * xm2 + self.a0 * r;

        // th_hat' = -G x (e'PB) + Gc sum_k x_k (delta_k - th_hat.x_k)
        let e_pb = self.pb[0] * (xm1 - x1) + self.pb[1] * (xm2 - x2);
        let mut cl = [0.0, 0.0];
        for &(xk, delta) in &self.stack {
            let residual = delta - (th1 * xk[0] + th2 * xk[1]);
            cl[0] += xk[0] * residual;
            cl[1] += xk[1] * residual;
        }
        dx[4] = -self.adapt_gain * x1 * e_pb + self.learn_gain * cl[0];
        dx[5] = -self.adapt_gain * x2 * e_pb + self.learn_gain * cl[1];
    }

    fn post_step(&mut self, t: f64, x: &mut [f64]) {
        self.r_level = self.command_level(t);
        // the 1e-9 slack absorbs accumulated timestamp rounding
        while t >= self.next_check - 1e-9 {
            self.next_check += self.stack_period;
            if self.stack.len() >= self.stack_capacity {
                continue;
            }
            let xp = [x[0], x[1]];
            let far_enough = match self.stack.last() {
                Some(&(last, _)) => {
                    let d = ((xp[0] - last[0]).powi(2) + (xp[1] - last[1]).powi(2)).sqrt();
                    d >= self.stack_spacing
                }
                None => (xp[0] * xp[0] + xp[1] * xp[1]).sqrt() >= self.stack_spacing,
            };
            if far_enough {
                let delta = self.theta[0] * xp[0] + self.theta[1] * xp[1];
                self.stack.push((xp, delta));
            }
        }
    }

    fn outputs(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = x[0];
        out[1] = x[1];
        out[2] = x[2];
        out[3] = x[3];
        out[4] = x[2] - x[0];
    }
}
