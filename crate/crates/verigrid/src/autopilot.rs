//! Heading-hold autopilot benchmark: linear lateral-directional airframe
//! dynamics under a bank-angle cascade (proportional heading loop outside a
//! rate-damped aileron loop), plus an altitude-excursion channel coupled to
//! bank angle. The turn kinematics integrate heading themselves, so the
//! cascade holds heading with zero steady-state error and needs no integral
//! trim; every feedback path is smooth, which the step-size convergence
//! checks rely on.
//!
//! The airframe constants are the classic lateral-directional stability
//! derivatives of a single-engine general-aviation aircraft in cruise
//! (speeds in ft/s, angles in rad). The uncertain parameters are the initial
//! Euler angles, in degrees, and the longitudinal inertia:
//!
//!   theta = [roll(0), pitch(0), heading(0), Iyy]
//!
//! Pitch enters through the initial vertical speed (an aircraft trimmed
//! nose-high starts climbing); inertia scales how much corrective vertical
//! acceleration the altitude hold can actually deliver. The requirement
//! channel `x` is the altitude excursion in feet from the initial altitude.

use crate::grid::{ParamBox, ParamPoint};
use crate::sim::{Integrand, SimConfig, System};

const DEG: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone)]
pub struct AutopilotConfig {
    /// Trim airspeed, ft/s.
    pub airspeed: f64,
    /// Gravity, ft/s^2.
    pub gravity: f64,
    /// Commanded heading, degrees.
    pub heading_ref_deg: f64,
    /// Pitch attitude that trims vertical speed to zero, degrees.
    pub pitch_trim_deg: f64,
    /// Bank command per radian of heading error.
    pub heading_gain: f64,
    /// Bank command saturation, degrees.
    pub bank_limit_deg: f64,
    /// Aileron loop: deflection per radian of bank error and per rad/s of
    /// roll rate; saturation in degrees.
    pub bank_gain: f64,
    pub roll_rate_gain: f64,
    pub aileron_limit_deg: f64,
    /// Yaw damper gain and rudder saturation, degrees.
    pub yaw_damper_gain: f64,
    pub rudder_limit_deg: f64,
    /// Altitude hold: commanded vertical acceleration per foot of excursion
    /// and per ft/s of vertical speed, saturated at `climb_authority`
    /// (ft/s^2) before the inertia scaling is applied.
    pub altitude_gain: f64,
    pub vertical_speed_gain: f64,
    pub climb_authority: f64,
    /// Inertia at which the altitude loop delivers its nominal authority.
    pub inertia_nominal: f64,
}

impl Default for AutopilotConfig {
    fn default() -> Self {
        Self {
            airspeed: 176.0,
            gravity: 32.17,
            heading_ref_deg: 112.0,
            pitch_trim_deg: 11.5,
            heading_gain: 2.0,
            bank_limit_deg: 30.0,
            bank_gain: 4.0,
            roll_rate_gain: 1.2,
            aileron_limit_deg: 25.0,
            yaw_damper_gain: 1.5,
            rudder_limit_deg: 20.0,
            altitude_gain: 0.25,
            vertical_speed_gain: 0.7,
            climb_authority: 6.0,
            inertia_nominal: 6930.0,
        }
    }
}

pub struct Autopilot {
    cfg: AutopilotConfig,
    bounds: ParamBox,
}

impl Autopilot {
    pub fn new() -> Self {
        Self::with_config(AutopilotConfig::default())
    }

    pub fn with_config(cfg: AutopilotConfig) -> Self {
        Self {
            cfg,
            bounds: ParamBox::new(vec![
                (-60.0, 60.0),
                (4.0, 19.0),
                (75.0, 145.0),
                (5430.0, 8430.0),
            ])
            .unwrap(),
        }
    }

    pub fn config(&self) -> &AutopilotConfig {
        &self.cfg
    }
}

impl Default for Autopilot {
    fn default() -> Self {
        Self::new()
    }
}

impl System for Autopilot {
    fn name(&self) -> &'static str {
        "autopilot"
    }

    fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    fn channels(&self) -> &'static [&'static str] {
        // altitude excursion (ft), vertical speed (ft/s), bank and wrapped
        // heading error (deg)
        &["x", "vh", "phi", "psi_err"]
    }

    fn default_sim_config(&self) -> SimConfig {
        SimConfig {
            t_final: 50.0,
            dt: 0.01,
        }
    }

    fn integrand(&self, theta: &ParamPoint) -> Box<dyn Integrand> {
        let cfg = self.cfg.clone();
        let vh0 = cfg.airspeed * ((theta[1] - cfg.pitch_trim_deg) * DEG).sin();
        Box::new(AutopilotTrajectory {
            phi0: theta[0] * DEG,
            psi0: theta[2] * DEG,
            vh0,
            authority_scale: cfg.inertia_nominal / theta[3],
            psi_ref: cfg.heading_ref_deg * DEG,
            bank_limit: cfg.bank_limit_deg * DEG,
            aileron_limit: cfg.aileron_limit_deg * DEG,
            rudder_limit: cfg.rudder_limit_deg * DEG,
            cfg,
        })
    }
}

fn wrap_pi(angle: f64) -> f64 {
    use std::f64::consts::PI;
    (angle + PI).rem_euclid(2.0 * PI) - PI
}

/// Smooth saturation: slope 1 near zero, asymptote at the limit. Keeps the
/// closed-loop right-hand side differentiable, so the integrator holds its
/// design order through actuator-limit episodes.
fn soft_limit(v: f64, limit: f64) -> f64 {
    limit * (v / limit).tanh()
}

/// State layout: [beta, p, r, phi, psi, h, vh].
struct AutopilotTrajectory {
    cfg: AutopilotConfig,
    phi0: f64,
    psi0: f64,
    vh0: f64,
    authority_scale: f64,
    psi_ref: f64,
    bank_limit: f64,
    aileron_limit: f64,
    rudder_limit: f64,
}

impl AutopilotTrajectory {
    fn heading_error(&self, psi: f64) -> f64 {
        wrap_pi(self.psi_ref - psi)
    }
}

impl Integrand for AutopilotTrajectory {
    fn state_dim(&self) -> usize {
        7
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0, 0.0, 0.0, self.phi0, self.psi0, 0.0, self.vh0]
    }

    fn derivative(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let c = &self.cfg;
        let (beta, p, r, phi, psi, h, vh) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
        let g_v = c.gravity / c.airspeed;

        let err = self.heading_error(psi);
        let phi_cmd = soft_limit(c.heading_gain * err, self.bank_limit);
        let aileron = soft_limit(
            c.bank_gain * (phi_cmd - phi) - c.roll_rate_gain * p,
            self.aileron_limit,
        );
        let rudder = soft_limit(c.yaw_damper_gain * r, self.rudder_limit);

        dx[0] = -0.254 * beta - r + g_v * phi + 0.0708 * rudder;
        dx[1] = -15.982 * beta - 8.402 * p + 2.193 * r + 28.984 * aileron + 2.548 * rudder;
        dx[2] = 4.495 * beta - 0.3498 * p - 0.7605 * r - 0.2218 * aileron - 4.597 * rudder;
        dx[3] = p;
        // coordinated-turn kinematics; the clamp only guards tan() and
        // stays inactive for every reachable bank angle
        dx[4] = g_v * phi.clamp(-75.0 * DEG, 75.0 * DEG).tan();
        let lift_loss = -c.gravity * (1.0 - phi.cos());
        let correction = soft_limit(
            -c.altitude_gain * h - c.vertical_speed_gain * vh,
            c.climb_authority,
        ) * self.authority_scale;
        dx[5] = vh;
        dx[6] = lift_loss + correction;
    }

    fn outputs(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = x[5];
        out[1] = x[6];
        out[2] = x[3] / DEG;
        out[3] = self.heading_error(x[4]) / DEG;
    }
}
