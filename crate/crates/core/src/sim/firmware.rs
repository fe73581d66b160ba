//! Stand-in for the flight controller's angle and rate loops.
//!
//! Runs at the physics rate on truth attitude and body rates, the way the
//! real firmware runs on its own IMU.

use serde::{Deserialize, Serialize};

use super::vehicle::{TruthState, Wrench};
use crate::controller::{FirmwareCommand, FirmwareKind, Pid, PidGains};
use crate::math::{wrap_angle, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FirmwareGains {
    /// Roll and pitch angle error to body rate, 1/s.
    pub angle_kp: [f64; 2],
    /// Body-rate loops (x, y, z) to torque.
    pub rate: [PidGains; 3],
    /// Body-rate setpoint limit, deg/s.
    pub rate_limit_deg: f64,
}

impl Default for FirmwareGains {
    fn default() -> Self {
        let rate = |kp: f64, limit: f64| PidGains {
            kp,
            ki: 0.1,
            kd: 0.0,
            output_limit: limit,
            integrator_limit: 0.5,
        };
        Self {
            angle_kp: [8.0, 8.0],
            rate: [rate(0.8, 3.0), rate(0.8, 3.0), rate(0.5, 0.4)],
            rate_limit_deg: 220.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FirmwareEmulator {
    gains: FirmwareGains,
    max_thrust: f64,
    rate: [Pid; 3],
}

impl FirmwareEmulator {
    pub fn new(gains: FirmwareGains, max_thrust: f64) -> Self {
        let rate = [
            Pid::new(gains.rate[0]),
            Pid::new(gains.rate[1]),
            Pid::new(gains.rate[2]),
        ];
        Self {
            gains,
            max_thrust,
            rate,
        }
    }

    pub fn reset(&mut self) {
        for p in &mut self.rate {
            p.reset();
        }
    }

    fn rate_loop(&mut self, cmd: &Vec3, s: &TruthState, dt: f64) -> Vec3 {
        let mut tau = Vec3::zeros();
        for i in 0..3 {
            let w = s.rates[i];
            tau[i] = self.rate[i].update(cmd[i] - w, w, None, dt);
        }
        tau
    }

    /// Wrench requested by a firmware command given the current truth state.
    pub fn wrench(&mut self, cmd: &FirmwareCommand, s: &TruthState, dt: f64) -> Wrench {
        let limit = self.gains.rate_limit_deg.to_radians();
        let u = &cmd.u;
        match cmd.kind {
            FirmwareKind::PassThrough => Wrench {
                thrust: u[2],
                torque: Vec3::new(u[3], u[4], u[5]),
            },
            FirmwareKind::Rate => {
                let rates = Vec3::new(u[3], u[4], u[5]).map(|r| r.clamp(-limit, limit));
                Wrench {
                    thrust: u[2].clamp(0.0, 1.0) * self.max_thrust,
                    torque: self.rate_loop(&rates, s, dt),
                }
            }
            FirmwareKind::Angle => {
                let p = self.gains.angle_kp[0] * wrap_angle(u[3] - s.euler.roll);
                let q = self.gains.angle_kp[1] * wrap_angle(u[4] - s.euler.pitch);
                let rates = Vec3::new(p, q, u[5]).map(|r| r.clamp(-limit, limit));
                Wrench {
                    thrust: u[2].clamp(0.0, 1.0) * self.max_thrust,
                    torque: self.rate_loop(&rates, s, dt),
                }
            }
        }
    }
}
