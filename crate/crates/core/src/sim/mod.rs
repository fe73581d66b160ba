//! Deterministic quadrotor simulator: truth dynamics, firmware emulation,
//! mixer and synthetic sensors.

pub mod firmware;
pub mod mixer;
pub mod sensors;
pub mod vehicle;

use serde::{Deserialize, Serialize};

pub use firmware::{FirmwareEmulator, FirmwareGains};
pub use mixer::{MixOutput, Mixer};
pub use sensors::{SensorConfig, SensorFrame, SensorSuite};
pub use vehicle::{derivative, rk4_step, specific_force, TruthState, VehicleParams, Wrench};

use crate::clock::{tick_time, BadRate, RateGate};
use crate::controller::FirmwareCommand;
use crate::math::{EulerAngles, GimbalError, Vec3, DEFAULT_GIMBAL_GUARD, GRAVITY};
use crate::messages::TruthSample;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("simulator: {0}")]
    Gimbal(#[from] GimbalError),
    #[error("simulator state became non-finite at t = {0} s")]
    NonFinite(f64),
    #[error(transparent)]
    Rate(#[from] BadRate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConditions {
    /// NED, m. A down component of zero or more puts the vehicle on the ground.
    pub position: [f64; 3],
    pub yaw_deg: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            position: [0.0; 3],
            yaw_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub sensors: SensorConfig,
    pub firmware: FirmwareGains,
    pub initial: InitialConditions,
    /// Constant wind, NED m/s.
    pub wind: [f64; 3],
    /// Truth-state publication rate, Hz.
    pub truth_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            vehicle: VehicleParams::default(),
            sensors: SensorConfig::default(),
            firmware: FirmwareGains::default(),
            initial: InitialConditions::default(),
            wind: [0.0; 3],
            truth_rate: 100.0,
        }
    }
}

/// Everything the simulator emits on one physics tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOutput {
    pub sensors: SensorFrame,
    pub truth: Option<TruthSample>,
}

#[derive(Debug)]
pub struct Simulator {
    cfg: SimConfig,
    base_rate: f64,
    state: TruthState,
    grounded: bool,
    firmware: FirmwareEmulator,
    mixer: Mixer,
    sensors: SensorSuite,
    truth_gate: RateGate,
    command: Option<FirmwareCommand>,
    motors: [f64; 4],
    wrench: Wrench,
    tick: u64,
    saturations: u64,
}

impl Simulator {
    /// `base_rate` is the physics rate, Hz.
    pub fn new(cfg: SimConfig, base_rate: f64, seed: u64) -> Result<Self, SimError> {
        let p = cfg.initial.position;
        let state = TruthState {
            position: Vec3::new(p[0], p[1], p[2].min(0.0)),
            euler: EulerAngles::new(0.0, 0.0, crate::math::wrap_angle(cfg.initial.yaw_deg.to_radians())),
            ..Default::default()
        };
        Ok(Self {
            grounded: p[2] >= 0.0,
            firmware: FirmwareEmulator::new(cfg.firmware.clone(), cfg.vehicle.max_thrust()),
            mixer: Mixer::new(&cfg.vehicle),
            sensors: SensorSuite::new(cfg.sensors.clone(), base_rate, seed)?,
            truth_gate: RateGate::new(cfg.truth_rate, base_rate)?,
            base_rate,
            state,
            command: None,
            motors: [0.0; 4],
            wrench: Wrench::default(),
            tick: 0,
            saturations: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TruthState {
        &self.state
    }

    /// Overwrite the truth state, e.g. to start airborne.
    pub fn set_state(&mut self, s: TruthState) {
        self.state = s;
        self.grounded = false;
    }

    pub fn time(&self) -> f64 {
        tick_time(self.tick, self.base_rate)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn is_grounded(&self) -> bool {
        self.grounded
    }

    pub fn motors(&self) -> [f64; 4] {
        self.motors
    }

    /// Wrench applied over the most recent step.
    pub fn wrench(&self) -> Wrench {
        self.wrench
    }

    /// Number of steps on which the mixer saturated.
    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    pub fn sensor_density(&self) -> f64 {
        self.sensors.density()
    }

    pub fn set_command(&mut self, cmd: FirmwareCommand) {
        self.command = Some(cmd);
    }

    fn wind(&self) -> Vec3 {
        Vec3::from(self.cfg.wind)
    }

    /// The truth message for the current state.
    pub fn truth_sample(&self) -> TruthSample {
        TruthSample {
            stamp: self.time(),
            position: self.state.position,
            velocity_body: self.state.velocity,
            euler: self.state.euler,
            gyro_bias: Vec3::from(self.cfg.sensors.gyro_bias),
            body_rates: self.state.rates,
        }
    }

    /// Emit this tick's sensor and truth messages, then integrate one physics
    /// step under the latest firmware command.
    pub fn step(&mut self) -> Result<SimOutput, SimError> {
        let dt = 1.0 / self.base_rate;
        let t = self.time();
        let p = &self.cfg.vehicle;

        let requested = match &self.command {
            Some(cmd) => self.firmware.wrench(cmd, &self.state, dt),
            None => Wrench::default(),
        };
        let mix = self.mixer.mix(&requested);
        if mix.saturated {
            self.saturations += 1;
        }
        let tau = p.motor_time_constant;
        for (m, target) in self.motors.iter_mut().zip(mix.thrusts) {
            *m = if tau > 0.0 {
                *m + (target - *m) * (1.0 - (-dt / tau).exp())
            } else {
                target
            };
        }
        self.wrench = self.mixer.forward(&self.motors);
        let wind = self.wind();

        if self.grounded && self.wrench.thrust > p.mass * GRAVITY {
            self.grounded = false;
            self.firmware.reset();
        }
        let force = if self.grounded {
            // The ground carries the weight.
            crate::math::rotation_body_to_inertial(&self.state.euler).transpose()
                * Vec3::new(0.0, 0.0, -GRAVITY)
        } else {
            specific_force(&self.state, &self.wrench, &wind, p)
        };

        let mut out = SimOutput {
            sensors: self.sensors.sample(self.tick, t, &self.state, &force),
            truth: None,
        };
        if self.truth_gate.due(self.tick) {
            out.truth = Some(self.truth_sample());
        }

        if !self.grounded {
            let next = rk4_step(&self.state, &self.wrench, &wind, p, dt, DEFAULT_GIMBAL_GUARD)?;
            if !next.is_finite() {
                return Err(SimError::NonFinite(t));
            }
            self.state = next;
            if self.state.position.z >= 0.0 && self.state.velocity_ned().z >= 0.0 {
                self.grounded = true;
                self.state.position.z = 0.0;
                self.state.velocity = Vec3::zeros();
                self.state.rates = Vec3::zeros();
                self.state.euler = EulerAngles::new(0.0, 0.0, self.state.euler.yaw);
            }
        }
        self.tick += 1;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stays_on_the_pad_without_commands() {
        let mut sim = Simulator::new(SimConfig::default(), 1000.0, 1).unwrap();
        for _ in 0..500 {
            sim.step().unwrap();
        }
        assert!(sim.is_grounded());
        assert_eq!(sim.state().position, Vec3::zeros());
    }

    #[test]
    fn hover_pass_through_holds_position() {
        let cfg = SimConfig::default();
        let mg = cfg.vehicle.mass * GRAVITY;
        let mut sim = Simulator::new(cfg, 1000.0, 1).unwrap();
        let start = TruthState {
            position: Vec3::new(0.0, 0.0, -5.0),
            ..Default::default()
        };
        sim.set_state(start);
        sim.set_command(FirmwareCommand::pass_through(0.0, mg, 0.0, 0.0, 0.0));
        for _ in 0..10_000 {
            sim.step().unwrap();
        }
        assert!((sim.state().position - start.position).norm() < 1e-3);
    }

    #[test]
    fn takes_off_when_thrust_exceeds_weight() {
        let mut sim = Simulator::new(SimConfig::default(), 1000.0, 1).unwrap();
        sim.set_command(FirmwareCommand::angle(0.0, 0.0, 0.0, 0.0, 0.5));
        for _ in 0..1000 {
            sim.step().unwrap();
        }
        assert!(!sim.is_grounded());
        assert!(sim.state().position.z < -1.0);
    }

    #[test]
    fn truth_is_published_at_its_rate() {
        let mut sim = Simulator::new(SimConfig::default(), 1000.0, 1).unwrap();
        let n = (0..1000).filter(|_| sim.step().unwrap().truth.is_some()).count();
        assert_eq!(n, 100);
    }
}
