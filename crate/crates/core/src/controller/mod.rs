//! Cascaded PID controller with twelve entry points.
//!
//! | mode | name                      | values                 | next |
//! |------|---------------------------|------------------------|------|
//! | 0    | NED-Pos Yaw               | pn, pe, pd, ψ          | 3    |
//! | 1    | NE-Vel D-Pos YawR         | vn, ve, pd, r          | 2    |
//! | 2    | FRD-Accel YawR            | ax, ay, az, r          | 6    |
//! | 3    | NED-Vel YawR              | vn, ve, vd, r          | 2    |
//! | 4    | NE-Pos D-Vel Yaw          | pn, pe, vd, ψ          | 3    |
//! | 5    | Roll Pitch Yaw Throttle   | φ, θ, ψ, δt            | 6    |
//! | 6    | Roll Pitch YawR Throttle  | φ, θ, r, δt            | firmware angle |
//! | 7    | RollR PitchR YawR Throttle| p, q, r, δt            | firmware rate |
//! | 8    | Pass-through              | Tz, Qx, Qy, Qz         | firmware pass-through |
//! | 9    | Roll Pitch Yaw Thrust     | φ, θ, ψ, T             | 10   |
//! | 10   | Roll Pitch YawR Thrust    | φ, θ, r, T             | 11   |
//! | 11   | RollR PitchR YawR Thrust  | p, q, r, T             | 8    |
//!
//! Mode 1 closes its down-position error through a down-velocity loop before
//! producing accelerations. Accelerations from the velocity loop are NED and
//! are rotated into the vehicle-1 frame before mode 2.

mod pid;

pub use pid::{Pid, PidGains};

use serde::{Deserialize, Serialize};

use crate::math::{rot_z, wrap_angle, Vec3, GRAVITY};
use crate::messages::StateEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    NedPosYaw,
    NeVelDPosYawRate,
    FrdAccelYawRate,
    NedVelYawRate,
    NePosDVelYaw,
    RollPitchYawThrottle,
    RollPitchYawRateThrottle,
    RatesThrottle,
    PassThrough,
    RollPitchYawThrust,
    RollPitchYawRateThrust,
    RatesThrust,
}

impl Mode {
    pub const ALL: [Mode; 12] = [
        Mode::NedPosYaw,
        Mode::NeVelDPosYawRate,
        Mode::FrdAccelYawRate,
        Mode::NedVelYawRate,
        Mode::NePosDVelYaw,
        Mode::RollPitchYawThrottle,
        Mode::RollPitchYawRateThrottle,
        Mode::RatesThrottle,
        Mode::PassThrough,
        Mode::RollPitchYawThrust,
        Mode::RollPitchYawRateThrust,
        Mode::RatesThrust,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&m| m == self).expect("listed")
    }

    pub fn from_index(i: i64) -> Option<Mode> {
        usize::try_from(i).ok().and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::NedPosYaw => "NED-Pos Yaw",
            Mode::NeVelDPosYawRate => "NE-Vel D-Pos YawR",
            Mode::FrdAccelYawRate => "FRD-Accel YawR",
            Mode::NedVelYawRate => "NED-Vel YawR",
            Mode::NePosDVelYaw => "NE-Pos D-Vel Yaw",
            Mode::RollPitchYawThrottle => "Roll Pitch Yaw Throttle",
            Mode::RollPitchYawRateThrottle => "Roll Pitch YawR Throttle",
            Mode::RatesThrottle => "RollR PitchR YawR Throttle",
            Mode::PassThrough => "Pass-through",
            Mode::RollPitchYawThrust => "Roll Pitch Yaw Thrust",
            Mode::RollPitchYawRateThrust => "Roll Pitch YawR Thrust",
            Mode::RatesThrust => "RollR PitchR YawR Thrust",
        }
    }

    /// Firmware command kind this entry point ends in.
    pub fn terminal_kind(self) -> FirmwareKind {
        match self.index() {
            0..=6 => FirmwareKind::Angle,
            7 => FirmwareKind::Rate,
            _ => FirmwareKind::PassThrough,
        }
    }
}

/// A setpoint for one entry point. Value meaning depends on the mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub stamp: f64,
    pub mode: Mode,
    pub values: [f64; 4],
}

impl ControlCommand {
    pub fn new(stamp: f64, mode: Mode, values: [f64; 4]) -> Self {
        Self { stamp, mode, values }
    }

    /// Build from a raw integer mode.
    pub fn from_raw(stamp: f64, mode: i64, values: [f64; 4]) -> Result<Self, ControllerError> {
        let mode = Mode::from_index(mode).ok_or(ControllerError::UnknownMode(mode))?;
        Ok(Self { stamp, mode, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FirmwareKind {
    Angle,
    Rate,
    PassThrough,
}

impl FirmwareKind {
    pub fn code(self) -> f64 {
        match self {
            FirmwareKind::Angle => 0.0,
            FirmwareKind::Rate => 1.0,
            FirmwareKind::PassThrough => 2.0,
        }
    }

    pub fn from_code(c: f64) -> Option<Self> {
        match c {
            c if c == 0.0 => Some(FirmwareKind::Angle),
            c if c == 1.0 => Some(FirmwareKind::Rate),
            c if c == 2.0 => Some(FirmwareKind::PassThrough),
            _ => None,
        }
    }
}

/// The ten-element firmware command vector.
///
/// angle: `[0, 0, δt, φ, θ, r, 0, 0, 0, 0]`,
/// rate: `[0, 0, δt, p, q, r, 0, 0, 0, 0]`,
/// pass-through: `[0, 0, Tz, Qx, Qy, Qz, 0, 0, 0, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmwareCommand {
    pub stamp: f64,
    pub kind: FirmwareKind,
    pub u: [f64; 10],
}

impl FirmwareCommand {
    fn with(stamp: f64, kind: FirmwareKind, first: f64, a: f64, b: f64, c: f64) -> Self {
        let mut u = [0.0; 10];
        u[2] = first;
        u[3] = a;
        u[4] = b;
        u[5] = c;
        Self { stamp, kind, u }
    }

    pub fn angle(stamp: f64, roll: f64, pitch: f64, yaw_rate: f64, throttle: f64) -> Self {
        Self::with(stamp, FirmwareKind::Angle, throttle, roll, pitch, yaw_rate)
    }

    pub fn rate(stamp: f64, p: f64, q: f64, r: f64, throttle: f64) -> Self {
        Self::with(stamp, FirmwareKind::Rate, throttle, p, q, r)
    }

    pub fn pass_through(stamp: f64, thrust: f64, qx: f64, qy: f64, qz: f64) -> Self {
        Self::with(stamp, FirmwareKind::PassThrough, thrust, qx, qy, qz)
    }

    /// Throttle or thrust (slot 3).
    pub fn collective(&self) -> f64 {
        self.u[2]
    }

    /// Slots 4 to 6.
    pub fn axes(&self) -> Vec3 {
        Vec3::new(self.u[3], self.u[4], self.u[5])
    }

    /// True when every slot outside 3..=6 is exactly zero.
    pub fn layout_ok(&self) -> bool {
        [0usize, 1, 6, 7, 8, 9].iter().all(|&i| self.u[i] == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error("unknown controller mode {0}")]
    UnknownMode(i64),
    #[error("non-positive time step {0}")]
    BadTimeStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerWarning {
    /// Commanded vertical specific force was not positive.
    NonPositiveLift,
    /// No estimate, or the latest is older than the stale threshold.
    StaleEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSet {
    /// Position error to velocity (N, E, D). P only by default.
    pub position: [PidGains; 3],
    /// Velocity error to NED acceleration (N, E, D).
    pub velocity: [PidGains; 3],
    /// Heading error to yaw rate.
    pub yaw: PidGains,
    /// Roll and pitch error to body rate.
    pub attitude: [PidGains; 2],
    /// Body-rate error to torque (x, y, z), N·m.
    pub rate: [PidGains; 3],
    /// Maximum commanded roll and pitch, deg.
    pub tilt_limit_deg: f64,
    /// Maximum commanded body rate, deg/s.
    pub rate_limit_deg: f64,
    /// Estimates older than this trigger the failsafe, s.
    pub stale_timeout: f64,
    /// Throttle held level in failsafe; below hover so the vehicle descends.
    pub failsafe_throttle: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        let rate_limit = 220f64.to_radians();
        let vel = PidGains {
            kp: 2.0,
            ki: 0.3,
            kd: 0.0,
            output_limit: 4.0,
            integrator_limit: 2.0,
        };
        let att = PidGains::p(6.0, rate_limit);
        let rate = |kp: f64, limit: f64| PidGains {
            kp,
            ki: 0.05,
            kd: 0.0,
            output_limit: limit,
            integrator_limit: 0.5,
        };
        Self {
            position: [PidGains::p(1.0, 3.0), PidGains::p(1.0, 3.0), PidGains::p(1.0, 1.5)],
            velocity: [vel, vel, vel],
            yaw: PidGains::p(2.0, rate_limit),
            attitude: [att, att],
            rate: [rate(0.6, 2.0), rate(0.6, 2.0), rate(0.4, 0.3)],
            tilt_limit_deg: 30.0,
            rate_limit_deg: 220.0,
            stale_timeout: 0.5,
            failsafe_throttle: 0.25,
        }
    }
}

/// Mass and maximum collective thrust the controller plans against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleLimits {
    pub mass: f64,
    /// N.
    pub max_thrust: f64,
}

/// δt = clamp(T / T_max, 0, 1).
pub fn thrust_to_throttle(thrust: f64, max_thrust: f64) -> f64 {
    (thrust / max_thrust).clamp(0.0, 1.0)
}

/// Roll, pitch, yaw rate and throttle from vehicle-1 accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeThrottle {
    pub roll: f64,
    pub pitch: f64,
    pub yaw_rate: f64,
    pub throttle: f64,
}

/// Map vehicle-1 accelerations to tilt and throttle.
///
/// θ = −atan(ax / g_eff), φ = atan(ay / g_eff), g_eff = g − az, and
/// δt = m·g_eff / (T_max cos φ̂ cos θ̂) using the current attitude estimate.
pub fn accel_to_attitude(
    a_v1: &Vec3,
    yaw_rate: f64,
    roll_est: f64,
    pitch_est: f64,
    limits: VehicleLimits,
    tilt_limit: f64,
) -> (AttitudeThrottle, Option<ControllerWarning>) {
    let g_eff = GRAVITY - a_v1.z;
    let tilt = |x: f64| x.clamp(-tilt_limit, tilt_limit);
    if g_eff <= 0.0 {
        let out = AttitudeThrottle {
            roll: tilt_limit * a_v1.y.signum() * (a_v1.y != 0.0) as u8 as f64,
            pitch: -tilt_limit * a_v1.x.signum() * (a_v1.x != 0.0) as u8 as f64,
            yaw_rate,
            throttle: 0.0,
        };
        return (out, Some(ControllerWarning::NonPositiveLift));
    }
    let pitch = tilt(-(a_v1.x / g_eff).atan());
    let roll = tilt((a_v1.y / g_eff).atan());
    let tilt_cos = (roll_est.cos() * pitch_est.cos()).max(0.5);
    let throttle = thrust_to_throttle(limits.mass * g_eff / tilt_cos, limits.max_thrust);
    (
        AttitudeThrottle {
            roll,
            pitch,
            yaw_rate,
            throttle,
        },
        None,
    )
}

/// Result of routing one command down the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub firmware: FirmwareCommand,
    /// Entry points visited, starting with the command's own mode.
    pub hops: Vec<Mode>,
    pub warnings: Vec<ControllerWarning>,
    pub failsafe: bool,
}

/// The cascade and all of its loop states.
#[derive(Debug, Clone)]
pub struct Cascade {
    gains: GainSet,
    limits: VehicleLimits,
    position: [Pid; 3],
    velocity: [Pid; 3],
    yaw: Pid,
    attitude: [Pid; 2],
    rate: [Pid; 3],
}

impl Cascade {
    pub fn new(gains: GainSet, limits: VehicleLimits) -> Self {
        let mut c = Self {
            gains: gains.clone(),
            limits,
            position: [Pid::default(); 3],
            velocity: [Pid::default(); 3],
            yaw: Pid::default(),
            attitude: [Pid::default(); 2],
            rate: [Pid::default(); 3],
        };
        c.apply_gains();
        c
    }

    fn apply_gains(&mut self) {
        let g = &self.gains;
        let rate_limit = g.rate_limit_deg.to_radians();
        for i in 0..3 {
            self.position[i].gains = g.position[i];
            self.velocity[i].gains = g.velocity[i];
            self.rate[i].gains = g.rate[i];
        }
        for i in 0..2 {
            let mut a = g.attitude[i];
            a.output_limit = a.output_limit.min(rate_limit);
            self.attitude[i].gains = a;
        }
        let mut y = g.yaw;
        y.output_limit = y.output_limit.min(rate_limit);
        self.yaw.gains = y;
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn limits(&self) -> VehicleLimits {
        self.limits
    }

    pub fn reset(&mut self) {
        for p in self
            .position
            .iter_mut()
            .chain(self.velocity.iter_mut())
            .chain(self.attitude.iter_mut())
            .chain(self.rate.iter_mut())
        {
            p.reset();
        }
        self.yaw.reset();
    }

    /// Largest magnitude over all integrator states.
    pub fn max_integrator(&self) -> f64 {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .chain(self.attitude.iter())
            .chain(self.rate.iter())
            .chain(std::iter::once(&self.yaw))
            .map(|p| p.integrator().abs())
            .fold(0.0, f64::max)
    }

    /// Set one gain by key: `velocity.0.kp`, `yaw.kp`, `tilt_limit_deg`, ...
    /// Returns false for an unknown key.
    pub fn set_param(&mut self, key: &str, value: f64) -> bool {
        let parts: Vec<&str> = key.split('.').collect();
        let field = |g: &mut PidGains, name: &str| -> bool {
            match name {
                "kp" => g.kp = value,
                "ki" => g.ki = value,
                "kd" => g.kd = value,
                "output_limit" => g.output_limit = value,
                "integrator_limit" => g.integrator_limit = value,
                _ => return false,
            }
            true
        };
        let g = &mut self.gains;
        let ok = match parts.as_slice() {
            ["tilt_limit_deg"] => {
                g.tilt_limit_deg = value;
                true
            }
            ["rate_limit_deg"] => {
                g.rate_limit_deg = value;
                true
            }
            ["stale_timeout"] => {
                g.stale_timeout = value;
                true
            }
            ["failsafe_throttle"] => {
                g.failsafe_throttle = value;
                true
            }
            ["yaw", f] => field(&mut g.yaw, f),
            [group, idx, f] => {
                let Ok(i) = idx.parse::<usize>() else {
                    return false;
                };
                match *group {
                    "position" if i < 3 => field(&mut g.position[i], f),
                    "velocity" if i < 3 => field(&mut g.velocity[i], f),
                    "attitude" if i < 2 => field(&mut g.attitude[i], f),
                    "rate" if i < 3 => field(&mut g.rate[i], f),
                    _ => false,
                }
            }
            _ => false,
        };
        if ok {
            self.apply_gains();
        }
        ok
    }

    fn failsafe(&self, stamp: f64, mode: Mode) -> Routed {
        Routed {
            firmware: FirmwareCommand::angle(stamp, 0.0, 0.0, 0.0, self.gains.failsafe_throttle),
            hops: vec![mode],
            warnings: vec![ControllerWarning::StaleEstimate],
            failsafe: true,
        }
    }

    fn yaw_rate_to(&mut self, heading: f64, est: &StateEstimate, dt: f64) -> f64 {
        let err = wrap_angle(heading - est.euler.yaw);
        self.yaw.update(err, est.euler.yaw, Some(0.0), dt)
    }

    fn velocity_to_accel(&mut self, v_cmd: &Vec3, est: &StateEstimate, dt: f64) -> Vec3 {
        let v = est.velocity_ned();
        let mut a = Vec3::zeros();
        for i in 0..3 {
            a[i] = self.velocity[i].update(v_cmd[i] - v[i], v[i], None, dt);
        }
        // NED to vehicle-1: undo the heading only.
        rot_z(est.euler.yaw).transpose() * a
    }

    /// Body-rate setpoints from roll and pitch references.
    pub fn attitude_loop(&mut self, roll: f64, pitch: f64, est: &StateEstimate, dt: f64) -> (f64, f64) {
        let p = self.attitude[0].update(
            wrap_angle(roll - est.euler.roll),
            est.euler.roll,
            Some(est.body_rates.x),
            dt,
        );
        let q = self.attitude[1].update(
            wrap_angle(pitch - est.euler.pitch),
            est.euler.pitch,
            Some(est.body_rates.y),
            dt,
        );
        (p, q)
    }

    /// Torques from body-rate references.
    pub fn rate_loop(&mut self, rates: &Vec3, est: &StateEstimate, dt: f64) -> Vec3 {
        let w = est.body_rates;
        let mut tau = Vec3::zeros();
        for i in 0..3 {
            tau[i] = self.rate[i].update(rates[i] - w[i], w[i], None, dt);
        }
        tau
    }

    /// One cascade hop. Returns the next command or the firmware output.
    fn hop(
        &mut self,
        cmd: &ControlCommand,
        est: &StateEstimate,
        dt: f64,
        warnings: &mut Vec<ControllerWarning>,
    ) -> Result<ControlCommand, FirmwareCommand> {
        let [a, b, c, d] = cmd.values;
        let next = |mode, values| Ok(ControlCommand::new(cmd.stamp, mode, values));
        let p = est.position;
        match cmd.mode {
            Mode::NedPosYaw => {
                let vn = self.position[0].update(a - p.x, p.x, Some(0.0), dt);
                let ve = self.position[1].update(b - p.y, p.y, Some(0.0), dt);
                let vd = self.position[2].update(c - p.z, p.z, Some(0.0), dt);
                let r = self.yaw_rate_to(d, est, dt);
                next(Mode::NedVelYawRate, [vn, ve, vd, r])
            }
            Mode::NePosDVelYaw => {
                let vn = self.position[0].update(a - p.x, p.x, Some(0.0), dt);
                let ve = self.position[1].update(b - p.y, p.y, Some(0.0), dt);
                let r = self.yaw_rate_to(d, est, dt);
                next(Mode::NedVelYawRate, [vn, ve, c, r])
            }
            Mode::NeVelDPosYawRate => {
                let vd = self.position[2].update(c - p.z, p.z, Some(0.0), dt);
                let acc = self.velocity_to_accel(&Vec3::new(a, b, vd), est, dt);
                next(Mode::FrdAccelYawRate, [acc.x, acc.y, acc.z, d])
            }
            Mode::NedVelYawRate => {
                let acc = self.velocity_to_accel(&Vec3::new(a, b, c), est, dt);
                next(Mode::FrdAccelYawRate, [acc.x, acc.y, acc.z, d])
            }
            Mode::FrdAccelYawRate => {
                let (out, w) = accel_to_attitude(
                    &Vec3::new(a, b, c),
                    d,
                    est.euler.roll,
                    est.euler.pitch,
                    self.limits,
                    self.gains.tilt_limit_deg.to_radians(),
                );
                warnings.extend(w);
                next(
                    Mode::RollPitchYawRateThrottle,
                    [out.roll, out.pitch, out.yaw_rate, out.throttle],
                )
            }
            Mode::RollPitchYawThrottle => {
                let r = self.yaw_rate_to(c, est, dt);
                next(Mode::RollPitchYawRateThrottle, [a, b, r, d])
            }
            Mode::RollPitchYawRateThrottle => {
                let tilt = self.gains.tilt_limit_deg.to_radians();
                Err(FirmwareCommand::angle(
                    cmd.stamp,
                    a.clamp(-tilt, tilt),
                    b.clamp(-tilt, tilt),
                    c,
                    d.clamp(0.0, 1.0),
                ))
            }
            Mode::RatesThrottle => Err(FirmwareCommand::rate(cmd.stamp, a, b, c, d.clamp(0.0, 1.0))),
            Mode::PassThrough => Err(FirmwareCommand::pass_through(cmd.stamp, a, b, c, d)),
            Mode::RollPitchYawThrust => {
                let r = self.yaw_rate_to(c, est, dt);
                next(Mode::RollPitchYawRateThrust, [a, b, r, d])
            }
            Mode::RollPitchYawRateThrust => {
                let tilt = self.gains.tilt_limit_deg.to_radians();
                let (p_cmd, q_cmd) =
                    self.attitude_loop(a.clamp(-tilt, tilt), b.clamp(-tilt, tilt), est, dt);
                next(Mode::RatesThrust, [p_cmd, q_cmd, c, d])
            }
            Mode::RatesThrust => {
                let tau = self.rate_loop(&Vec3::new(a, b, c), est, dt);
                let thrust = d.clamp(0.0, self.limits.max_thrust);
                next(Mode::PassThrough, [thrust, tau.x, tau.y, tau.z])
            }
        }
    }

    /// Route a command to a firmware command.
    ///
    /// `est` is the most recent estimate, if any; `now` is the current time.
    pub fn route(
        &mut self,
        cmd: &ControlCommand,
        est: Option<&StateEstimate>,
        now: f64,
        dt: f64,
    ) -> Result<Routed, ControllerError> {
        if !(dt > 0.0) {
            return Err(ControllerError::BadTimeStep(dt));
        }
        let est = match est {
            Some(e) if now - e.stamp <= self.gains.stale_timeout => e,
            _ => return Ok(self.failsafe(cmd.stamp, cmd.mode)),
        };
        let mut hops = vec![cmd.mode];
        let mut warnings = vec![];
        let mut current = *cmd;
        loop {
            match self.hop(&current, est, dt, &mut warnings) {
                Ok(next) => {
                    hops.push(next.mode);
                    current = next;
                }
                Err(firmware) => {
                    return Ok(Routed {
                        firmware,
                        hops,
                        warnings,
                        failsafe: false,
                    })
                }
            }
        }
    }
}
