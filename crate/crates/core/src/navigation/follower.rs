use serde::{Deserialize, Serialize};

use super::TrajectorySetpoint;
use crate::controller::{ControlCommand, Mode};
use crate::math::{wrap_angle, Vec3, GRAVITY};
use crate::messages::StateEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FollowerGains {
    /// Position error gain (N, E, D), 1/s².
    pub kp: [f64; 3],
    /// Velocity error gain, 1/s.
    pub kd: [f64; 3],
    /// Integrated position error gain, 1/s³.
    pub ki: [f64; 3],
    /// Clamp on each integrator component, m·s.
    pub integral_limit: f64,
    /// Heading error to yaw-rate gain, 1/s.
    pub yaw_gain: f64,
    /// Below this specific-force magnitude the command counts as free fall, m/s².
    pub min_specific_force: f64,
    /// Thrust commanded while in free fall, N.
    pub min_thrust: f64,
}

impl Default for FollowerGains {
    fn default() -> Self {
        Self {
            kp: [1.2, 1.2, 2.0],
            kd: [2.0, 2.0, 2.5],
            ki: [0.05, 0.05, 0.2],
            integral_limit: 2.0,
            yaw_gain: 2.0,
            min_specific_force: 0.5,
            min_thrust: 0.5,
        }
    }
}

/// Roll, pitch, yaw rate and collective thrust references.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AngleThrustSetpoint {
    pub stamp: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw_rate: f64,
    /// Newtons.
    pub thrust: f64,
}

impl AngleThrustSetpoint {
    /// Entry-point command carrying this setpoint to the controller.
    pub fn to_command(&self) -> ControlCommand {
        ControlCommand {
            stamp: self.stamp,
            mode: Mode::RollPitchYawRateThrust,
            values: [self.roll, self.pitch, self.yaw_rate, self.thrust],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowerWarning {
    /// Commanded specific force nearly zero; previous attitude held.
    FreeFall,
}

/// Attitude and thrust from a commanded specific force and heading.
///
/// Returns `(roll, pitch, thrust)` or `None` when `‖f‖ ≤ min_force`.
pub fn flat_attitude(f: &Vec3, heading: f64, mass: f64, min_force: f64) -> Option<(f64, f64, f64)> {
    let norm = f.norm();
    if norm <= min_force || !norm.is_finite() {
        return None;
    }
    let z_b = -f / norm;
    let x_c = Vec3::new(heading.cos(), heading.sin(), 0.0);
    let y_raw = z_b.cross(&x_c);
    let y_norm = y_raw.norm();
    if y_norm <= 1e-9 {
        return None;
    }
    let y_b = y_raw / y_norm;
    let x_b = y_b.cross(&z_b);
    // R = [x_b y_b z_b]; ZYX extraction.
    let roll = y_b.z.atan2(z_b.z);
    let pitch = -x_b.z.clamp(-1.0, 1.0).asin();
    Some((roll, pitch, mass * norm))
}

/// PID on position with differential-flatness feedforward.
#[derive(Debug, Clone)]
pub struct TrajectoryFollower {
    gains: FollowerGains,
    mass: f64,
    integral: Vec3,
    leg: Option<usize>,
    last: AngleThrustSetpoint,
}

impl TrajectoryFollower {
    pub fn new(gains: FollowerGains, mass: f64) -> Self {
        Self {
            gains,
            mass,
            integral: Vec3::zeros(),
            leg: None,
            last: AngleThrustSetpoint::default(),
        }
    }

    pub fn gains(&self) -> &FollowerGains {
        &self.gains
    }

    pub fn integral(&self) -> Vec3 {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Vec3::zeros();
        self.leg = None;
    }

    /// Set one gain by key, e.g. `kp.0`, `kd.2`, `yaw_gain`. Returns false
    /// for an unknown key.
    pub fn set_param(&mut self, key: &str, value: f64) -> bool {
        let g = &mut self.gains;
        let slot = |arr: &mut [f64; 3], idx: &str| -> bool {
            match idx.parse::<usize>() {
                Ok(i) if i < 3 => {
                    arr[i] = value;
                    true
                }
                _ => false,
            }
        };
        match key.split_once('.') {
            Some(("kp", i)) => slot(&mut g.kp, i),
            Some(("kd", i)) => slot(&mut g.kd, i),
            Some(("ki", i)) => slot(&mut g.ki, i),
            None => match key {
                "integral_limit" => {
                    g.integral_limit = value;
                    true
                }
                "yaw_gain" => {
                    g.yaw_gain = value;
                    true
                }
                _ => false,
            },
            _ => false,
        }
    }

    pub fn step(
        &mut self,
        sp: &TrajectorySetpoint,
        est: &StateEstimate,
        dt: f64,
    ) -> (AngleThrustSetpoint, Option<FollowerWarning>) {
        if self.leg != Some(sp.leg) {
            self.integral = Vec3::zeros();
            self.leg = Some(sp.leg);
        }
        let e_p = sp.position - est.position;
        let e_v = sp.velocity - est.velocity_ned();
        let lim = self.gains.integral_limit;
        self.integral = (self.integral + e_p * dt).map(|c| c.clamp(-lim, lim));

        let kp = Vec3::from(self.gains.kp);
        let kd = Vec3::from(self.gains.kd);
        let ki = Vec3::from(self.gains.ki);
        let a_cmd = sp.acceleration
            + kp.component_mul(&e_p)
            + kd.component_mul(&e_v)
            + ki.component_mul(&self.integral);
        let f = a_cmd - Vec3::new(0.0, 0.0, GRAVITY);
        let yaw_rate = sp.heading_rate + self.gains.yaw_gain * wrap_angle(sp.heading - est.euler.yaw);

        let (out, warning) =
            match flat_attitude(&f, sp.heading, self.mass, self.gains.min_specific_force) {
                Some((roll, pitch, thrust)) => (
                    AngleThrustSetpoint {
                        stamp: sp.stamp,
                        roll,
                        pitch,
                        yaw_rate,
                        thrust,
                    },
                    None,
                ),
                None => (
                    AngleThrustSetpoint {
                        stamp: sp.stamp,
                        roll: self.last.roll,
                        pitch: self.last.pitch,
                        yaw_rate,
                        thrust: self.gains.min_thrust,
                    },
                    Some(FollowerWarning::FreeFall),
                ),
            };
        self.last = out;
        (out, warning)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{rot_z, EulerAngles};
    use proptest::prelude::*;

    fn estimate(p: Vec3, v_body: Vec3, yaw: f64) -> StateEstimate {
        StateEstimate {
            stamp: 0.0,
            position: p,
            velocity_body: v_body,
            euler: EulerAngles::new(0.0, 0.0, yaw),
            gyro_bias: Vec3::zeros(),
            body_rates: Vec3::zeros(),
        }
    }

    fn setpoint(p: Vec3, v: Vec3, a: Vec3, heading: f64) -> TrajectorySetpoint {
        TrajectorySetpoint {
            stamp: 0.0,
            leg: 0,
            position: p,
            velocity: v,
            acceleration: a,
            heading,
            heading_rate: 0.0,
            heading_accel: 0.0,
        }
    }

    #[test]
    fn hover_at_the_setpoint_is_exact() {
        let mass = 2.0;
        let mut f = TrajectoryFollower::new(FollowerGains::default(), mass);
        let p = Vec3::new(3.0, -1.0, -5.0);
        for yaw in [0.0, 1.0, -2.5] {
            let (out, w) = f.step(
                &setpoint(p, Vec3::zeros(), Vec3::zeros(), yaw),
                &estimate(p, Vec3::zeros(), yaw),
                0.01,
            );
            assert!(w.is_none());
            assert_eq!(out.roll, 0.0);
            assert_eq!(out.pitch, 0.0);
            assert_eq!(out.yaw_rate, 0.0);
            assert_eq!(out.thrust, mass * GRAVITY);
        }
    }

    #[test]
    fn forward_acceleration_tilts_nose_down() {
        let expected = -(1.0 / GRAVITY).atan();
        assert!((expected.to_degrees() + 5.82).abs() < 5e-3);

        let f = Vec3::new(1.0, 0.0, -GRAVITY);
        let (roll, pitch, thrust) = flat_attitude(&f, 0.0, 2.0, 0.5).unwrap();
        assert!(roll.abs() < 1e-15);
        assert!((pitch - expected).abs() < 1e-12);
        assert!((thrust - 2.0 * (1.0 + GRAVITY * GRAVITY).sqrt()).abs() < 1e-12);

        // Facing east, a northward push is a push to the vehicle's left.
        let (roll, pitch, _) = flat_attitude(&f, std::f64::consts::FRAC_PI_2, 2.0, 0.5).unwrap();
        assert!(pitch.abs() < 1e-12);
        assert!((roll - expected).abs() < 1e-12);
    }

    #[test]
    fn free_fall_holds_attitude_and_warns() {
        let mut f = TrajectoryFollower::new(FollowerGains::default(), 2.0);
        let p = Vec3::zeros();
        let (first, _) = f.step(
            &setpoint(p, Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0), 0.0),
            &estimate(p, Vec3::zeros(), 0.0),
            0.01,
        );
        let (out, w) = f.step(
            &setpoint(p, Vec3::zeros(), Vec3::new(0.0, 0.0, GRAVITY), 0.0),
            &estimate(p, Vec3::zeros(), 0.0),
            0.01,
        );
        assert_eq!(w, Some(FollowerWarning::FreeFall));
        assert_eq!(out.roll, first.roll);
        assert_eq!(out.pitch, first.pitch);
        assert!(out.thrust > 0.0);
    }

    #[test]
    fn integral_is_clamped_and_reset_on_new_leg() {
        let mut f = TrajectoryFollower::new(FollowerGains::default(), 2.0);
        let sp = setpoint(Vec3::new(100.0, 0.0, 0.0), Vec3::zeros(), Vec3::zeros(), 0.0);
        let est = estimate(Vec3::zeros(), Vec3::zeros(), 0.0);
        for _ in 0..1000 {
            f.step(&sp, &est, 0.01);
        }
        assert_eq!(f.integral().x, 2.0);
        let mut next = sp;
        next.leg = 1;
        next.position = Vec3::zeros();
        f.step(&next, &est, 0.01);
        assert_eq!(f.integral(), Vec3::zeros());
    }

    #[test]
    fn gains_are_settable_by_key() {
        let mut f = TrajectoryFollower::new(FollowerGains::default(), 2.0);
        assert!(f.set_param("kp.1", 3.0));
        assert_eq!(f.gains().kp[1], 3.0);
        assert!(f.set_param("yaw_gain", 1.0));
        assert!(!f.set_param("kp.3", 1.0));
        assert!(!f.set_param("bogus", 1.0));
    }

    proptest! {
        #[test]
        fn tilt_and_thrust_are_yaw_equivariant(
            n in -5.0..5.0f64, e in -5.0..5.0f64, d in -5.0..5.0f64,
            vx in -2.0..2.0f64, vy in -2.0..2.0f64,
            heading in -3.0..3.0f64, yaw in -3.0..3.0f64, turn in -3.0..3.0f64,
        ) {
            let mass = 2.0;
            let ref_p = Vec3::new(n, e, d);
            let est_v = Vec3::new(vx, vy, 0.0);
            let rz = rot_z(turn);
            let mut a = TrajectoryFollower::new(FollowerGains::default(), mass);
            let mut b = TrajectoryFollower::new(FollowerGains::default(), mass);
            let (oa, _) = a.step(
                &setpoint(ref_p, Vec3::zeros(), Vec3::zeros(), heading),
                &estimate(Vec3::zeros(), est_v, yaw),
                0.01,
            );
            // Body velocity is unchanged when the vehicle yaw rotates with the scene.
            let (ob, _) = b.step(
                &setpoint(rz * ref_p, Vec3::zeros(), Vec3::zeros(), wrap_angle(heading + turn)),
                &estimate(Vec3::zeros(), est_v, wrap_angle(yaw + turn)),
                0.01,
            );
            // Gains are isotropic in N/E only when equal; the defaults are.
            prop_assert!((oa.roll - ob.roll).abs() < 1e-9);
            prop_assert!((oa.pitch - ob.pitch).abs() < 1e-9);
            prop_assert!((oa.thrust - ob.thrust).abs() < 1e-9);
            prop_assert!((oa.yaw_rate - ob.yaw_rate).abs() < 1e-9);
            prop_assert!(oa.thrust > 0.0);
        }
    }
}
