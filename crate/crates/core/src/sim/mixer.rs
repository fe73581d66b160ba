//! X-quad allocation between collective thrust/torques and motor thrusts.

use super::vehicle::{VehicleParams, Wrench};
use crate::math::Vec3;

/// Motor layout, body frame (x forward, y right):
/// 1 front-right, 2 rear-left, 3 front-left, 4 rear-right.
/// Motors 1 and 2 react a positive yaw torque, 3 and 4 a negative one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixer {
    positions: [(f64, f64); 4],
    spin: [f64; 4],
    d: f64,
    k: f64,
    motor_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOutput {
    pub thrusts: [f64; 4],
    /// True when any limit altered the requested wrench.
    pub saturated: bool,
}

impl Mixer {
    pub fn new(p: &VehicleParams) -> Self {
        let d = p.arm_length / std::f64::consts::SQRT_2;
        Self {
            positions: [(d, d), (-d, -d), (d, -d), (-d, d)],
            spin: [1.0, 1.0, -1.0, -1.0],
            d,
            k: p.yaw_coefficient,
            motor_max: p.motor_max_thrust,
        }
    }

    /// Wrench produced by the given motor thrusts.
    pub fn forward(&self, f: &[f64; 4]) -> Wrench {
        let mut w = Wrench::default();
        for i in 0..4 {
            let (x, y) = self.positions[i];
            w.thrust += f[i];
            w.torque.x -= y * f[i];
            w.torque.y += x * f[i];
            w.torque.z += self.spin[i] * self.k * f[i];
        }
        w
    }

    /// Largest scale in [0, 1] keeping base + s·delta inside [0, max].
    fn headroom(&self, base: &[f64; 4], delta: &[f64; 4]) -> f64 {
        let mut s: f64 = 1.0;
        for i in 0..4 {
            if delta[i] > 0.0 {
                s = s.min(((self.motor_max - base[i]) / delta[i]).max(0.0));
            } else if delta[i] < 0.0 {
                s = s.min((base[i] / -delta[i]).max(0.0));
            }
        }
        s
    }

    /// Allocate a wrench. Thrust is honoured first, then roll/pitch torque,
    /// then yaw torque.
    pub fn mix(&self, w: &Wrench) -> MixOutput {
        let total_max = 4.0 * self.motor_max;
        let thrust = w.thrust.clamp(0.0, total_max);
        let mut saturated = thrust != w.thrust;
        let base = [thrust / 4.0; 4];
        let inv = 1.0 / (4.0 * self.d * self.d);
        let mut tilt = [0.0; 4];
        let mut yaw = [0.0; 4];
        for i in 0..4 {
            let (x, y) = self.positions[i];
            tilt[i] = -y * w.torque.x * inv + x * w.torque.y * inv;
            yaw[i] = self.spin[i] * w.torque.z / (4.0 * self.k);
        }
        let alpha = self.headroom(&base, &tilt);
        let mut mid = [0.0; 4];
        for i in 0..4 {
            mid[i] = base[i] + alpha * tilt[i];
        }
        let beta = self.headroom(&mid, &yaw);
        saturated |= alpha < 1.0 || beta < 1.0;
        let mut thrusts = [0.0; 4];
        for i in 0..4 {
            thrusts[i] = (mid[i] + beta * yaw[i]).clamp(0.0, self.motor_max);
        }
        MixOutput { thrusts, saturated }
    }

    pub fn torque_limit(&self) -> Vec3 {
        Vec3::new(
            2.0 * self.d * self.motor_max,
            2.0 * self.d * self.motor_max,
            2.0 * self.k * self.motor_max,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::GRAVITY;
    use proptest::prelude::*;

    fn mixer() -> Mixer {
        Mixer::new(&VehicleParams::default())
    }

    #[test]
    fn pure_thrust_is_shared_equally() {
        let mg = 2.0 * GRAVITY;
        let out = mixer().mix(&Wrench {
            thrust: mg,
            torque: Vec3::zeros(),
        });
        assert!(!out.saturated);
        for f in out.thrusts {
            assert_eq!(f, mg / 4.0);
        }
    }

    #[test]
    fn yaw_torque_splits_diagonal_pairs() {
        let m = mixer();
        let out = m.mix(&Wrench {
            thrust: 20.0,
            torque: Vec3::new(0.0, 0.0, 0.05),
        });
        let f = out.thrusts;
        assert_eq!(f[0], f[1]);
        assert_eq!(f[2], f[3]);
        assert!(f[0] > f[2]);
        assert!((f.iter().sum::<f64>() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn thrust_beats_tilt_beats_yaw() {
        let m = mixer();
        let out = m.mix(&Wrench {
            thrust: 58.0,
            torque: Vec3::new(3.0, 0.0, 0.2),
        });
        assert!(out.saturated);
        assert!(out.thrusts.iter().all(|&f| (0.0..=15.0).contains(&f)));
        let w = m.forward(&out.thrusts);
        assert!((w.thrust - 58.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn allocation_round_trips_inside_limits(
            t in 15.0..45.0f64,
            tx in -0.5..0.5f64,
            ty in -0.5..0.5f64,
            tz in -0.05..0.05f64,
        ) {
            let m = mixer();
            let w = Wrench { thrust: t, torque: Vec3::new(tx, ty, tz) };
            let out = m.mix(&w);
            prop_assert!(!out.saturated);
            let back = m.forward(&out.thrusts);
            prop_assert!((back.thrust - t).abs() < 1e-10);
            prop_assert!((back.torque - w.torque).amax() < 1e-10);
        }
    }
}
