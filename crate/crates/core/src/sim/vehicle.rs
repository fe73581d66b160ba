//! Rigid-body quadrotor truth model.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::math::{
    euler_kinematics, rotation_body_to_inertial, wrap_angle, EulerAngles, GimbalError, Vec3,
    GRAVITY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// kg.
    pub mass: f64,
    /// Principal moments of inertia, kg·m².
    pub inertia: [f64; 3],
    /// Centre to motor, m.
    pub arm_length: f64,
    /// Per-motor maximum thrust, N.
    pub motor_max_thrust: f64,
    /// Yaw torque per newton of thrust, m.
    pub yaw_coefficient: f64,
    /// Linear drag per unit mass on body-frame relative velocity, 1/s.
    pub drag: [f64; 3],
    /// First-order motor lag, s. Zero for instantaneous motors.
    pub motor_time_constant: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 2.0,
            inertia: [0.03, 0.03, 0.05],
            arm_length: 0.325,
            motor_max_thrust: 15.0,
            yaw_coefficient: 0.016,
            drag: [0.1, 0.1, 0.2],
            motor_time_constant: 0.0,
        }
    }
}

impl VehicleParams {
    /// Total thrust with every motor at its maximum, N.
    pub fn max_thrust(&self) -> f64 {
        4.0 * self.motor_max_thrust
    }

    /// Names the first offending field.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("vehicle.{name} must be positive and finite (got {v})"))
            }
        };
        positive("mass", self.mass)?;
        for (i, j) in self.inertia.iter().enumerate() {
            positive(&format!("inertia[{i}]"), *j)?;
        }
        positive("arm_length", self.arm_length)?;
        positive("motor_max_thrust", self.motor_max_thrust)?;
        positive("yaw_coefficient", self.yaw_coefficient)?;
        for (i, d) in self.drag.iter().enumerate() {
            if !(*d >= 0.0 && d.is_finite()) {
                return Err(format!("vehicle.drag[{i}] must be non-negative (got {d})"));
            }
        }
        if !(self.motor_time_constant >= 0.0) {
            return Err("vehicle.motor_time_constant must be non-negative".into());
        }
        let weight = self.mass * GRAVITY;
        if self.max_thrust() < 1.5 * weight {
            return Err(format!(
                "vehicle.motor_max_thrust: total thrust {:.2} N is below 1.5 x weight ({:.2} N)",
                self.max_thrust(),
                1.5 * weight
            ));
        }
        Ok(())
    }
}

/// Collective thrust along −z_body (N) and body torques (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub thrust: f64,
    pub torque: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TruthState {
    /// NED, m.
    pub position: Vec3,
    /// Body frame, m/s.
    pub velocity: Vec3,
    pub euler: EulerAngles,
    /// Body rates, rad/s.
    pub rates: Vec3,
}

pub type TruthVec = SVector<f64, 12>;

impl TruthState {
    pub fn to_vector(&self) -> TruthVec {
        let mut v = TruthVec::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.position);
        v.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        v.fixed_rows_mut::<3>(6).copy_from(&self.euler.to_vector());
        v.fixed_rows_mut::<3>(9).copy_from(&self.rates);
        v
    }

    pub fn from_vector(v: &TruthVec) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into(),
            velocity: v.fixed_rows::<3>(3).into(),
            euler: EulerAngles::from_vector(&v.fixed_rows::<3>(6).into()),
            rates: v.fixed_rows::<3>(9).into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    pub fn velocity_ned(&self) -> Vec3 {
        rotation_body_to_inertial(&self.euler) * self.velocity
    }
}

/// Body-frame specific force: everything but gravity, divided by mass.
pub fn specific_force(s: &TruthState, w: &Wrench, wind_ned: &Vec3, p: &VehicleParams) -> Vec3 {
    let r = rotation_body_to_inertial(&s.euler);
    let v_rel = s.velocity - r.transpose() * wind_ned;
    let drag = Vec3::from(p.drag).component_mul(&v_rel);
    Vec3::new(0.0, 0.0, -w.thrust / p.mass) - drag
}

/// ṗ = R v, v̇ = Rᵀ g e₃ + f_b + v × ω, θ̇ = S(θ) ω, J ω̇ = τ − ω × J ω.
pub fn derivative(
    s: &TruthState,
    w: &Wrench,
    wind_ned: &Vec3,
    p: &VehicleParams,
    guard: f64,
) -> Result<TruthVec, GimbalError> {
    let r = rotation_body_to_inertial(&s.euler);
    let sk = euler_kinematics(&s.euler, guard)?;
    let j = Vec3::from(p.inertia);
    let gravity_body = r.transpose() * Vec3::new(0.0, 0.0, GRAVITY);
    let v_dot = gravity_body + specific_force(s, w, wind_ned, p) + s.velocity.cross(&s.rates);
    let w_dot = (w.torque - s.rates.cross(&j.component_mul(&s.rates))).component_div(&j);
    let mut d = TruthVec::zeros();
    d.fixed_rows_mut::<3>(0).copy_from(&(r * s.velocity));
    d.fixed_rows_mut::<3>(3).copy_from(&v_dot);
    d.fixed_rows_mut::<3>(6).copy_from(&(sk * s.rates));
    d.fixed_rows_mut::<3>(9).copy_from(&w_dot);
    Ok(d)
}

/// One classical fourth-order Runge-Kutta step with the wrench held.
pub fn rk4_step(
    s: &TruthState,
    w: &Wrench,
    wind_ned: &Vec3,
    p: &VehicleParams,
    dt: f64,
    guard: f64,
) -> Result<TruthState, GimbalError> {
    let x0 = s.to_vector();
    let f = |x: &TruthVec| derivative(&TruthState::from_vector(x), w, wind_ned, p, guard);
    let k1 = f(&x0)?;
    let k2 = f(&(x0 + k1 * (dt / 2.0)))?;
    let k3 = f(&(x0 + k2 * (dt / 2.0)))?;
    let k4 = f(&(x0 + k3 * dt))?;
    let mut x = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    x[6] = wrap_angle(x[6]);
    x[8] = wrap_angle(x[8]);
    Ok(TruthState::from_vector(&x))
}
