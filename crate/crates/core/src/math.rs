//! Attitude kinematics and small numeric helpers shared by every module.
//!
//! Attitude is carried as ZYX Euler angles (roll, pitch, yaw). Rotation
//! matrices built here map body-frame vectors into the NED inertial frame.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;

/// Default distance from ±90° pitch at which the Euler-rate matrix is refused.
pub const DEFAULT_GIMBAL_GUARD: f64 = 1e-3;

/// Peak of dσ/dτ for the quintic smoothstep, reached at τ = 0.5.
pub const SMOOTHSTEP_PEAK_SLOPE: f64 = 1.875;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("pitch {pitch} rad is within {guard} rad of ±π/2")]
pub struct GimbalError {
    pub pitch: f64,
    pub guard: f64,
}

/// ZYX Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }

    /// Recover ZYX angles from a rotation matrix (body to inertial).
    pub fn from_rotation(r: &Mat3) -> Self {
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let pitch = -r[(2, 0)].clamp(-1.0, 1.0).asin();
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        Self::new(roll, pitch, wrap_angle(yaw))
    }

    pub fn check_gimbal(&self, guard: f64) -> Result<(), GimbalError> {
        if self.pitch.abs() >= PI / 2.0 - guard || !self.pitch.is_finite() {
            Err(GimbalError { pitch: self.pitch, guard })
        } else {
            Ok(())
        }
    }
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Derivative of [`rot_x`] with respect to its angle.
pub fn rot_x_dot(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

pub fn rot_y_dot(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

pub fn rot_z_dot(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// R_b^i for ZYX angles: R = Rz(ψ) Ry(θ) Rx(φ).
pub fn rotation_body_to_inertial(e: &EulerAngles) -> Mat3 {
    rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll)
}

/// Body to vehicle-1 frame (yaw removed): Ry(θ) Rx(φ).
pub fn rotation_body_to_vehicle1(e: &EulerAngles) -> Mat3 {
    rot_y(e.pitch) * rot_x(e.roll)
}

/// Partial derivatives of R_b^i with respect to (φ, θ, ψ).
pub fn rotation_partials(e: &EulerAngles) -> [Mat3; 3] {
    let (rx, ry, rz) = (rot_x(e.roll), rot_y(e.pitch), rot_z(e.yaw));
    [
        rz * ry * rot_x_dot(e.roll),
        rz * rot_y_dot(e.pitch) * rx,
        rot_z_dot(e.yaw) * ry * rx,
    ]
}

/// Columns ∂(R v)/∂(φ, θ, ψ) assembled as a 3×3 matrix.
pub fn d_rotate_d_euler(e: &EulerAngles, v: &Vec3) -> Mat3 {
    let [dr, dp, dy] = rotation_partials(e);
    Mat3::from_columns(&[dr * v, dp * v, dy * v])
}

/// Columns ∂(Rᵀ w)/∂(φ, θ, ψ).
pub fn d_rotate_transpose_d_euler(e: &EulerAngles, w: &Vec3) -> Mat3 {
    let [dr, dp, dy] = rotation_partials(e);
    Mat3::from_columns(&[dr.transpose() * w, dp.transpose() * w, dy.transpose() * w])
}

/// S(θ): maps body rates to Euler-angle rates.
pub fn euler_kinematics(e: &EulerAngles, guard: f64) -> Result<Mat3, GimbalError> {
    e.check_gimbal(guard)?;
    let (sp, cp) = e.roll.sin_cos();
    let (tt, st) = (e.pitch.tan(), 1.0 / e.pitch.cos());
    Ok(Mat3::new(
        1.0,
        sp * tt,
        cp * tt,
        0.0,
        cp,
        -sp,
        0.0,
        sp * st,
        cp * st,
    ))
}

/// ∂(S(θ) ω)/∂(φ, θ, ψ). The yaw column is zero.
pub fn d_euler_rates_d_euler(e: &EulerAngles, w: &Vec3, guard: f64) -> Result<Mat3, GimbalError> {
    e.check_gimbal(guard)?;
    let (sp, cp) = e.roll.sin_cos();
    let (tt, sec) = (e.pitch.tan(), 1.0 / e.pitch.cos());
    let (q, r) = (w.y, w.z);
    let a = sp * q + cp * r;
    let b = cp * q - sp * r;
    Ok(Mat3::new(
        b * tt,
        a * sec * sec,
        0.0,
        -a,
        0.0,
        0.0,
        b * sec,
        a * sec * tt,
        0.0,
    ))
}

/// Skew-symmetric cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a % two_pi;
    if w <= -PI {
        w += two_pi;
    } else if w > PI {
        w -= two_pi;
    }
    w
}

/// Quintic smoothstep σ(τ) = 6τ⁵ − 15τ⁴ + 10τ³ with its first two derivatives.
/// τ outside [0, 1] is clamped.
pub fn quintic_smoothstep(tau: f64) -> (f64, f64, f64) {
    let t = tau.clamp(0.0, 1.0);
    let t2 = t * t;
    let t3 = t2 * t;
    let s = t3 * (10.0 + t * (-15.0 + 6.0 * t));
    let ds = 30.0 * t2 * (1.0 + t * (-2.0 + t));
    let dds = 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t));
    (s, ds, dds)
}

pub fn vec3_is_finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}
