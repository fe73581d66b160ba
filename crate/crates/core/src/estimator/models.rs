//! Process and measurement models for the 12-state filter.
//!
//! State layout: `[p (NED, m), v (body, m/s), θ (roll, pitch, yaw), b_gyro]`.

use nalgebra::{SMatrix, SVector};

use crate::math::{
    d_euler_rates_d_euler, d_rotate_d_euler, d_rotate_transpose_d_euler, euler_kinematics,
    rotation_body_to_inertial, rotation_body_to_vehicle1, rot_x_dot, rot_y_dot, rot_x, rot_y,
    skew, wrap_angle, EulerAngles, GimbalError, Mat3, Vec3, GRAVITY,
};

pub const STATE_DIM: usize = 12;
pub const INPUT_DIM: usize = 6;

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const ATT: usize = 6;
pub const BIAS: usize = 9;
pub const ROLL: usize = ATT;
pub const PITCH: usize = ATT + 1;
pub const YAW: usize = ATT + 2;

pub type StateVec = SVector<f64, STATE_DIM>;
pub type StateMat = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type InputMat = SMatrix<f64, STATE_DIM, INPUT_DIM>;

/// Filter state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    /// NED position, m.
    pub position: Vec3,
    /// Body-frame velocity, m/s.
    pub velocity: Vec3,
    pub euler: EulerAngles,
    /// Gyro bias, rad/s.
    pub gyro_bias: Vec3,
}

impl StateVector {
    pub fn to_vector(&self) -> StateVec {
        let mut x = StateVec::zeros();
        x.fixed_rows_mut::<3>(POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(ATT).copy_from(&self.euler.to_vector());
        x.fixed_rows_mut::<3>(BIAS).copy_from(&self.gyro_bias);
        x
    }

    pub fn from_vector(x: &StateVec) -> Self {
        Self {
            position: x.fixed_rows::<3>(POS).into(),
            velocity: x.fixed_rows::<3>(VEL).into(),
            euler: EulerAngles::from_vector(&x.fixed_rows::<3>(ATT).into()),
            gyro_bias: x.fixed_rows::<3>(BIAS).into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    /// Velocity expressed in NED.
    pub fn velocity_ned(&self) -> Vec3 {
        rotation_body_to_inertial(&self.euler) * self.velocity
    }
}

/// IMU readings used as filter inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuInput {
    pub accel: Vec3,
    pub gyro: Vec3,
}

fn gravity_ned() -> Vec3 {
    Vec3::new(0.0, 0.0, GRAVITY)
}

/// ẋ = f(x, u).
pub fn dynamics(x: &StateVector, u: &ImuInput, guard: f64) -> Result<StateVec, GimbalError> {
    let s = euler_kinematics(&x.euler, guard)?;
    let r = rotation_body_to_inertial(&x.euler);
    let omega = u.gyro - x.gyro_bias;
    let mut xdot = StateVec::zeros();
    xdot.fixed_rows_mut::<3>(POS).copy_from(&(r * x.velocity));
    let vdot = r.transpose() * gravity_ned() + u.accel + x.velocity.cross(&omega);
    xdot.fixed_rows_mut::<3>(VEL).copy_from(&vdot);
    xdot.fixed_rows_mut::<3>(ATT).copy_from(&(s * omega));
    Ok(xdot)
}

/// Continuous-time ∂f/∂x.
///
/// Because ω = y_gyro − b_gyro appears in v × ω, the velocity rows carry
/// −[v]× in the bias columns. The bias rows are zero.
pub fn jacobian_a(x: &StateVector, u: &ImuInput, guard: f64) -> Result<StateMat, GimbalError> {
    let s = euler_kinematics(&x.euler, guard)?;
    let r = rotation_body_to_inertial(&x.euler);
    let omega = u.gyro - x.gyro_bias;
    let mut a = StateMat::zeros();
    a.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&r);
    a.fixed_view_mut::<3, 3>(POS, ATT)
        .copy_from(&d_rotate_d_euler(&x.euler, &x.velocity));
    a.fixed_view_mut::<3, 3>(VEL, VEL).copy_from(&(-skew(&omega)));
    a.fixed_view_mut::<3, 3>(VEL, ATT)
        .copy_from(&d_rotate_transpose_d_euler(&x.euler, &gravity_ned()));
    a.fixed_view_mut::<3, 3>(VEL, BIAS).copy_from(&(-skew(&x.velocity)));
    a.fixed_view_mut::<3, 3>(ATT, ATT)
        .copy_from(&d_euler_rates_d_euler(&x.euler, &omega, guard)?);
    a.fixed_view_mut::<3, 3>(ATT, BIAS).copy_from(&(-s));
    Ok(a)
}

/// ∂f/∂u with u = [accel, gyro].
pub fn jacobian_inputs(x: &StateVector, guard: f64) -> Result<InputMat, GimbalError> {
    let s = euler_kinematics(&x.euler, guard)?;
    let mut g = InputMat::zeros();
    g.fixed_view_mut::<3, 3>(VEL, 0).copy_from(&Mat3::identity());
    g.fixed_view_mut::<3, 3>(VEL, 3).copy_from(&skew(&x.velocity));
    g.fixed_view_mut::<3, 3>(ATT, 3).copy_from(&s);
    Ok(g)
}

/// Predicted barometer reading relative to the reference altitude, Pa.
pub fn baro_model(x: &StateVector, air_density: f64) -> f64 {
    -air_density * GRAVITY * x.position.z
}

pub fn baro_jacobian(air_density: f64) -> SMatrix<f64, 1, STATE_DIM> {
    let mut c = SMatrix::<f64, 1, STATE_DIM>::zeros();
    c[(0, POS + 2)] = -air_density * GRAVITY;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("magnetic field has no usable horizontal component ({0:e})")]
pub struct DegenerateField(pub f64);

/// Minimum horizontal field magnitude (after normalization) for a heading.
pub const MIN_HORIZONTAL_FIELD: f64 = 1e-9;

/// Tilt-compensated heading from a body-frame field reading.
///
/// The field is levelled into the vehicle-1 frame with roll and pitch; the
/// heading is the yaw that rotates north onto that horizontal projection,
/// plus the local declination.
pub fn mag_heading(field: &Vec3, euler: &EulerAngles, declination: f64) -> Result<f64, DegenerateField> {
    let norm = field.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(DegenerateField(norm));
    }
    let m = field / norm;
    let h = rotation_body_to_vehicle1(euler) * m;
    let horizontal = h.x.hypot(h.y);
    if horizontal <= MIN_HORIZONTAL_FIELD {
        return Err(DegenerateField(horizontal));
    }
    Ok(wrap_angle((-h.y).atan2(h.x) + declination))
}

/// Jacobians of [`mag_heading`]: ∂z/∂field (1×3) and ∂z/∂x (1×12, roll and
/// pitch columns only).
pub fn mag_heading_jacobians(
    field: &Vec3,
    euler: &EulerAngles,
) -> Result<(SMatrix<f64, 1, 3>, SMatrix<f64, 1, STATE_DIM>), DegenerateField> {
    let r = rotation_body_to_vehicle1(euler);
    let h = r * field;
    let d2 = h.x * h.x + h.y * h.y;
    let norm = field.norm();
    if !(d2.sqrt() > MIN_HORIZONTAL_FIELD * norm) {
        return Err(DegenerateField(d2.sqrt()));
    }
    // z = atan2(−h_y, h_x)
    let dz_dh = SMatrix::<f64, 1, 3>::new(h.y / d2, -h.x / d2, 0.0);
    let f = dz_dh * r;
    let dh_droll = rot_y(euler.pitch) * rot_x_dot(euler.roll) * field;
    let dh_dpitch = rot_y_dot(euler.pitch) * rot_x(euler.roll) * field;
    let mut g = SMatrix::<f64, 1, STATE_DIM>::zeros();
    g[(0, ROLL)] = (dz_dh * dh_droll)[(0, 0)];
    g[(0, PITCH)] = (dz_dh * dh_dpitch)[(0, 0)];
    Ok((f, g))
}

pub fn mag_jacobian() -> SMatrix<f64, 1, STATE_DIM> {
    let mut c = SMatrix::<f64, 1, STATE_DIM>::zeros();
    c[(0, YAW)] = 1.0;
    c
}

/// Predicted GNSS measurement `[p_n, p_e, v_n, v_e, v_d]`.
pub fn gnss_model(x: &StateVector) -> SVector<f64, 5> {
    let v = rotation_body_to_inertial(&x.euler) * x.velocity;
    SVector::<f64, 5>::new(x.position.x, x.position.y, v.x, v.y, v.z)
}

pub fn gnss_jacobian(x: &StateVector) -> SMatrix<f64, 5, STATE_DIM> {
    let mut c = SMatrix::<f64, 5, STATE_DIM>::zeros();
    c[(0, POS)] = 1.0;
    c[(1, POS + 1)] = 1.0;
    c.fixed_view_mut::<3, 3>(2, VEL)
        .copy_from(&rotation_body_to_inertial(&x.euler));
    c.fixed_view_mut::<3, 3>(2, ATT)
        .copy_from(&d_rotate_d_euler(&x.euler, &x.velocity));
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hover_is_an_equilibrium() {
        let x = StateVector::default();
        let u = ImuInput {
            accel: Vec3::new(0.0, 0.0, -GRAVITY),
            gyro: Vec3::zeros(),
        };
        assert_eq!(dynamics(&x, &u, 1e-3).unwrap(), StateVec::zeros());
    }

    #[test]
    fn yawed_body_velocity_points_east() {
        let x = StateVector {
            velocity: Vec3::new(1.0, 0.0, 0.0),
            euler: EulerAngles::new(0.0, 0.0, PI / 2.0),
            ..Default::default()
        };
        let u = ImuInput {
            accel: Vec3::new(0.0, 0.0, -GRAVITY),
            gyro: Vec3::zeros(),
        };
        let xdot = dynamics(&x, &u, 1e-3).unwrap();
        let pdot: Vec3 = xdot.fixed_rows::<3>(POS).into();
        assert!((pdot - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn jacobian_blocks_at_rest() {
        let x = StateVector::default();
        let a = jacobian_a(&x, &ImuInput::default(), 1e-3).unwrap();
        assert_eq!(a.fixed_view::<3, 3>(POS, VEL).into_owned(), Mat3::identity());
        assert_eq!(a.fixed_view::<3, 3>(ATT, BIAS).into_owned(), -Mat3::identity());
        assert_eq!(a.fixed_view::<3, 3>(BIAS, BIAS).into_owned(), Mat3::zeros());
    }

    #[test]
    fn heading_examples() {
        let level = EulerAngles::default();
        assert_eq!(mag_heading(&Vec3::x(), &level, 0.0).unwrap(), 0.0);
        // A field seen on the body's right means north is to the right, so the
        // nose points west of north.
        let h = mag_heading(&Vec3::y(), &level, 0.0).unwrap();
        assert!((h + PI / 2.0).abs() < 1e-15);
        assert!(mag_heading(&Vec3::z(), &level, 0.0).is_err());
        assert!(mag_heading(&Vec3::zeros(), &level, 0.0).is_err());
    }

    #[test]
    fn heading_matches_rotate_then_project_oracle() {
        // Oracle: build the inertial field from inclination, rotate it into the
        // body with the full attitude, then check the tilt-compensated heading
        // recovers the yaw.
        let incl = 60f64.to_radians();
        let field_ned = Vec3::new(incl.cos(), 0.0, incl.sin());
        for &yaw in &[0.0, 0.7, -2.0, 3.0] {
            let e = EulerAngles::new(30f64.to_radians(), -0.2, yaw);
            let body = rotation_body_to_inertial(&e).transpose() * field_ned;
            let h = mag_heading(&body, &e, 0.0).unwrap();
            assert!(wrap_angle(h - yaw).abs() < 1e-12, "yaw {yaw} got {h}");
        }
    }

    #[test]
    fn baro_prediction() {
        let x = StateVector {
            position: Vec3::new(0.0, 0.0, -100.0),
            ..Default::default()
        };
        let h = baro_model(&x, 1.2250);
        assert!((h - 1201.314_625).abs() < 1e-6);
        assert_eq!(baro_model(&StateVector::default(), 1.225), 0.0);
    }
}
