//! Continuous-discrete extended Kalman filter over position, body velocity,
//! Euler attitude and gyro bias.
//!
//! IMU samples drive propagation; barometer, magnetometer and GNSS samples
//! are fused with Joseph-form updates.

pub mod atmosphere;
pub mod filter;
pub mod geodesy;
pub mod models;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::math::{wrap_angle, GimbalError, Vec3, DEFAULT_GIMBAL_GUARD};
use crate::messages::{BaroSample, GnssSample, ImuSample, MagSample, StateEstimate};

pub use atmosphere::{air_density, OutOfTroposphere};
pub use filter::{
    discretize, innovation_covariance_full, joseph_update, SingularInnovation,
    MAX_CONDITION_NUMBER,
};
pub use geodesy::{gnss_to_local, local_to_gnss, GeodeticOrigin, EARTH_RADIUS};
pub use models::{
    dynamics, jacobian_a, jacobian_inputs, mag_heading, DegenerateField, ImuInput, StateMat,
    StateVec, StateVector, ATT, BIAS, PITCH, POS, ROLL, STATE_DIM, VEL, YAW,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Gimbal(#[from] GimbalError),
    #[error("estimator produced a non-finite {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Singular(#[from] SingularInnovation),
    #[error(transparent)]
    DegenerateField(#[from] DegenerateField),
    #[error(transparent)]
    OutOfTroposphere(#[from] OutOfTroposphere),
    #[error("GNSS origin has not been set")]
    OriginNotSet,
    #[error("air density is not yet known; waiting for a GNSS altitude")]
    DensityUnavailable,
    #[error("measurement rejected by gate (d² = {0:.3})")]
    Gated(f64),
    #[error("measurement contains non-finite values")]
    InvalidMeasurement,
    #[error("estimator is latched in a fault state: {0}")]
    Faulted(String),
}

impl EstimatorError {
    /// Faults that stop the filter for good, as opposed to a skipped update.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            EstimatorError::Gimbal(_) | EstimatorError::NonFinite(_) | EstimatorError::Faulted(_)
        )
    }
}

/// How the per-substep covariance increment is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceScaling {
    /// (Q + G Q_u Gᵀ)·(Ts / 2N)²
    #[default]
    Printed,
    /// (Q + G Q_u Gᵀ)·(Ts / N)
    Conventional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Diagonal of Q.
    pub process: [f64; 12],
    /// Diagonal of Q_u: accelerometer then gyro.
    pub input: [f64; 6],
    /// Barometer variance, Pa².
    pub baro: f64,
    /// Diagonal of the raw magnetometer covariance.
    pub mag: [f64; 3],
    /// Diagonal of the GNSS covariance: p_n, p_e, v_n, v_e, v_d.
    pub gnss: [f64; 5],
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            process: [
                1e-4, 1e-4, 1e-4, 1e-3, 1e-3, 1e-3, 1e-4, 1e-4, 1e-4, 1e-7, 1e-7, 1e-7,
            ],
            input: [1.0, 1.0, 1.0, 4e-4, 4e-4, 4e-4],
            baro: 9.0,
            mag: [2.5e-5; 3],
            gnss: [0.16, 0.16, 0.0025, 0.0025, 0.0025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCovariance {
    pub position: f64,
    pub velocity: f64,
    pub attitude: f64,
    pub gyro_bias: f64,
}

impl Default for InitialCovariance {
    fn default() -> Self {
        Self {
            position: 5.0,
            velocity: 1.0,
            attitude: 0.05,
            gyro_bias: 1e-4,
        }
    }
}

/// Optional chi-square gates per sensor. `None` disables gating.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gates {
    pub baro: Option<f64>,
    pub mag: Option<f64>,
    pub gnss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginDegrees {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl OriginDegrees {
    pub fn to_origin(self) -> GeodeticOrigin {
        GeodeticOrigin::from_degrees(self.lat_deg, self.lon_deg, self.alt_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Euler substeps per IMU propagation.
    pub substeps: usize,
    pub gimbal_guard: f64,
    pub covariance_scaling: CovarianceScaling,
    /// Added to the tilt-compensated heading, degrees.
    pub declination_deg: f64,
    pub noise: NoiseConfig,
    pub initial_covariance: InitialCovariance,
    pub gates: Gates,
    /// Local frame anchor. When absent the first finite GNSS fix is used.
    pub origin: Option<OriginDegrees>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            substeps: 4,
            gimbal_guard: DEFAULT_GIMBAL_GUARD,
            covariance_scaling: CovarianceScaling::Printed,
            declination_deg: 0.0,
            noise: NoiseConfig::default(),
            initial_covariance: InitialCovariance::default(),
            gates: Gates::default(),
            origin: None,
        }
    }
}

/// State, covariance and filter time.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfBelief {
    pub x: StateVector,
    pub p: StateMat,
    pub t: f64,
}

impl EkfBelief {
    pub fn new(x: StateVector, p0: &InitialCovariance) -> Self {
        let mut diag = StateVec::zeros();
        for i in 0..3 {
            diag[POS + i] = p0.position;
            diag[VEL + i] = p0.velocity;
            diag[ATT + i] = p0.attitude;
            diag[BIAS + i] = p0.gyro_bias;
        }
        Self {
            x,
            p: StateMat::from_diagonal(&diag),
            t: 0.0,
        }
    }

    /// Advance by `ts` seconds in `substeps` Euler steps, holding the IMU input
    /// constant. f, A_d and the input Jacobian are re-evaluated at the latest
    /// state on every substep.
    pub fn propagate(
        &mut self,
        u: &ImuInput,
        ts: f64,
        substeps: usize,
        noise: &NoiseConfig,
        scaling: CovarianceScaling,
        guard: f64,
    ) -> Result<(), EstimatorError> {
        let n = substeps.max(1);
        let h = ts / n as f64;
        let q = StateMat::from_diagonal(&StateVec::from(noise.process));
        let qu = SMatrix::<f64, 6, 6>::from_diagonal(&SVector::<f64, 6>::from(noise.input));
        let scale = match scaling {
            CovarianceScaling::Printed => (ts / (2.0 * n as f64)).powi(2),
            CovarianceScaling::Conventional => h,
        };
        for _ in 0..n {
            let f = dynamics(&self.x, u, guard)?;
            let a = jacobian_a(&self.x, u, guard)?;
            let g = jacobian_inputs(&self.x, guard)?;
            let ad = discretize(&a, h);
            let mut x = self.x.to_vector() + f * h;
            x[ROLL] = wrap_angle(x[ROLL]);
            x[YAW] = wrap_angle(x[YAW]);
            self.x = StateVector::from_vector(&x);
            self.p = ad * self.p * ad.transpose() + (q + g * qu * g.transpose()) * scale;
            filter::symmetrize(&mut self.p);
        }
        self.t += ts;
        if !self.x.is_finite() {
            return Err(EstimatorError::NonFinite("state"));
        }
        if !self.p.iter().all(|v| v.is_finite()) {
            return Err(EstimatorError::NonFinite("covariance"));
        }
        Ok(())
    }

    /// Joseph-form update followed by angle re-wrapping.
    pub fn update_joseph<const M: usize>(
        &mut self,
        innovation: &SVector<f64, M>,
        c: &SMatrix<f64, M, STATE_DIM>,
        s: &SMatrix<f64, M, M>,
        r: &SMatrix<f64, M, M>,
    ) -> Result<(), EstimatorError> {
        let mut x = self.x.to_vector();
        let mut p = self.p;
        joseph_update(&mut x, &mut p, innovation, c, s, r)?;
        x[ROLL] = wrap_angle(x[ROLL]);
        x[YAW] = wrap_angle(x[YAW]);
        if !x.iter().all(|v| v.is_finite()) || !p.iter().all(|v| v.is_finite()) {
            return Err(EstimatorError::NonFinite("update"));
        }
        self.x = StateVector::from_vector(&x);
        self.p = p;
        Ok(())
    }
}

/// Counters for updates that were skipped without faulting the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateStats {
    pub baro: u64,
    pub mag: u64,
    pub gnss: u64,
    pub singular: u64,
    pub gated: u64,
    pub degenerate: u64,
    pub deferred: u64,
}

/// A sensor message as consumed by the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorMessage {
    Imu(ImuSample),
    Baro(BaroSample),
    Mag(MagSample),
    Gnss(GnssSample),
}

impl SensorMessage {
    pub fn stamp(&self) -> f64 {
        match self {
            SensorMessage::Imu(m) => m.stamp,
            SensorMessage::Baro(m) => m.stamp,
            SensorMessage::Mag(m) => m.stamp,
            SensorMessage::Gnss(m) => m.stamp,
        }
    }
}

/// The filter together with its measurement context (origin, air density).
#[derive(Debug, Clone)]
pub struct Ekf {
    config: EstimatorConfig,
    belief: EkfBelief,
    origin: Option<GeodeticOrigin>,
    air_density: Option<f64>,
    have_imu: bool,
    body_rates: Vec3,
    fault: Option<String>,
    stats: UpdateStats,
}

impl Ekf {
    pub fn new(config: EstimatorConfig) -> Self {
        let belief = EkfBelief::new(StateVector::default(), &config.initial_covariance);
        let origin = config.origin.map(OriginDegrees::to_origin);
        let air_density = origin.and_then(|o| air_density(o.alt).ok());
        Self {
            config,
            belief,
            origin,
            air_density,
            have_imu: false,
            body_rates: Vec3::zeros(),
            fault: None,
            stats: UpdateStats::default(),
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn belief(&self) -> &EkfBelief {
        &self.belief
    }

    pub fn belief_mut(&mut self) -> &mut EkfBelief {
        &mut self.belief
    }

    pub fn origin(&self) -> Option<GeodeticOrigin> {
        self.origin
    }

    pub fn air_density(&self) -> Option<f64> {
        self.air_density
    }

    pub fn stats(&self) -> UpdateStats {
        self.stats
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    fn check_fault(&self) -> Result<(), EstimatorError> {
        match &self.fault {
            Some(f) => Err(EstimatorError::Faulted(f.clone())),
            None => Ok(()),
        }
    }

    fn latch<T>(&mut self, r: Result<T, EstimatorError>) -> Result<T, EstimatorError> {
        if let Err(e) = &r {
            if e.is_fatal() && self.fault.is_none() {
                self.fault = Some(e.to_string());
            }
        }
        r
    }

    pub fn estimate(&self) -> StateEstimate {
        let x = &self.belief.x;
        StateEstimate {
            stamp: self.belief.t,
            position: x.position,
            velocity_body: x.velocity,
            euler: x.euler,
            gyro_bias: x.gyro_bias,
            body_rates: self.body_rates,
        }
    }

    /// Propagate from the current filter time to the sample's stamp using the
    /// sample as the held input.
    pub fn handle_imu(&mut self, imu: &ImuSample) -> Result<(), EstimatorError> {
        self.check_fault()?;
        if !(crate::math::vec3_is_finite(&imu.accel) && crate::math::vec3_is_finite(&imu.gyro)) {
            return Err(EstimatorError::InvalidMeasurement);
        }
        let u = ImuInput {
            accel: imu.accel,
            gyro: imu.gyro,
        };
        if !self.have_imu {
            self.have_imu = true;
            self.belief.t = imu.stamp;
        }
        let ts = imu.stamp - self.belief.t;
        if ts > 0.0 {
            let cfg = &self.config;
            let r = self.belief.propagate(
                &u,
                ts,
                cfg.substeps,
                &cfg.noise,
                cfg.covariance_scaling,
                cfg.gimbal_guard,
            );
            self.latch(r)?;
            // Guard against drift from summing many small steps.
            self.belief.t = imu.stamp;
        }
        self.body_rates = imu.gyro - self.belief.x.gyro_bias;
        Ok(())
    }

    fn gate<const M: usize>(
        &mut self,
        gate: Option<f64>,
        innovation: &SVector<f64, M>,
        s: &SMatrix<f64, M, M>,
    ) -> Result<(), EstimatorError> {
        if let Some(threshold) = gate {
            let s_inv = filter::invert_guarded(s)?;
            let d2 = filter::mahalanobis_squared(innovation, &s_inv);
            if d2 > threshold {
                self.stats.gated += 1;
                return Err(EstimatorError::Gated(d2));
            }
        }
        Ok(())
    }

    fn record_skip(&mut self, e: &EstimatorError) {
        match e {
            EstimatorError::Singular(_) => self.stats.singular += 1,
            EstimatorError::DegenerateField(_) => self.stats.degenerate += 1,
            EstimatorError::DensityUnavailable | EstimatorError::OriginNotSet => {
                self.stats.deferred += 1
            }
            _ => {}
        }
    }

    /// Barometer update. Returns the innovation.
    pub fn update_baro(&mut self, z: &BaroSample) -> Result<f64, EstimatorError> {
        self.check_fault()?;
        let r = self.baro_inner(z);
        if let Err(e) = &r {
            self.record_skip(e);
        } else {
            self.stats.baro += 1;
        }
        self.latch(r)
    }

    fn baro_inner(&mut self, z: &BaroSample) -> Result<f64, EstimatorError> {
        if !z.pressure.is_finite() {
            return Err(EstimatorError::InvalidMeasurement);
        }
        let rho = self.air_density.ok_or(EstimatorError::DensityUnavailable)?;
        let innovation = SVector::<f64, 1>::new(z.pressure - models::baro_model(&self.belief.x, rho));
        let c = models::baro_jacobian(rho);
        let r = SMatrix::<f64, 1, 1>::new(self.config.noise.baro);
        let s = innovation_covariance_full(
            &SMatrix::<f64, 1, 1>::identity(),
            &r,
            &SMatrix::<f64, 1, STATE_DIM>::zeros(),
            &self.belief.p,
            &c,
        );
        self.gate(self.config.gates.baro, &innovation, &s)?;
        self.belief.update_joseph(&innovation, &c, &s, &r)?;
        Ok(innovation[0])
    }

    /// Magnetometer heading update. Returns the wrapped heading innovation.
    pub fn update_mag(&mut self, z: &MagSample) -> Result<f64, EstimatorError> {
        self.check_fault()?;
        let r = self.mag_inner(z);
        if let Err(e) = &r {
            self.record_skip(e);
        } else {
            self.stats.mag += 1;
        }
        self.latch(r)
    }

    fn mag_inner(&mut self, z: &MagSample) -> Result<f64, EstimatorError> {
        if !crate::math::vec3_is_finite(&z.field) {
            return Err(EstimatorError::InvalidMeasurement);
        }
        let euler = self.belief.x.euler;
        let declination = self.config.declination_deg.to_radians();
        let heading = mag_heading(&z.field, &euler, declination)?;
        let innovation = SVector::<f64, 1>::new(wrap_angle(heading - euler.yaw));
        let (f, g) = models::mag_heading_jacobians(&z.field, &euler)?;
        let c = models::mag_jacobian();
        let r_raw = SMatrix::<f64, 3, 3>::from_diagonal(&nalgebra::Vector3::from(self.config.noise.mag));
        let s = innovation_covariance_full(&f, &r_raw, &g, &self.belief.p, &c);
        let r_eff = f * r_raw * f.transpose();
        self.gate(self.config.gates.mag, &innovation, &s)?;
        self.belief.update_joseph(&innovation, &c, &s, &r_eff)?;
        Ok(innovation[0])
    }

    /// GNSS position/velocity update. The first finite fix latches the origin
    /// (and the air density) when the configuration did not provide one.
    pub fn update_gnss(&mut self, z: &GnssSample) -> Result<SVector<f64, 5>, EstimatorError> {
        self.check_fault()?;
        let r = self.gnss_inner(z);
        if let Err(e) = &r {
            self.record_skip(e);
        } else {
            self.stats.gnss += 1;
        }
        self.latch(r)
    }

    fn gnss_inner(&mut self, z: &GnssSample) -> Result<SVector<f64, 5>, EstimatorError> {
        if !(z.lat.is_finite() && z.lon.is_finite() && z.alt.is_finite())
            || !crate::math::vec3_is_finite(&z.vel)
        {
            return Err(EstimatorError::InvalidMeasurement);
        }
        if self.origin.is_none() {
            self.origin = Some(GeodeticOrigin {
                lat: z.lat,
                lon: z.lon,
                alt: z.alt,
            });
        }
        if self.air_density.is_none() {
            self.air_density = Some(air_density(z.alt)?);
        }
        let origin = self.origin.ok_or(EstimatorError::OriginNotSet)?;
        let (north, east) = gnss_to_local(z.lat, z.lon, &origin);
        let measured = SVector::<f64, 5>::new(north, east, z.vel.x, z.vel.y, z.vel.z);
        let innovation = measured - models::gnss_model(&self.belief.x);
        let c = models::gnss_jacobian(&self.belief.x);
        let r = SMatrix::<f64, 5, 5>::from_diagonal(&SVector::<f64, 5>::from(self.config.noise.gnss));
        let s = innovation_covariance_full(
            &SMatrix::<f64, 5, 5>::identity(),
            &r,
            &SMatrix::<f64, 5, STATE_DIM>::zeros(),
            &self.belief.p,
            &c,
        );
        self.gate(self.config.gates.gnss, &innovation, &s)?;
        self.belief.update_joseph(&innovation, &c, &s, &r)?;
        Ok(innovation)
    }

    /// Feed one sensor message. Skipped updates are counted, fatal faults are
    /// returned.
    pub fn handle(&mut self, msg: &SensorMessage) -> Result<(), EstimatorError> {
        let r = match msg {
            SensorMessage::Imu(m) => self.handle_imu(m),
            SensorMessage::Baro(m) => self.update_baro(m).map(|_| ()),
            SensorMessage::Mag(m) => self.update_mag(m).map(|_| ()),
            SensorMessage::Gnss(m) => self.update_gnss(m).map(|_| ()),
        };
        match r {
            Err(e) if e.is_fatal() => Err(e),
            _ => Ok(()),
        }
    }

    /// Process a chronologically ordered batch. Messages sharing a stamp form
    /// a group; an estimate is emitted after every group that contained an IMU
    /// sample. Live runs and log replay both go through here, so identical
    /// inputs give identical outputs regardless of how they were batched.
    pub fn process(&mut self, msgs: &[SensorMessage]) -> Result<Vec<StateEstimate>, EstimatorError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < msgs.len() {
            let stamp = msgs[i].stamp();
            let mut saw_imu = false;
            while i < msgs.len() && msgs[i].stamp() == stamp {
                saw_imu |= matches!(msgs[i], SensorMessage::Imu(_));
                self.handle(&msgs[i])?;
                i += 1;
            }
            if saw_imu {
                out.push(self.estimate());
            }
        }
        Ok(out)
    }
}
