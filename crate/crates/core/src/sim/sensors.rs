//! Synthetic IMU, barometer, magnetometer and GNSS.
//!
//! The measurement functions here are written independently of the
//! estimator's models so that agreement between the two is a real check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::vehicle::TruthState;
use crate::clock::{BadRate, RateGate};
use crate::estimator::OriginDegrees;
use crate::math::{rot_x, rot_y, rot_z, Vec3, GRAVITY};
use crate::messages::{quantize_sig9, quantize_vec, BaroSample, GnssSample, ImuSample, MagSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    /// Hz.
    pub imu_rate: f64,
    pub baro_rate: f64,
    pub mag_rate: f64,
    pub gnss_rate: f64,
    /// Accelerometer white noise σ, m/s².
    pub accel_noise: f64,
    pub accel_bias: [f64; 3],
    /// Gyro white noise σ, rad/s.
    pub gyro_noise: f64,
    /// Constant gyro bias, rad/s.
    pub gyro_bias: [f64; 3],
    /// Barometer σ, Pa.
    pub baro_noise: f64,
    pub baro_bias: f64,
    /// Magnetometer σ on the unit field.
    pub mag_noise: f64,
    pub mag_inclination_deg: f64,
    pub mag_declination_deg: f64,
    /// GNSS horizontal position σ, m.
    pub gnss_position_noise: f64,
    pub gnss_altitude_noise: f64,
    /// GNSS velocity σ, m/s.
    pub gnss_velocity_noise: f64,
    /// Geodetic position of the local origin (the launch point).
    pub origin: OriginDegrees,
    /// Round outputs to nine significant digits so logged values replay exactly.
    pub quantize: bool,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            imu_rate: 250.0,
            baro_rate: 25.0,
            mag_rate: 50.0,
            gnss_rate: 5.0,
            accel_noise: 0.25,
            accel_bias: [0.0; 3],
            gyro_noise: 0.005,
            gyro_bias: [0.005, -0.004, 0.003],
            baro_noise: 3.0,
            baro_bias: 0.0,
            mag_noise: 0.005,
            mag_inclination_deg: 60.0,
            mag_declination_deg: 0.0,
            gnss_position_noise: 0.4,
            gnss_altitude_noise: 0.6,
            gnss_velocity_noise: 0.05,
            origin: OriginDegrees {
                lat_deg: 40.2338,
                lon_deg: -111.6585,
                alt_m: 1387.0,
            },
            quantize: true,
        }
    }
}

impl SensorConfig {
    /// Zero noise and zero biases; used for consistency checks.
    pub fn noiseless(&self) -> Self {
        Self {
            accel_noise: 0.0,
            accel_bias: [0.0; 3],
            gyro_noise: 0.0,
            gyro_bias: [0.0; 3],
            baro_noise: 0.0,
            baro_bias: 0.0,
            mag_noise: 0.0,
            gnss_position_noise: 0.0,
            gnss_altitude_noise: 0.0,
            gnss_velocity_noise: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [
            ("imu_rate", self.imu_rate),
            ("baro_rate", self.baro_rate),
            ("mag_rate", self.mag_rate),
            ("gnss_rate", self.gnss_rate),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(format!("sensors.{name} must be positive (got {r})"));
            }
        }
        for (name, s) in [
            ("accel_noise", self.accel_noise),
            ("gyro_noise", self.gyro_noise),
            ("baro_noise", self.baro_noise),
            ("mag_noise", self.mag_noise),
            ("gnss_position_noise", self.gnss_position_noise),
            ("gnss_altitude_noise", self.gnss_altitude_noise),
            ("gnss_velocity_noise", self.gnss_velocity_noise),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(format!("sensors.{name} must be non-negative (got {s})"));
            }
        }
        let o = self.origin;
        if !(o.lat_deg.abs() < 89.0 && o.lon_deg.abs() <= 180.0 && o.alt_m.is_finite()) {
            return Err("sensors.origin is not a valid geodetic position".into());
        }
        if !(0.0..11_000.0).contains(&o.alt_m) {
            return Err("sensors.origin.alt_m must lie in [0, 11000) m".into());
        }
        Ok(())
    }

    /// Unit magnetic field in NED from inclination and declination.
    pub fn field_ned(&self) -> Vec3 {
        let inc = self.mag_inclination_deg.to_radians();
        let dec = self.mag_declination_deg.to_radians();
        Vec3::new(inc.cos() * dec.cos(), inc.cos() * dec.sin(), inc.sin())
    }
}

/// Troposphere density written as ρ₀ (T/T₀)^(g/(L·R) − 1).
fn density(alt: f64) -> f64 {
    const T0: f64 = 288.15;
    const P0: f64 = 101_325.0;
    const L: f64 = 0.0065;
    const R: f64 = 287.053;
    let rho0 = P0 / (R * T0);
    rho0 * (1.0 - L * alt / T0).powf(GRAVITY / (L * R) - 1.0)
}

const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Outputs of one sampling instant; each is present only when due.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensorFrame {
    pub imu: Option<ImuSample>,
    pub baro: Option<BaroSample>,
    pub mag: Option<MagSample>,
    pub gnss: Option<GnssSample>,
}

struct Channel {
    gate: RateGate,
    rng: ChaCha8Rng,
}

impl Channel {
    fn new(rate: f64, base: f64, seed: u64, stream: u64) -> Result<Self, BadRate> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            gate: RateGate::new(rate, base)?,
            rng,
        })
    }

    fn noise(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        sigma * z
    }

    fn noise3(&mut self, sigma: f64) -> Vec3 {
        let x = self.noise(sigma);
        let y = self.noise(sigma);
        let z = self.noise(sigma);
        Vec3::new(x, y, z)
    }
}

pub struct SensorSuite {
    cfg: SensorConfig,
    imu: Channel,
    baro: Channel,
    mag: Channel,
    gnss: Channel,
    rho: f64,
    lat0: f64,
    lon0: f64,
    field: Vec3,
}

impl std::fmt::Debug for SensorSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensorSuite").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl SensorSuite {
    pub fn new(cfg: SensorConfig, base_rate: f64, seed: u64) -> Result<Self, BadRate> {
        let rho = density(cfg.origin.alt_m);
        let field = cfg.field_ned();
        Ok(Self {
            imu: Channel::new(cfg.imu_rate, base_rate, seed, 1)?,
            baro: Channel::new(cfg.baro_rate, base_rate, seed, 2)?,
            mag: Channel::new(cfg.mag_rate, base_rate, seed, 3)?,
            gnss: Channel::new(cfg.gnss_rate, base_rate, seed, 4)?,
            rho,
            lat0: cfg.origin.lat_deg.to_radians(),
            lon0: cfg.origin.lon_deg.to_radians(),
            field,
            cfg,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.cfg
    }

    /// Air density the barometer is generated with.
    pub fn density(&self) -> f64 {
        self.rho
    }

    fn q(&self, x: f64) -> f64 {
        if self.cfg.quantize {
            quantize_sig9(x)
        } else {
            x
        }
    }

    fn q3(&self, v: Vec3) -> Vec3 {
        if self.cfg.quantize {
            quantize_vec(&v)
        } else {
            v
        }
    }

    /// Sample every sensor due on tick `k`. `specific_force` is the body-frame
    /// non-gravitational acceleration acting at this instant.
    pub fn sample(&mut self, k: u64, t: f64, s: &TruthState, specific_force: &Vec3) -> SensorFrame {
        let mut out = SensorFrame::default();
        // Body to NED as three elementary rotations; its transpose maps NED to body.
        let r_bi = rot_z(s.euler.yaw) * rot_y(s.euler.pitch) * rot_x(s.euler.roll);
        let cfg = self.cfg.clone();

        if self.imu.gate.due(k) {
            let accel = specific_force + Vec3::from(cfg.accel_bias) + self.imu.noise3(cfg.accel_noise);
            let gyro = s.rates + Vec3::from(cfg.gyro_bias) + self.imu.noise3(cfg.gyro_noise);
            out.imu = Some(ImuSample {
                stamp: t,
                accel: self.q3(accel),
                gyro: self.q3(gyro),
            });
        }
        if self.baro.gate.due(k) {
            let p = self.rho * GRAVITY * (-s.position.z) + cfg.baro_bias + self.baro.noise(cfg.baro_noise);
            out.baro = Some(BaroSample {
                stamp: t,
                pressure: self.q(p),
            });
        }
        if self.mag.gate.due(k) {
            let m = r_bi.transpose() * self.field + self.mag.noise3(cfg.mag_noise);
            out.mag = Some(MagSample {
                stamp: t,
                field: self.q3(m),
            });
        }
        if self.gnss.gate.due(k) {
            let n = s.position.x + self.gnss.noise(cfg.gnss_position_noise);
            let e = s.position.y + self.gnss.noise(cfg.gnss_position_noise);
            let alt = cfg.origin.alt_m - s.position.z + self.gnss.noise(cfg.gnss_altitude_noise);
            let vel = r_bi * s.velocity + self.gnss.noise3(cfg.gnss_velocity_noise);
            let lat = self.lat0 + n / EARTH_RADIUS_M;
            let lon = self.lon0 + e / (EARTH_RADIUS_M * lat.cos());
            out.gnss = Some(GnssSample {
                stamp: t,
                lat: self.q(lat),
                lon: self.q(lon),
                alt: self.q(alt),
                vel: self.q3(vel),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::EulerAngles;

    fn hover() -> TruthState {
        TruthState {
            position: Vec3::new(0.0, 0.0, -5.0),
            ..Default::default()
        }
    }

    #[test]
    fn hover_without_noise_inverts_the_models() {
        let cfg = SensorConfig {
            quantize: false,
            ..SensorConfig::default().noiseless()
        };
        let mut suite = SensorSuite::new(cfg, 1000.0, 7).unwrap();
        let f = suite.sample(0, 0.0, &hover(), &Vec3::new(0.0, 0.0, -GRAVITY));
        let imu = f.imu.unwrap();
        assert_eq!(imu.accel, Vec3::new(0.0, 0.0, -GRAVITY));
        assert_eq!(imu.gyro, Vec3::zeros());
        let baro = f.baro.unwrap();
        assert!((baro.pressure - 5.0 * suite.density() * GRAVITY).abs() < 1e-12);
    }

    #[test]
    fn gyro_bias_shows_up_at_rest() {
        let cfg = SensorConfig {
            quantize: false,
            gyro_noise: 0.0,
            ..SensorConfig::default()
        };
        let bias = Vec3::from(cfg.gyro_bias);
        let mut suite = SensorSuite::new(cfg, 1000.0, 7).unwrap();
        let f = suite.sample(0, 0.0, &hover(), &Vec3::zeros());
        assert_eq!(f.imu.unwrap().gyro, bias);
    }

    #[test]
    fn density_matches_the_estimator_atmosphere() {
        for alt in [0.0, 500.0, 1387.0, 5000.0] {
            let a = density(alt);
            let b = crate::estimator::air_density(alt).unwrap();
            assert!((a - b).abs() < 1e-12, "{alt}");
        }
    }

    #[test]
    fn field_points_north_and_down() {
        let f = SensorConfig::default().field_ned();
        assert!((f.norm() - 1.0).abs() < 1e-15);
        assert!(f.x > 0.0 && f.z > 0.0 && f.y.abs() < 1e-15);
        let yawed = TruthState {
            euler: EulerAngles::new(0.0, 0.0, 0.5),
            ..Default::default()
        };
        let mut suite = SensorSuite::new(SensorConfig::default().noiseless(), 1000.0, 1).unwrap();
        let m = suite.sample(0, 0.0, &yawed, &Vec3::zeros()).mag.unwrap().field;
        assert!((m.y.atan2(m.x) + 0.5).abs() < 1e-6);
    }

    #[test]
    fn counts_follow_the_rates() {
        let mut suite = SensorSuite::new(SensorConfig::default(), 1000.0, 3).unwrap();
        let mut counts = [0usize; 4];
        for k in 0..10_000u64 {
            let f = suite.sample(k, k as f64 / 1000.0, &hover(), &Vec3::zeros());
            counts[0] += f.imu.is_some() as usize;
            counts[1] += f.baro.is_some() as usize;
            counts[2] += f.mag.is_some() as usize;
            counts[3] += f.gnss.is_some() as usize;
        }
        for (c, rate) in counts.iter().zip([250.0, 25.0, 50.0, 5.0]) {
            assert!((*c as f64 - 10.0 * rate).abs() <= 1.0);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let run = |seed| {
            let mut s = SensorSuite::new(SensorConfig::default(), 1000.0, seed).unwrap();
            (0..200u64)
                .map(|k| s.sample(k, k as f64 / 1000.0, &hover(), &Vec3::zeros()))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
