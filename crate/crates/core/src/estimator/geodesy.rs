//! Spherical-earth conversion between geodetic fixes and local north/east.

use serde::{Deserialize, Serialize};

use crate::math::wrap_angle;

/// Equatorial radius used for the spherical earth, m.
pub const EARTH_RADIUS: f64 = 6_378_137.0;

/// Geodetic anchor of the local NED frame. Angles in radians, altitude in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticOrigin {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

impl GeodeticOrigin {
    pub fn from_degrees(lat_deg: f64, lon_deg: f64, alt: f64) -> Self {
        Self {
            lat: lat_deg.to_radians(),
            lon: lon_deg.to_radians(),
            alt,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && self.alt.is_finite()
            && self.lat.abs() <= std::f64::consts::FRAC_PI_2
    }
}

/// Local north/east position of a fix, m.
pub fn gnss_to_local(lat: f64, lon: f64, origin: &GeodeticOrigin) -> (f64, f64) {
    let north = (lat - origin.lat) * EARTH_RADIUS;
    let east = wrap_angle(lon - origin.lon) * EARTH_RADIUS * lat.cos();
    (north, east)
}

/// Inverse of [`gnss_to_local`].
pub fn local_to_gnss(north: f64, east: f64, origin: &GeodeticOrigin) -> (f64, f64) {
    let lat = origin.lat + north / EARTH_RADIUS;
    let lon = wrap_angle(origin.lon + east / (EARTH_RADIUS * lat.cos()));
    (lat, lon)
}
