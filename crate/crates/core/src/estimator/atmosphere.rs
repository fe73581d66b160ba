//! Standard atmosphere, troposphere layer only.

use crate::math::GRAVITY;

pub const SEA_LEVEL_TEMPERATURE: f64 = 288.15;
pub const SEA_LEVEL_PRESSURE: f64 = 101_325.0;
pub const LAPSE_RATE: f64 = 0.0065;
pub const GAS_CONSTANT_AIR: f64 = 287.053;
pub const TROPOPAUSE_ALTITUDE: f64 = 11_000.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("altitude {0} m is outside the troposphere model [0, 11000) m")]
pub struct OutOfTroposphere(pub f64);

/// Air density in kg/m³ at an altitude above mean sea level.
pub fn air_density(alt_msl: f64) -> Result<f64, OutOfTroposphere> {
    if !(0.0..TROPOPAUSE_ALTITUDE).contains(&alt_msl) {
        return Err(OutOfTroposphere(alt_msl));
    }
    let temperature = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * alt_msl;
    let exponent = GRAVITY / (LAPSE_RATE * GAS_CONSTANT_AIR);
    let pressure = SEA_LEVEL_PRESSURE * (temperature / SEA_LEVEL_TEMPERATURE).powf(exponent);
    Ok(pressure / (GAS_CONSTANT_AIR * temperature))
}
