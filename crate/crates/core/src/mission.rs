//! Mission files: waypoints in NED metres or latitude/longitude/altitude.
//!
//! ```toml
//! v_max = 3.0
//!
//! [origin]            # optional; defaults to the simulator's origin
//! lat_deg = 40.2338
//! lon_deg = -111.6585
//! alt_m = 1387.0
//!
//! [[waypoints]]
//! ned = [0.0, 0.0, -5.0]
//! heading_deg = 130.0
//!
//! [[waypoints]]
//! lla = [40.2339, -111.6585, 1392.0]
//! heading_deg = 130.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{read_file, ConfigError};
use crate::estimator::{gnss_to_local, GeodeticOrigin, OriginDegrees};
use crate::math::GRAVITY;
use crate::navigation::{MissionPlan, Waypoint, WaypointLeg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ned: Option<[f64; 3]>,
    /// Latitude and longitude in degrees, altitude in metres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lla: Option<[f64; 3]>,
    #[serde(default)]
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionFile {
    /// m/s.
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<OriginDegrees>,
    pub waypoints: Vec<WaypointEntry>,
}

impl MissionFile {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read_file(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mission serializes")
    }

    /// Resolve to local NED waypoints. `fallback_origin` anchors LLA entries
    /// when the file has no origin of its own.
    pub fn resolve(&self, fallback_origin: OriginDegrees) -> Result<MissionPlan, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad(format!("mission v_max must be positive (got {})", self.v_max));
        }
        if self.waypoints.is_empty() {
            return bad("mission needs at least one waypoint".into());
        }
        let anchor = self.origin.unwrap_or(fallback_origin);
        let origin: GeodeticOrigin = anchor.to_origin();
        let mut waypoints = Vec::with_capacity(self.waypoints.len());
        for (i, w) in self.waypoints.iter().enumerate() {
            let ned = match (w.ned, w.lla) {
                (Some(ned), None) => ned,
                (None, Some([lat, lon, alt])) => {
                    let (n, e) = gnss_to_local(lat.to_radians(), lon.to_radians(), &origin);
                    [n, e, -(alt - anchor.alt_m)]
                }
                _ => return bad(format!("waypoints[{i}] needs exactly one of `ned` or `lla`")),
            };
            if !(ned.iter().all(|v| v.is_finite()) && w.heading_deg.is_finite()) {
                return bad(format!("waypoints[{i}] has a non-finite coordinate or heading"));
            }
            waypoints.push(Waypoint::new(ned[0], ned[1], ned[2], w.heading_deg.to_radians()));
        }
        Ok(MissionPlan {
            waypoints,
            v_max: self.v_max,
            origin: self.origin.map(OriginDegrees::to_origin),
        })
    }
}

/// Physical checks against the vehicle: every waypoint above ground and every
/// leg's peak acceleration reachable inside the tilt limit.
pub fn check_feasible(
    plan: &MissionPlan,
    min_leg_time: f64,
    tilt_limit_deg: f64,
) -> Result<(), ConfigError> {
    for (i, w) in plan.waypoints.iter().enumerate() {
        if w.position.z >= 0.0 {
            return Err(ConfigError::invalid(format!(
                "waypoints[{i}] is at or below the ground (down = {})",
                w.position.z
            )));
        }
    }
    // Peak |σ''| of the quintic smoothstep is 10/√3.
    let peak = 10.0 / 3f64.sqrt();
    for (i, pair) in plan.waypoints.windows(2).enumerate() {
        let leg = WaypointLeg::new(pair[0], pair[1], plan.v_max, min_leg_time);
        let dist = (pair[1].position - pair[0].position).norm();
        let accel = peak * dist / (leg.duration * leg.duration);
        let tilt = (accel / GRAVITY).atan().to_degrees();
        if tilt >= tilt_limit_deg {
            return Err(ConfigError::invalid(format!(
                "leg {i} needs {tilt:.1} deg of tilt, beyond the {tilt_limit_deg} deg limit; lower v_max"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_MISSION: &str = r#"
v_max = 3.0
[[waypoints]]
ned = [0.0, 0.0, -5.0]
heading_deg = 130.0
[[waypoints]]
ned = [-20.0, 0.0, -8.0]
heading_deg = 130.0
[[waypoints]]
ned = [-20.0, 20.0, -5.0]
heading_deg = 130.0
"#;

    fn origin() -> OriginDegrees {
        OriginDegrees {
            lat_deg: 40.0,
            lon_deg: -111.0,
            alt_m: 1400.0,
        }
    }

    #[test]
    fn ned_mission_resolves() {
        let m = MissionFile::from_toml_str(REFERENCE_MISSION, Path::new("m.toml")).unwrap();
        let plan = m.resolve(origin()).unwrap();
        assert_eq!(plan.waypoints.len(), 3);
        assert_eq!(plan.waypoints[1].position.x, -20.0);
        assert!((plan.waypoints[0].heading - 130f64.to_radians()).abs() < 1e-15);
        check_feasible(&plan, 2.0, 30.0).unwrap();
    }

    #[test]
    fn lla_entries_convert_through_the_origin() {
        let text = r#"
v_max = 2.0
[[waypoints]]
lla = [40.0, -111.0, 1405.0]
[[waypoints]]
lla = [40.0001, -111.0, 1405.0]
"#;
        let plan = MissionFile::from_toml_str(text, Path::new("m.toml"))
            .unwrap()
            .resolve(origin())
            .unwrap();
        assert!((plan.waypoints[0].position.norm() - 5.0).abs() < 1e-9);
        assert_eq!(plan.waypoints[0].position.z, -5.0);
        let north = 1e-4f64.to_radians() * 6_378_137.0;
        assert!((plan.waypoints[1].position.x - north).abs() < 1e-6);
    }

    #[test]
    fn malformed_entries_are_rejected() {
        let both = "v_max = 1.0\n[[waypoints]]\nned = [0.0, 0.0, -1.0]\nlla = [0.0, 0.0, 0.0]\n";
        let m = MissionFile::from_toml_str(both, Path::new("m.toml")).unwrap();
        assert!(m.resolve(origin()).is_err());

        let nan = "v_max = 1.0\n[[waypoints]]\nned = [nan, 0.0, -1.0]\n";
        let m = MissionFile::from_toml_str(nan, Path::new("m.toml")).unwrap();
        assert!(m.resolve(origin()).unwrap_err().to_string().contains("non-finite"));

        let slow = "v_max = 0.0\n[[waypoints]]\nned = [0.0, 0.0, -1.0]\n";
        let m = MissionFile::from_toml_str(slow, Path::new("m.toml")).unwrap();
        assert!(m.resolve(origin()).is_err());
    }

    #[test]
    fn underground_waypoint_fails_the_physical_check() {
        let text = "v_max = 1.0\n[[waypoints]]\nned = [0.0, 0.0, 1.0]\n";
        let plan = MissionFile::from_toml_str(text, Path::new("m.toml"))
            .unwrap()
            .resolve(origin())
            .unwrap();
        assert!(check_feasible(&plan, 2.0, 30.0).is_err());
    }
}
