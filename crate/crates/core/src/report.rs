//! Run metrics and the summary report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::math::{wrap_angle, Vec3};
use crate::messages::{Message, MissionEventKind, StateEstimate, TruthSample};
use crate::navigation::Waypoint;

/// Closest point to `p` on the polyline through `points`.
pub fn closest_on_polyline(p: &Vec3, points: &[Vec3]) -> Option<Vec3> {
    if points.len() == 1 {
        return Some(points[0]);
    }
    points
        .windows(2)
        .map(|seg| {
            let (a, b) = (seg[0], seg[1]);
            let ab = b - a;
            let len2 = ab.norm_squared();
            let s = if len2 > 0.0 {
                ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            a + ab * s
        })
        .min_by(|x, y| (p - x).norm_squared().total_cmp(&(p - y).norm_squared()))
}

/// Per-axis and total RMS distance from the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRmse {
    pub north: f64,
    pub east: f64,
    pub down: f64,
    pub total: f64,
    pub samples: usize,
}

/// RMS of the offset between each position and its closest point on the
/// straight-line waypoint path.
pub fn path_rmse(positions: &[Vec3], waypoints: &[Waypoint]) -> Option<PathRmse> {
    let pts: Vec<Vec3> = waypoints.iter().map(|w| w.position).collect();
    if positions.is_empty() || pts.is_empty() {
        return None;
    }
    let mut sum = Vec3::zeros();
    for p in positions {
        let e = p - closest_on_polyline(p, &pts)?;
        sum += e.component_mul(&e);
    }
    let mean = sum / positions.len() as f64;
    Some(PathRmse {
        north: mean.x.sqrt(),
        east: mean.y.sqrt(),
        down: mean.z.sqrt(),
        total: mean.sum().sqrt(),
        samples: positions.len(),
    })
}

/// RMS of the error-vector norms, estimate minus truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRms {
    /// m.
    pub position: f64,
    /// Body-frame velocity, m/s.
    pub velocity: f64,
    /// Euler angles, wrapped, deg.
    pub attitude_deg: f64,
    pub samples: usize,
}

/// Pair estimates with truth samples of identical stamp inside `[from, to]`.
pub fn estimator_rms(truth: &[TruthSample], estimates: &[StateEstimate], from: f64, to: f64) -> Option<EstimatorRms> {
    let mut i = 0;
    let (mut sp, mut sv, mut sa, mut n) = (0.0, 0.0, 0.0, 0usize);
    for t in truth.iter().filter(|t| t.stamp >= from && t.stamp <= to) {
        while i < estimates.len() && estimates[i].stamp < t.stamp {
            i += 1;
        }
        let Some(e) = estimates.get(i).filter(|e| e.stamp == t.stamp) else {
            continue;
        };
        sp += (e.position - t.position).norm_squared();
        sv += (e.velocity_body - t.velocity_body).norm_squared();
        let da = Vec3::new(
            wrap_angle(e.euler.roll - t.euler.roll),
            wrap_angle(e.euler.pitch - t.euler.pitch),
            wrap_angle(e.euler.yaw - t.euler.yaw),
        );
        sa += da.norm_squared();
        n += 1;
    }
    (n > 0).then(|| EstimatorRms {
        position: (sp / n as f64).sqrt(),
        velocity: (sv / n as f64).sqrt(),
        attitude_deg: (sa / n as f64).sqrt().to_degrees(),
        samples: n,
    })
}

/// Mission-level results pulled from a run's message trace.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub takeoff_time: Option<f64>,
    pub complete_time: Option<f64>,
    /// (waypoint index, time, distance of the estimate from the waypoint).
    pub arrivals: Vec<(usize, f64, f64)>,
    pub path: Option<PathRmse>,
    pub estimator: Option<EstimatorRms>,
}

/// Path RMSE covers the estimates between takeoff completion and mission
/// completion. Estimator RMS covers the same window, or from takeoff to the
/// end of the trace when the mission did not complete.
pub fn mission_metrics(trace: &[Message], mission: &[Waypoint]) -> MissionMetrics {
    let mut m = MissionMetrics::default();
    let mut estimates = Vec::new();
    let mut truth = Vec::new();
    let mut all_wp: Vec<Waypoint> = Vec::new();
    let mut pending = Vec::new();
    for msg in trace {
        match msg {
            Message::Estimate(e) => estimates.push(*e),
            Message::Truth(t) => truth.push(*t),
            Message::Mission(ev) => match ev.kind {
                MissionEventKind::TakeoffComplete => m.takeoff_time = Some(ev.stamp),
                MissionEventKind::MissionComplete => m.complete_time = Some(ev.stamp),
                MissionEventKind::WaypointReached => pending.push((ev.index, ev.stamp)),
                MissionEventKind::LegStarted => {}
            },
            _ => {}
        }
    }
    // Event indices count the takeoff waypoint, which sits above the origin
    // at the first waypoint's altitude.
    if let Some(first) = mission.first() {
        all_wp.push(Waypoint::new(0.0, 0.0, first.position.z, first.heading));
        all_wp.extend_from_slice(mission);
    }
    for (idx, t) in pending {
        let est = estimates.iter().find(|e| e.stamp >= t).or(estimates.last());
        let dist = match (est, all_wp.get(idx)) {
            (Some(e), Some(w)) => (e.position - w.position).norm(),
            _ => f64::NAN,
        };
        m.arrivals.push((idx, t, dist));
    }
    let Some(t0) = m.takeoff_time else {
        return m;
    };
    let t1 = m.complete_time.unwrap_or(f64::INFINITY);
    let positions: Vec<Vec3> = estimates
        .iter()
        .filter(|e| e.stamp >= t0 && e.stamp <= t1)
        .map(|e| e.position)
        .collect();
    m.path = path_rmse(&positions, mission);
    m.estimator = estimator_rms(&truth, &estimates, t0, t1);
    m
}

/// Machine-readable run summary, written as `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub exit_code: i32,
    pub reason: String,
    pub seed: u64,
    pub config_hash: String,
    pub sim_time: f64,
    pub mission_complete: bool,
    pub waypoints_reached: usize,
    pub arrival_times: Vec<f64>,
    pub arrival_errors_m: Vec<f64>,
    pub takeoff_time: Option<f64>,
    pub complete_time: Option<f64>,
    pub path_rmse_north: Option<f64>,
    pub path_rmse_east: Option<f64>,
    pub path_rmse_down: Option<f64>,
    pub path_rmse_total: Option<f64>,
    pub est_rms_position_m: Option<f64>,
    pub est_rms_velocity_mps: Option<f64>,
    pub est_rms_attitude_deg: Option<f64>,
    pub controller_failsafe_ticks: u64,
    pub warnings: usize,
}

impl Summary {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>, unit: &str| match v {
            Some(x) => format!("{x:.3} {unit}"),
            None => "unavailable".to_string(),
        };
        let _ = writeln!(s, "status: {} (exit {})", self.status, self.exit_code);
        let _ = writeln!(s, "reason: {}", self.reason);
        let _ = writeln!(s, "seed: {}  config: {}", self.seed, self.config_hash);
        let _ = writeln!(s, "simulated time: {:.3} s", self.sim_time);
        let _ = writeln!(s, "waypoints reached: {}", self.waypoints_reached);
        for (i, (t, e)) in self.arrival_times.iter().zip(&self.arrival_errors_m).enumerate() {
            let _ = writeln!(s, "  #{i}: t = {t:.2} s, estimate {e:.3} m from waypoint");
        }
        let _ = writeln!(
            s,
            "path RMSE (N/E/D/total): {} / {} / {} / {}",
            opt(self.path_rmse_north, "m"),
            opt(self.path_rmse_east, "m"),
            opt(self.path_rmse_down, "m"),
            opt(self.path_rmse_total, "m")
        );
        let _ = writeln!(
            s,
            "estimator RMS: position {}, velocity {}, attitude {}",
            opt(self.est_rms_position_m, "m"),
            opt(self.est_rms_velocity_mps, "m/s"),
            opt(self.est_rms_attitude_deg, "deg")
        );
        if self.controller_failsafe_ticks > 0 {
            let _ = writeln!(s, "controller failsafe ticks: {}", self.controller_failsafe_ticks);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::EulerAngles;

    #[test]
    fn polyline_projection() {
        let pts = [Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0), Vec3::new(10.0, 10.0, 0.0)];
        let c = closest_on_polyline(&Vec3::new(5.0, 1.0, 0.0), &pts).unwrap();
        assert_eq!(c, Vec3::new(5.0, 0.0, 0.0));
        let c = closest_on_polyline(&Vec3::new(12.0, -3.0, 0.0), &pts).unwrap();
        assert_eq!(c, Vec3::new(10.0, 0.0, 0.0));
        let c = closest_on_polyline(&Vec3::new(11.0, 4.0, 2.0), &pts).unwrap();
        assert_eq!(c, Vec3::new(10.0, 4.0, 0.0));
    }

    #[test]
    fn constant_offset_rmse() {
        let wps = [Waypoint::new(0.0, 0.0, -5.0, 0.0), Waypoint::new(20.0, 0.0, -5.0, 0.0)];
        let pos: Vec<Vec3> = (0..=20).map(|i| Vec3::new(i as f64, 0.3, -5.4)).collect();
        let r = path_rmse(&pos, &wps).unwrap();
        assert!(r.north.abs() < 1e-12);
        assert!((r.east - 0.3).abs() < 1e-12);
        assert!((r.down - 0.4).abs() < 1e-12);
        assert!((r.total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimator_rms_pairs_equal_stamps_only() {
        let truth = [0.0, 0.01, 0.02].map(|t| TruthSample {
            stamp: t,
            position: Vec3::zeros(),
            velocity_body: Vec3::zeros(),
            euler: EulerAngles::new(0.0, 0.0, 3.1),
            body_rates: Vec3::zeros(),
            gyro_bias: Vec3::zeros(),
        });
        let est = [0.0, 0.004, 0.02].map(|t| StateEstimate {
            stamp: t,
            position: Vec3::new(0.0, 3.0, 4.0),
            velocity_body: Vec3::new(0.1, 0.0, 0.0),
            euler: EulerAngles::new(0.0, 0.0, -3.1),
            gyro_bias: Vec3::zeros(),
            body_rates: Vec3::zeros(),
        });
        let r = estimator_rms(&truth, &est, 0.0, 1.0).unwrap();
        assert_eq!(r.samples, 2);
        assert!((r.position - 5.0).abs() < 1e-12);
        assert!((r.velocity - 0.1).abs() < 1e-12);
        let wrapped = (2.0 * std::f64::consts::PI - 6.2).to_degrees();
        assert!((r.attitude_deg - wrapped).abs() < 1e-9);
    }
}
