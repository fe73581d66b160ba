//! Waypoint planning, smoothstep trajectory generation and trajectory
//! following.

mod follower;
mod manager;


use crate::estimator::GeodeticOrigin;
use crate::math::{quintic_smoothstep, wrap_angle, Vec3, SMOOTHSTEP_PEAK_SLOPE};

pub use follower::{
    flat_attitude, AngleThrustSetpoint, FollowerGains, FollowerWarning, TrajectoryFollower,
};
pub use manager::{ManagerConfig, ManagerOutput, PathManager, Phase};

/// Desired position (NED, m) and heading (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Vec3,
    pub heading: f64,
}

impl Waypoint {
    pub fn new(north: f64, east: f64, down: f64, heading: f64) -> Self {
        Self {
            position: Vec3::new(north, east, down),
            heading: wrap_angle(heading),
        }
    }

    pub fn is_finite(&self) -> bool {
        crate::math::vec3_is_finite(&self.position) && self.heading.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub waypoints: Vec<Waypoint>,
    /// Maximum path speed, m/s.
    pub v_max: f64,
    pub origin: Option<GeodeticOrigin>,
}

/// One sample of the reference trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectorySetpoint {
    pub stamp: f64,
    /// Index of the leg this sample belongs to.
    pub leg: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub heading: f64,
    pub heading_rate: f64,
    pub heading_accel: f64,
}

impl TrajectorySetpoint {
    /// Stationary setpoint at a waypoint.
    pub fn hold(w: &Waypoint, leg: usize, stamp: f64) -> Self {
        Self {
            stamp,
            leg,
            position: w.position,
            heading: w.heading,
            ..Default::default()
        }
    }
}

/// Straight-line segment between two waypoints traversed on a quintic
/// smoothstep time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointLeg {
    pub start: Waypoint,
    pub end: Waypoint,
    /// Leg duration, s.
    pub duration: f64,
}

/// Leg duration such that the peak speed of the smoothstep profile equals
/// `v_max`, floored at `t_min`.
pub fn leg_duration(start: &Waypoint, end: &Waypoint, v_max: f64, t_min: f64) -> f64 {
    let distance = (end.position - start.position).norm();
    (distance * SMOOTHSTEP_PEAK_SLOPE / v_max).max(t_min)
}

impl WaypointLeg {
    pub fn new(start: Waypoint, end: Waypoint, v_max: f64, t_min: f64) -> Self {
        Self {
            start,
            end,
            duration: leg_duration(&start, &end, v_max, t_min),
        }
    }

    /// Sample at elapsed time `t` along the leg (clamped to the leg).
    pub fn sample(&self, t: f64) -> TrajectorySetpoint {
        let tau = (t / self.duration).clamp(0.0, 1.0);
        let (s, ds, dds) = quintic_smoothstep(tau);
        let delta = self.end.position - self.start.position;
        let dpsi = wrap_angle(self.end.heading - self.start.heading);
        let inv_t = 1.0 / self.duration;
        let inv_t2 = inv_t * inv_t;
        // σ(1) = 1 exactly, so the end of the leg lands on the end waypoint.
        let position = if tau >= 1.0 {
            self.end.position
        } else {
            self.start.position + delta * s
        };
        let heading = if tau >= 1.0 {
            self.end.heading
        } else {
            wrap_angle(self.start.heading + dpsi * s)
        };
        TrajectorySetpoint {
            stamp: 0.0,
            leg: 0,
            position,
            velocity: delta * (ds * inv_t),
            acceleration: delta * (dds * inv_t2),
            heading,
            heading_rate: dpsi * ds * inv_t,
            heading_accel: dpsi * dds * inv_t2,
        }
    }
}

/// Convenience wrapper over [`WaypointLeg::sample`].
pub fn sample_trajectory(leg: &WaypointLeg, t: f64) -> TrajectorySetpoint {
    leg.sample(t)
}

/// Holds the mission and hands it out to the manager.
#[derive(Debug, Clone)]
pub struct PathPlanner {
    plan: MissionPlan,
}

impl PathPlanner {
    pub fn new(plan: MissionPlan) -> Self {
        Self { plan }
    }

    pub fn plan(&self) -> &MissionPlan {
        &self.plan
    }
}
