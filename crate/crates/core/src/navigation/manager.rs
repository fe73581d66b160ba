use serde::{Deserialize, Serialize};

use super::{TrajectorySetpoint, Waypoint, WaypointLeg};
use crate::controller::{ControlCommand, Mode};
use crate::messages::{MissionEvent, MissionEventKind, StateEstimate};
use crate::math::wrap_angle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManagerConfig {
    /// Shortest allowed leg, s.
    pub min_leg_time: f64,
    /// Takeoff altitude above the origin, m. Defaults to the first waypoint's.
    pub takeoff_altitude: Option<f64>,
    /// Climb-rate limit during takeoff, m/s.
    pub climb_rate: f64,
    /// Altitude error to climb-rate gain during takeoff, 1/s.
    pub climb_gain: f64,
    /// Takeoff is complete once altitude error and vertical speed are below this.
    pub takeoff_tolerance: f64,
    /// Distance at which a waypoint counts as reached, m.
    pub arrival_radius: f64,
    /// Time to keep holding after the mission completes before stopping, s.
    pub hold_after_complete: f64,
}

impl Default for ManagerConfig {
    fn default() -> Self {
        Self {
            min_leg_time: 2.0,
            takeoff_altitude: None,
            climb_rate: 1.5,
            climb_gain: 1.0,
            takeoff_tolerance: 0.3,
            arrival_radius: 0.5,
            hold_after_complete: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    /// Climbing to the takeoff waypoint under position/climb-rate control.
    Takeoff,
    /// Flying leg `leg` with `elapsed` seconds into it.
    Legs { leg: usize, elapsed: f64 },
    /// Holding the final waypoint.
    Hold,
}

/// What the manager produced on one tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ManagerOutput {
    pub setpoint: Option<TrajectorySetpoint>,
    /// Direct controller command, used during takeoff.
    pub command: Option<ControlCommand>,
    pub events: Vec<MissionEvent>,
    /// Mission complete and the post-completion hold has elapsed.
    pub finished: bool,
}

/// Sequences waypoint legs and samples the active one each tick.
///
/// A takeoff waypoint above the origin is prepended to the mission. Takeoff
/// is flown with direct NE-position / D-velocity / yaw commands; the legs are
/// then flown through trajectory setpoints. Waypoint indices in events refer
/// to the list including the takeoff waypoint.
#[derive(Debug, Clone)]
pub struct PathManager {
    config: ManagerConfig,
    waypoints: Vec<Waypoint>,
    legs: Vec<WaypointLeg>,
    phase: Phase,
    next_arrival: usize,
    completed_at: Option<f64>,
}

impl PathManager {
    /// `mission` must contain at least one waypoint.
    pub fn new(mission: &[Waypoint], v_max: f64, config: ManagerConfig) -> Self {
        assert!(!mission.is_empty(), "mission needs at least one waypoint");
        let first = mission[0];
        let down = config.takeoff_altitude.map(|a| -a).unwrap_or(first.position.z);
        let takeoff = Waypoint::new(0.0, 0.0, down, first.heading);
        let mut waypoints = Vec::with_capacity(mission.len() + 1);
        waypoints.push(takeoff);
        waypoints.extend_from_slice(mission);
        let legs = waypoints
            .windows(2)
            .map(|w| WaypointLeg::new(w[0], w[1], v_max, config.min_leg_time))
            .collect();
        Self {
            config,
            waypoints,
            legs,
            phase: Phase::Takeoff,
            next_arrival: 0,
            completed_at: None,
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn legs(&self) -> &[WaypointLeg] {
        &self.legs
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Sum of all leg durations, s.
    pub fn total_leg_time(&self) -> f64 {
        self.legs.iter().map(|l| l.duration).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.completed_at.is_some()
    }

    fn takeoff_command(&self, est: &StateEstimate, now: f64) -> ControlCommand {
        let target = self.waypoints[0];
        let climb = (self.config.climb_gain * (target.position.z - est.position.z))
            .clamp(-self.config.climb_rate, self.config.climb_rate);
        ControlCommand {
            stamp: now,
            mode: Mode::NePosDVelYaw,
            values: [target.position.x, target.position.y, climb, target.heading],
        }
    }

    fn leg_started(&self, leg: usize, now: f64, out: &mut ManagerOutput) {
        out.events.push(MissionEvent {
            stamp: now,
            kind: MissionEventKind::LegStarted,
            index: leg,
        });
    }

    /// Advance by `dt` and produce this tick's output.
    pub fn step(&mut self, est: &StateEstimate, now: f64, dt: f64) -> ManagerOutput {
        let mut out = ManagerOutput::default();
        match self.phase {
            Phase::Takeoff => {
                let target = self.waypoints[0];
                let err = (target.position - est.position).norm();
                let vd = est.velocity_ned().z;
                if err < self.config.takeoff_tolerance && vd.abs() < self.config.takeoff_tolerance {
                    out.events.push(MissionEvent {
                        stamp: now,
                        kind: MissionEventKind::TakeoffComplete,
                        index: 0,
                    });
                    if self.legs.is_empty() {
                        self.phase = Phase::Hold;
                    } else {
                        self.phase = Phase::Legs { leg: 0, elapsed: 0.0 };
                        self.leg_started(0, now, &mut out);
                    }
                } else {
                    out.command = Some(self.takeoff_command(est, now));
                }
            }
            Phase::Legs { .. } | Phase::Hold => {}
        }

        match self.phase {
            Phase::Takeoff => {}
            Phase::Legs { leg, elapsed } => {
                let mut sp = self.legs[leg].sample(elapsed);
                sp.stamp = now;
                sp.leg = leg;
                out.setpoint = Some(sp);
                let mut elapsed = elapsed + dt;
                let mut leg = leg;
                while elapsed >= self.legs[leg].duration {
                    elapsed -= self.legs[leg].duration;
                    leg += 1;
                    if leg == self.legs.len() {
                        break;
                    }
                    self.leg_started(leg, now + dt, &mut out);
                }
                self.phase = if leg == self.legs.len() {
                    Phase::Hold
                } else {
                    Phase::Legs { leg, elapsed }
                };
            }
            Phase::Hold => {
                let last = self.waypoints.len() - 1;
                out.setpoint = Some(TrajectorySetpoint::hold(
                    &self.waypoints[last],
                    self.legs.len().saturating_sub(1),
                    now,
                ));
            }
        }

        self.track_arrivals(est, now, &mut out);
        if let Some(t) = self.completed_at {
            out.finished = now - t >= self.config.hold_after_complete;
        }
        out
    }

    fn active_leg(&self) -> Option<usize> {
        match self.phase {
            Phase::Takeoff => None,
            Phase::Legs { leg, .. } => Some(leg),
            Phase::Hold => Some(self.legs.len()),
        }
    }

    fn track_arrivals(&mut self, est: &StateEstimate, now: f64, out: &mut ManagerOutput) {
        while self.next_arrival < self.waypoints.len() {
            let k = self.next_arrival;
            // Waypoint k can only be reached once the leg ending at it is active.
            let eligible = match self.active_leg() {
                None => k == 0,
                Some(active) => k <= active + 1,
            };
            if !eligible {
                break;
            }
            let w = &self.waypoints[k];
            let close = (w.position - est.position).norm() <= self.config.arrival_radius;
            let heading_ok = wrap_angle(w.heading - est.euler.yaw).abs() <= 0.35;
            if !(close && heading_ok) {
                break;
            }
            out.events.push(MissionEvent {
                stamp: now,
                kind: MissionEventKind::WaypointReached,
                index: k,
            });
            self.next_arrival += 1;
        }
        if self.completed_at.is_none()
            && self.next_arrival == self.waypoints.len()
            && matches!(self.phase, Phase::Hold)
        {
            self.completed_at = Some(now);
            out.events.push(MissionEvent {
                stamp: now,
                kind: MissionEventKind::MissionComplete,
                index: self.waypoints.len() - 1,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{EulerAngles, Vec3};

    fn estimate_at(p: Vec3, yaw: f64) -> StateEstimate {
        StateEstimate {
            stamp: 0.0,
            position: p,
            velocity_body: Vec3::zeros(),
            euler: EulerAngles::new(0.0, 0.0, yaw),
            gyro_bias: Vec3::zeros(),
            body_rates: Vec3::zeros(),
        }
    }

    fn reference_mission() -> Vec<Waypoint> {
        let h = 130f64.to_radians();
        vec![
            Waypoint::new(0.0, 0.0, -5.0, h),
            Waypoint::new(-20.0, 0.0, -8.0, h),
            Waypoint::new(-20.0, 20.0, -5.0, h),
        ]
    }

    #[test]
    fn takeoff_issues_climb_commands_then_starts_legs() {
        let mut m = PathManager::new(&reference_mission(), 3.0, ManagerConfig::default());
        let out = m.step(&estimate_at(Vec3::zeros(), 0.0), 0.0, 0.01);
        let cmd = out.command.unwrap();
        assert_eq!(cmd.mode, Mode::NePosDVelYaw);
        assert_eq!(cmd.values[2], -1.5);
        assert!(out.setpoint.is_none());

        let h = 130f64.to_radians();
        let out = m.step(&estimate_at(Vec3::new(0.0, 0.0, -5.0), h), 1.0, 0.01);
        assert!(out.command.is_none());
        assert!(out.setpoint.is_some());
        assert!(matches!(m.phase(), Phase::Legs { leg: 0, .. }));
    }

    #[test]
    fn legs_run_in_order_for_their_total_duration() {
        let mut m = PathManager::new(&reference_mission(), 3.0, ManagerConfig::default());
        let h = 130f64.to_radians();
        let dt = 0.01;
        let hover = estimate_at(Vec3::new(0.0, 0.0, -5.0), h);
        m.step(&hover, 0.0, dt);
        let mut ticks = 0usize;
        let mut legs_seen = vec![];
        while !matches!(m.phase(), Phase::Hold) {
            let out = m.step(&hover, ticks as f64 * dt, dt);
            let sp = out.setpoint.unwrap();
            if legs_seen.last() != Some(&sp.leg) {
                legs_seen.push(sp.leg);
            }
            ticks += 1;
        }
        assert_eq!(legs_seen, vec![0, 1, 2]);
        let expected = m.total_leg_time();
        let flown = ticks as f64 * dt;
        assert!((flown - expected).abs() <= dt, "{flown} vs {expected}");
        // Oracle: sum of the individual leg durations.
        let wps = m.waypoints().to_vec();
        let sum: f64 = wps
            .windows(2)
            .map(|w| super::super::leg_duration(&w[0], &w[1], 3.0, 2.0))
            .sum();
        assert_eq!(expected, sum);
    }

    #[test]
    fn single_waypoint_mission_holds() {
        let w = Waypoint::new(1.0, 2.0, -3.0, 0.5);
        let mut m = PathManager::new(&[w], 3.0, ManagerConfig::default());
        let est = estimate_at(Vec3::new(0.0, 0.0, -3.0), 0.5);
        m.step(&est, 0.0, 0.01);
        for i in 0..500 {
            let holding = matches!(m.phase(), Phase::Hold);
            let out = m.step(&est, i as f64 * 0.01, 0.01);
            let sp = out.setpoint.unwrap();
            if holding {
                assert_eq!(sp.position, w.position);
                assert_eq!(sp.velocity, Vec3::zeros());
                assert_eq!(sp.acceleration, Vec3::zeros());
            }
        }
        assert!(matches!(m.phase(), Phase::Hold));
    }

    #[test]
    fn stepping_is_deterministic() {
        let run = || {
            let mut m = PathManager::new(&reference_mission(), 3.0, ManagerConfig::default());
            let est = estimate_at(Vec3::new(0.0, 0.0, -5.0), 130f64.to_radians());
            (0..3000)
                .map(|i| m.step(&est, i as f64 * 0.01, 0.01))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
