//! Default node implementations.

use std::any::Any;

use super::{Context, Node, NodeFault, Role};
use crate::controller::{Cascade, ControlCommand, GainSet, VehicleLimits};
use crate::estimator::{Ekf, EstimatorConfig, SensorMessage};
use crate::messages::{Message, StateEstimate, WaypointList};
use crate::navigation::{FollowerGains, ManagerConfig, MissionPlan, PathManager, TrajectoryFollower, TrajectorySetpoint};
use crate::sim::{SimConfig, Simulator};

/// Runs the simulator one physics step per call.
pub struct SimNode {
    sim: Simulator,
}

impl SimNode {
    pub fn new(cfg: SimConfig, base_rate: f64, seed: u64) -> Result<Self, NodeFault> {
        let sim = Simulator::new(cfg, base_rate, seed).map_err(|e| NodeFault::new(Role::Sim, e.to_string()))?;
        Ok(Self { sim })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }
}

impl Node for SimNode {
    fn role(&self) -> Role {
        Role::Sim
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        if let Some(cmd) = ctx.take_inbox().into_iter().rev().find_map(|m| match m {
            Message::Firmware(c) => Some(c),
            _ => None,
        }) {
            self.sim.set_command(cmd);
        }
        let out = self.sim.step().map_err(|e| NodeFault::new(Role::Sim, e.to_string()))?;
        let f = out.sensors;
        if let Some(m) = f.imu {
            ctx.publish(Message::Imu(m));
        }
        if let Some(m) = f.baro {
            ctx.publish(Message::Baro(m));
        }
        if let Some(m) = f.mag {
            ctx.publish(Message::Mag(m));
        }
        if let Some(m) = f.gnss {
            ctx.publish(Message::Gnss(m));
        }
        if let Some(t) = out.truth {
            ctx.publish(Message::Truth(t));
        }
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn to_sensor_message(m: &Message) -> Option<SensorMessage> {
    Some(match m {
        Message::Imu(s) => SensorMessage::Imu(*s),
        Message::Baro(s) => SensorMessage::Baro(*s),
        Message::Mag(s) => SensorMessage::Mag(*s),
        Message::Gnss(s) => SensorMessage::Gnss(*s),
        _ => return None,
    })
}

pub struct EstimatorNode {
    ekf: Ekf,
}

impl EstimatorNode {
    pub fn new(cfg: EstimatorConfig) -> Self {
        Self { ekf: Ekf::new(cfg) }
    }

    pub fn ekf(&self) -> &Ekf {
        &self.ekf
    }
}

impl Node for EstimatorNode {
    fn role(&self) -> Role {
        Role::Estimator
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        let batch: Vec<SensorMessage> = ctx.inbox().iter().filter_map(to_sensor_message).collect();
        let estimates = self
            .ekf
            .process(&batch)
            .map_err(|e| NodeFault::new(Role::Estimator, e.to_string()))?;
        for e in estimates {
            ctx.publish(Message::Estimate(e));
        }
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Publishes the mission once.
pub struct PlannerNode {
    plan: MissionPlan,
    sent: bool,
}

impl PlannerNode {
    pub fn new(plan: MissionPlan) -> Self {
        Self { plan, sent: false }
    }
}

impl Node for PlannerNode {
    fn role(&self) -> Role {
        Role::Planner
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        if !self.sent {
            ctx.publish(Message::Waypoints(WaypointList {
                stamp: ctx.now,
                waypoints: self.plan.waypoints.clone(),
                v_max: self.plan.v_max,
            }));
            self.sent = true;
        }
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub struct ManagerNode {
    config: ManagerConfig,
    manager: Option<PathManager>,
    estimate: Option<StateEstimate>,
}

impl ManagerNode {
    pub fn new(config: ManagerConfig) -> Self {
        Self {
            config,
            manager: None,
            estimate: None,
        }
    }

    pub fn manager(&self) -> Option<&PathManager> {
        self.manager.as_ref()
    }
}

impl Node for ManagerNode {
    fn role(&self) -> Role {
        Role::Manager
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        for m in ctx.take_inbox() {
            match m {
                Message::Waypoints(w) if !w.waypoints.is_empty() => {
                    self.manager = Some(PathManager::new(&w.waypoints, w.v_max, self.config.clone()));
                }
                Message::Estimate(e) => self.estimate = Some(e),
                _ => {}
            }
        }
        let (Some(mgr), Some(est)) = (&mut self.manager, &self.estimate) else {
            return Ok(());
        };
        let out = mgr.step(est, ctx.now, ctx.dt);
        for e in out.events {
            ctx.publish(Message::Mission(e));
        }
        if let Some(sp) = out.setpoint {
            ctx.publish(Message::Trajectory(sp));
        }
        if let Some(c) = out.command {
            ctx.publish(Message::Command(c));
        }
        if out.finished {
            ctx.stop(super::ExitStatus::Completed, "mission complete");
        }
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub struct FollowerNode {
    follower: TrajectoryFollower,
    setpoint: Option<TrajectorySetpoint>,
    estimate: Option<StateEstimate>,
}

impl FollowerNode {
    pub fn new(gains: FollowerGains, mass: f64) -> Self {
        Self {
            follower: TrajectoryFollower::new(gains, mass),
            setpoint: None,
            estimate: None,
        }
    }

    pub fn follower(&self) -> &TrajectoryFollower {
        &self.follower
    }
}

impl Node for FollowerNode {
    fn role(&self) -> Role {
        Role::Follower
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        let mut fresh = false;
        for m in ctx.take_inbox() {
            match m {
                Message::Trajectory(sp) => {
                    self.setpoint = Some(sp);
                    fresh = true;
                }
                Message::Estimate(e) => self.estimate = Some(e),
                _ => {}
            }
        }
        // Only follow while the manager is publishing setpoints.
        let (true, Some(sp), Some(est)) = (fresh, &self.setpoint, &self.estimate) else {
            return Ok(());
        };
        let (out, warning) = self.follower.step(sp, est, ctx.dt);
        if let Some(w) = warning {
            ctx.warn(format!("{w:?}"));
        }
        let mut cmd = out.to_command();
        cmd.stamp = ctx.now;
        ctx.publish(Message::Command(cmd));
        Ok(())
    }

    fn set_param(&mut self, key: &str, value: f64) -> bool {
        self.follower.set_param(key, value)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub struct ControllerNode {
    cascade: Cascade,
    command: Option<ControlCommand>,
    estimate: Option<StateEstimate>,
}

impl ControllerNode {
    pub fn new(gains: GainSet, limits: VehicleLimits) -> Self {
        Self {
            cascade: Cascade::new(gains, limits),
            command: None,
            estimate: None,
        }
    }

    pub fn cascade(&self) -> &Cascade {
        &self.cascade
    }
}

impl Node for ControllerNode {
    fn role(&self) -> Role {
        Role::Controller
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        for m in ctx.take_inbox() {
            match m {
                Message::Command(c) => self.command = Some(c),
                Message::Estimate(e) => self.estimate = Some(e),
                _ => {}
            }
        }
        let Some(cmd) = self.command else {
            return Ok(());
        };
        let routed = self
            .cascade
            .route(&cmd, self.estimate.as_ref(), ctx.now, ctx.dt)
            .map_err(|e| NodeFault::new(Role::Controller, e.to_string()))?;
        if routed.failsafe {
            ctx.count("controller_failsafe");
        }
        for w in &routed.warnings {
            ctx.warn(format!("{w:?}"));
        }
        let mut fw = routed.firmware;
        fw.stamp = ctx.now;
        ctx.publish(Message::Firmware(fw));
        Ok(())
    }

    fn set_param(&mut self, key: &str, value: f64) -> bool {
        self.cascade.set_param(key, value)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
