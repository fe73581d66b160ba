//! Message bus, node registry and the deterministic fixed-step scheduler.
//!
//! Every global tick runs the due nodes in a fixed order: sim, estimator,
//! planner, manager, follower, controller, logger. A message published during
//! a tick is delivered to later nodes in the same tick and to earlier nodes
//! on their next run.

pub mod log;
pub mod nodes;
pub mod registry;

use std::any::Any;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clock::{tick_time, BadRate, RateGate};
use crate::config::ScheduledParam;
use crate::messages::{Message, Topic};

pub use log::{read_sensor_stream,
    read_log, read_manifest, CsvLogger, LogError, Manifest, TopicEntry, TopicLog, SCHEMA_VERSION,
};
pub use registry::{build_stack, BuildContext, Factory, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sim,
    Estimator,
    Planner,
    Manager,
    Follower,
    Controller,
    Logger,
}

impl Role {
    /// Execution order within a tick.
    pub const ALL: [Role; 7] = [
        Role::Sim,
        Role::Estimator,
        Role::Planner,
        Role::Manager,
        Role::Follower,
        Role::Controller,
        Role::Logger,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Role::Sim => "sim",
            Role::Estimator => "estimator",
            Role::Planner => "planner",
            Role::Manager => "manager",
            Role::Follower => "follower",
            Role::Controller => "controller",
            Role::Logger => "logger",
        }
    }

    pub fn from_key(key: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.key() == key)
    }

    /// Topics every implementation of this role receives.
    pub fn subscriptions(self) -> &'static [Topic] {
        match self {
            Role::Sim => &[Topic::Firmware],
            Role::Estimator => &Topic::SENSORS,
            Role::Planner => &[],
            Role::Manager => &[Topic::Waypoints, Topic::Estimate],
            Role::Follower => &[Topic::Trajectory, Topic::Estimate],
            Role::Controller => &[Topic::Command, Topic::Estimate],
            Role::Logger => &[
                Topic::Imu,
                Topic::Baro,
                Topic::Mag,
                Topic::Gnss,
                Topic::Truth,
                Topic::Estimate,
                Topic::Waypoints,
                Topic::Trajectory,
                Topic::Command,
                Topic::Firmware,
                Topic::Mission,
            ],
        }
    }

    /// Topics every implementation of this role may publish.
    pub fn publications(self) -> &'static [Topic] {
        match self {
            Role::Sim => &[Topic::Imu, Topic::Baro, Topic::Mag, Topic::Gnss, Topic::Truth],
            Role::Estimator => &[Topic::Estimate],
            Role::Planner => &[Topic::Waypoints],
            Role::Manager => &[Topic::Trajectory, Topic::Command, Topic::Mission],
            Role::Follower => &[Topic::Command],
            Role::Controller => &[Topic::Firmware],
            Role::Logger => &[],
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    /// A node reported the run complete.
    Completed,
    /// The configured duration ran out first.
    DurationElapsed,
    /// A node faulted.
    Failsafe,
}

impl ExitStatus {
    pub fn key(self) -> &'static str {
        match self {
            ExitStatus::Completed => "completed",
            ExitStatus::DurationElapsed => "duration_elapsed",
            ExitStatus::Failsafe => "failsafe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{role} node fault: {message}")]
pub struct NodeFault {
    pub role: Role,
    pub message: String,
}

impl NodeFault {
    pub fn new(role: Role, message: impl Into<String>) -> Self {
        Self {
            role,
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("role {0} is already bound")]
    DuplicateRole(Role),
    #[error("no implementation named `{name}` for role {role}")]
    UnknownImplementation { role: Role, name: String },
    #[error("implementation `{name}` for role {role} is already registered")]
    DuplicateImplementation { role: Role, name: String },
    #[error("node {role}: {source}")]
    Rate {
        role: Role,
        #[source]
        source: BadRate,
    },
    #[error("building {role}: {message}")]
    Build { role: Role, message: String },
    #[error("role {role} implementation `{name}` reports role {actual}")]
    RoleMismatch { role: Role, name: String, actual: Role },
}

/// Static description of a bound node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDescriptor {
    pub role: Role,
    pub implementation: String,
    /// Hz.
    pub rate: f64,
    pub params: BTreeMap<String, f64>,
}

impl NodeDescriptor {
    pub fn new(role: Role, implementation: &str, rate: f64) -> Self {
        Self {
            role,
            implementation: implementation.to_string(),
            rate,
            params: BTreeMap::new(),
        }
    }
}

/// What a node sees during one `work` call.
#[derive(Debug)]
pub struct Context {
    pub tick: u64,
    /// Current time, s.
    pub now: f64,
    /// The node's own period, s.
    pub dt: f64,
    inbox: Vec<Message>,
    outbox: Vec<Message>,
    stop: Option<(ExitStatus, String)>,
    warnings: Vec<String>,
    counters: Vec<&'static str>,
}

impl Context {
    fn new(tick: u64, now: f64, dt: f64, inbox: Vec<Message>) -> Self {
        Self {
            tick,
            now,
            dt,
            inbox,
            outbox: Vec::new(),
            stop: None,
            warnings: Vec::new(),
            counters: Vec::new(),
        }
    }

    /// Messages received since this node last ran, in delivery order.
    pub fn inbox(&self) -> &[Message] {
        &self.inbox
    }

    pub fn take_inbox(&mut self) -> Vec<Message> {
        std::mem::take(&mut self.inbox)
    }

    pub fn publish(&mut self, msg: Message) {
        self.outbox.push(msg);
    }

    /// Ask the scheduler to stop after this tick.
    pub fn stop(&mut self, status: ExitStatus, reason: impl Into<String>) {
        if self.stop.is_none() {
            self.stop = Some((status, reason.into()));
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Bump a named counter in the exit report.
    pub fn count(&mut self, name: &'static str) {
        self.counters.push(name);
    }
}

/// A stack component. Implementations for a role receive that role's
/// subscriptions and publish on its publications.
pub trait Node {
    fn role(&self) -> Role;

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault>;

    /// Runtime parameter change. Returns false for an unknown key.
    fn set_param(&mut self, _key: &str, _value: f64) -> bool {
        false
    }

    /// Called once after the last tick.
    fn finish(&mut self) -> Result<(), NodeFault> {
        Ok(())
    }

    fn as_any(&self) -> &dyn Any;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitReport {
    pub status: ExitStatus,
    pub reason: String,
    /// Time of the last executed tick, s.
    pub end_time: f64,
    pub ticks: u64,
    pub runs: BTreeMap<Role, u64>,
    pub fault: Option<NodeFault>,
    pub warnings: Vec<String>,
    pub counters: BTreeMap<String, u64>,
}

struct Slot {
    descriptor: NodeDescriptor,
    gate: RateGate,
    node: Box<dyn Node>,
    inbox: Vec<Message>,
    runs: u64,
}

/// The bound nodes plus the scheduler that runs them.
pub struct Stack {
    base_rate: f64,
    slots: Vec<Slot>,
    params: Vec<ScheduledParam>,
    trace: Option<Vec<Message>>,
}

const MAX_WARNINGS: usize = 100;

impl Stack {
    pub fn new(base_rate: f64) -> Self {
        Self {
            base_rate,
            slots: Vec::new(),
            params: Vec::new(),
            trace: None,
        }
    }

    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    /// Bind a node to its role.
    pub fn register(&mut self, descriptor: NodeDescriptor, mut node: Box<dyn Node>) -> Result<(), RuntimeError> {
        let role = descriptor.role;
        if node.role() != role {
            return Err(RuntimeError::RoleMismatch {
                role,
                name: descriptor.implementation.clone(),
                actual: node.role(),
            });
        }
        if self.slots.iter().any(|s| s.descriptor.role == role) {
            return Err(RuntimeError::DuplicateRole(role));
        }
        let gate = RateGate::new(descriptor.rate, self.base_rate)
            .map_err(|source| RuntimeError::Rate { role, source })?;
        for (k, v) in &descriptor.params {
            if !node.set_param(k, *v) {
                return Err(RuntimeError::Build {
                    role,
                    message: format!("unknown parameter `{k}`"),
                });
            }
        }
        let at = self.slots.partition_point(|s| s.descriptor.role < role);
        self.slots.insert(
            at,
            Slot {
                descriptor,
                gate,
                node,
                inbox: Vec::new(),
                runs: 0,
            },
        );
        Ok(())
    }

    pub fn roles(&self) -> Vec<Role> {
        self.slots.iter().map(|s| s.descriptor.role).collect()
    }

    pub fn descriptor(&self, role: Role) -> Option<&NodeDescriptor> {
        self.slots.iter().find(|s| s.descriptor.role == role).map(|s| &s.descriptor)
    }

    pub fn node(&self, role: Role) -> Option<&dyn Node> {
        self.slots
            .iter()
            .find(|s| s.descriptor.role == role)
            .map(|s| s.node.as_ref())
    }

    /// The node bound to `role`, if it is of type `T`.
    pub fn node_as<T: 'static>(&self, role: Role) -> Option<&T> {
        self.node(role).and_then(|n| n.as_any().downcast_ref::<T>())
    }

    pub fn schedule_param(&mut self, p: ScheduledParam) {
        let at = self.params.partition_point(|q| q.at <= p.at);
        self.params.insert(at, p);
    }

    /// Keep a copy of every published message.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[Message] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<Message> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Run for at most `duration` seconds of logical time.
    pub fn run(&mut self, duration: f64) -> ExitReport {
        let n_ticks = (duration * self.base_rate).round().max(0.0) as u64;
        let mut report = ExitReport {
            status: ExitStatus::DurationElapsed,
            reason: format!("duration of {duration} s elapsed"),
            end_time: 0.0,
            ticks: 0,
            runs: BTreeMap::new(),
            fault: None,
            warnings: Vec::new(),
            counters: BTreeMap::new(),
        };
        let mut next_param = 0;
        let mut stop: Option<(ExitStatus, String)> = None;
        for k in 0..n_ticks {
            let now = tick_time(k, self.base_rate);
            while next_param < self.params.len() && self.params[next_param].at <= now {
                let p = &self.params[next_param];
                let applied = self
                    .slots
                    .iter_mut()
                    .find(|s| s.descriptor.role == p.role)
                    .is_some_and(|slot| slot.node.set_param(&p.key, p.value));
                if !applied {
                    push_warning(
                        &mut report.warnings,
                        format!("t={now}: parameter {}.{} was not applied", p.role, p.key),
                    );
                }
                next_param += 1;
            }
            for i in 0..self.slots.len() {
                if !self.slots[i].gate.due(k) {
                    continue;
                }
                let slot = &mut self.slots[i];
                let inbox = std::mem::take(&mut slot.inbox);
                let mut ctx = Context::new(k, now, 1.0 / slot.descriptor.rate, inbox);
                slot.runs += 1;
                let role = slot.descriptor.role;
                if let Err(fault) = slot.node.work(&mut ctx) {
                    if report.fault.is_none() {
                        stop.get_or_insert((ExitStatus::Failsafe, fault.to_string()));
                        report.fault = Some(fault);
                    }
                }
                for w in ctx.warnings.drain(..) {
                    push_warning(&mut report.warnings, format!("t={now}: {role}: {w}"));
                }
                for c in ctx.counters.drain(..) {
                    *report.counters.entry(c.to_string()).or_default() += 1;
                }
                if let Some(s) = ctx.stop.take() {
                    stop.get_or_insert(s);
                }
                let outbox = std::mem::take(&mut ctx.outbox);
                self.deliver(i, outbox);
            }
            report.ticks = k + 1;
            report.end_time = now;
            if stop.is_some() {
                break;
            }
        }
        if let Some((status, reason)) = stop {
            report.status = status;
            report.reason = reason;
        }
        for slot in &mut self.slots {
            if let Err(fault) = slot.node.finish() {
                if report.fault.is_none() {
                    report.status = ExitStatus::Failsafe;
                    report.reason = fault.to_string();
                    report.fault = Some(fault);
                }
            }
            report.runs.insert(slot.descriptor.role, slot.runs);
        }
        report
    }

    fn deliver(&mut self, from: usize, msgs: Vec<Message>) {
        for msg in msgs {
            let topic = msg.topic();
            for (j, slot) in self.slots.iter_mut().enumerate() {
                if j != from && slot.descriptor.role.subscriptions().contains(&topic) {
                    slot.inbox.push(msg.clone());
                }
            }
            if let Some(trace) = &mut self.trace {
                trace.push(msg);
            }
        }
    }
}

fn push_warning(list: &mut Vec<String>, w: String) {
    if list.len() < MAX_WARNINGS {
        list.push(w);
    } else if list.len() == MAX_WARNINGS {
        list.push("further warnings suppressed".into());
    }
}
