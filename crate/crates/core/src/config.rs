//! Scenario configuration: one TOML file describing the vehicle, sensors,
//! every node's tuning and bindings, and the run itself.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::GainSet;
use crate::estimator::EstimatorConfig;
use crate::navigation::{FollowerGains, ManagerConfig};
use crate::runtime::Role;
use crate::sim::SimConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(msg.into())
    }
}

/// Which implementation runs a role, and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binding {
    #[serde(default = "default_impl")]
    pub implementation: String,
    /// Hz.
    pub rate: f64,
    /// A disabled role is left out of the stack.
    #[serde(default = "enabled")]
    pub enabled: bool,
}

fn default_impl() -> String {
    "default".into()
}

fn enabled() -> bool {
    true
}

impl Binding {
    pub fn new(rate: f64) -> Self {
        Self {
            implementation: default_impl(),
            rate,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodeBindings {
    pub sim: Binding,
    pub estimator: Binding,
    pub planner: Binding,
    pub manager: Binding,
    pub follower: Binding,
    pub controller: Binding,
    pub logger: Binding,
}

impl Default for NodeBindings {
    fn default() -> Self {
        Self {
            sim: Binding::new(1000.0),
            estimator: Binding::new(1000.0),
            planner: Binding::new(1.0),
            manager: Binding::new(100.0),
            follower: Binding::new(100.0),
            controller: Binding::new(100.0),
            logger: Binding::new(1000.0),
        }
    }
}

impl NodeBindings {
    pub fn binding(&self, role: Role) -> &Binding {
        match role {
            Role::Sim => &self.sim,
            Role::Estimator => &self.estimator,
            Role::Planner => &self.planner,
            Role::Manager => &self.manager,
            Role::Follower => &self.follower,
            Role::Controller => &self.controller,
            Role::Logger => &self.logger,
        }
    }

    pub fn binding_mut(&mut self, role: Role) -> &mut Binding {
        match role {
            Role::Sim => &mut self.sim,
            Role::Estimator => &mut self.estimator,
            Role::Planner => &mut self.planner,
            Role::Manager => &mut self.manager,
            Role::Follower => &mut self.follower,
            Role::Controller => &mut self.controller,
            Role::Logger => &mut self.logger,
        }
    }

    /// The binding of an enabled role.
    pub fn get(&self, role: Role) -> Option<&Binding> {
        Some(self.binding(role)).filter(|b| b.enabled)
    }
}

/// A parameter change applied at the first tick at or after `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledParam {
    /// s.
    pub at: f64,
    pub role: Role,
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Upper bound on simulated time, s.
    pub duration: f64,
    /// Global scheduler rate, Hz; also the physics rate.
    pub base_rate: f64,
    /// Mission file, relative to this config file when not absolute.
    pub mission: Option<PathBuf>,
    pub sim: SimConfig,
    pub estimator: EstimatorConfig,
    pub manager: ManagerConfig,
    pub follower: FollowerGains,
    pub controller: GainSet,
    pub nodes: NodeBindings,
    pub params: Vec<ScheduledParam>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 120.0,
            base_rate: 1000.0,
            mission: None,
            sim: SimConfig::default(),
            estimator: EstimatorConfig::default(),
            manager: ManagerConfig::default(),
            follower: FollowerGains::default(),
            controller: GainSet::default(),
            nodes: NodeBindings::default(),
            params: Vec::new(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let (Some(m), Some(dir)) = (&cfg.mission, path.parent()) {
            if m.is_relative() {
                cfg.mission = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read_file(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the serialized configuration, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Schema-level and physical sanity checks. Messages name the field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive (got {})", self.duration));
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return bad(format!("base_rate must be positive (got {})", self.base_rate));
        }
        self.sim
            .vehicle
            .validate()
            .map_err(|m| ConfigError::Invalid(format!("sim.{m}")))?;
        self.sim
            .sensors
            .validate()
            .map_err(|m| ConfigError::Invalid(format!("sim.{m}")))?;
        for (name, r) in [
            ("sim.truth_rate", self.sim.truth_rate),
            ("sim.sensors.imu_rate", self.sim.sensors.imu_rate),
            ("sim.sensors.baro_rate", self.sim.sensors.baro_rate),
            ("sim.sensors.mag_rate", self.sim.sensors.mag_rate),
            ("sim.sensors.gnss_rate", self.sim.sensors.gnss_rate),
        ] {
            if !(r > 0.0 && r <= self.base_rate) {
                return bad(format!("{name} must lie in (0, base_rate] (got {r})"));
            }
        }
        for role in Role::ALL {
            if let Some(b) = self.nodes.get(role) {
                if !(b.rate > 0.0 && b.rate <= self.base_rate) {
                    return bad(format!(
                        "nodes.{}.rate must lie in (0, base_rate] (got {})",
                        role.key(),
                        b.rate
                    ));
                }
            }
        }
        let e = &self.estimator;
        if e.substeps == 0 {
            return bad("estimator.substeps must be at least 1".into());
        }
        if !(e.gimbal_guard > 0.0 && e.gimbal_guard < 0.5) {
            return bad("estimator.gimbal_guard must lie in (0, 0.5)".into());
        }
        let n = &e.noise;
        let all_noise = n
            .process
            .iter()
            .chain(n.input.iter())
            .chain(n.mag.iter())
            .chain(n.gnss.iter())
            .chain(std::iter::once(&n.baro));
        if all_noise.clone().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("estimator.noise entries must be non-negative".into());
        }
        let ic = &e.initial_covariance;
        if [ic.position, ic.velocity, ic.attitude, ic.gyro_bias]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return bad("estimator.initial_covariance entries must be non-negative".into());
        }
        let c = &self.controller;
        if !(c.tilt_limit_deg > 0.0 && c.tilt_limit_deg < 80.0) {
            return bad("controller.tilt_limit_deg must lie in (0, 80)".into());
        }
        if !(c.rate_limit_deg > 0.0) {
            return bad("controller.rate_limit_deg must be positive".into());
        }
        if !(c.stale_timeout > 0.0) {
            return bad("controller.stale_timeout must be positive".into());
        }
        if !(0.0..=1.0).contains(&c.failsafe_throttle) {
            return bad("controller.failsafe_throttle must lie in [0, 1]".into());
        }
        let m = &self.manager;
        if !(m.min_leg_time > 0.0) {
            return bad("manager.min_leg_time must be positive".into());
        }
        if !(m.arrival_radius > 0.0) {
            return bad("manager.arrival_radius must be positive".into());
        }
        if !(m.climb_rate > 0.0) {
            return bad("manager.climb_rate must be positive".into());
        }
        if !(self.follower.integral_limit >= 0.0) {
            return bad("follower.integral_limit must be non-negative".into());
        }
        for (i, p) in self.params.iter().enumerate() {
            if !(p.at >= 0.0 && p.value.is_finite()) {
                return bad(format!("params[{i}] needs a non-negative time and a finite value"));
            }
        }
        Ok(())
    }
}
