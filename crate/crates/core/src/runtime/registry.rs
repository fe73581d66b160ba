//! Implementation registry: node factories keyed by role and name.

use std::collections::BTreeMap;
use std::path::Path;

use super::log::CsvLogger;
use super::nodes::{ControllerNode, EstimatorNode, FollowerNode, ManagerNode, PlannerNode, SimNode};
use super::{Node, NodeDescriptor, Role, RuntimeError, Stack};
use crate::config::ScenarioConfig;
use crate::controller::VehicleLimits;
use crate::navigation::MissionPlan;

/// Everything a factory may draw on.
pub struct BuildContext<'a> {
    pub config: &'a ScenarioConfig,
    pub plan: Option<&'a MissionPlan>,
    /// Log directory; required by the default logger.
    pub out_dir: Option<&'a Path>,
    pub config_hash: String,
}

impl<'a> BuildContext<'a> {
    pub fn new(config: &'a ScenarioConfig) -> Self {
        Self {
            config,
            plan: None,
            out_dir: None,
            config_hash: config.hash(),
        }
    }

    pub fn with_plan(mut self, plan: &'a MissionPlan) -> Self {
        self.plan = Some(plan);
        self
    }

    pub fn with_out_dir(mut self, dir: &'a Path) -> Self {
        self.out_dir = Some(dir);
        self
    }
}

pub type Factory = Box<dyn Fn(&BuildContext) -> Result<Box<dyn Node>, String>>;

pub struct Registry {
    factories: BTreeMap<(Role, String), Factory>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// The `default` implementation of every role.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        let add = |r: &mut Registry, role, f: Factory| {
            r.add(role, "default", f).expect("defaults are unique");
        };
        add(
            &mut r,
            Role::Sim,
            Box::new(|c| {
                let cfg = c.config;
                if cfg.nodes.sim.rate != cfg.base_rate {
                    return Err(format!(
                        "the simulator must run at base_rate ({} Hz), not {} Hz",
                        cfg.base_rate, cfg.nodes.sim.rate
                    ));
                }
                let n = SimNode::new(cfg.sim.clone(), cfg.base_rate, cfg.seed).map_err(|e| e.message)?;
                Ok(Box::new(n))
            }),
        );
        add(
            &mut r,
            Role::Estimator,
            Box::new(|c| Ok(Box::new(EstimatorNode::new(c.config.estimator.clone())))),
        );
        add(
            &mut r,
            Role::Planner,
            Box::new(|c| {
                let plan = c.plan.ok_or("the planner needs a mission")?;
                Ok(Box::new(PlannerNode::new(plan.clone())))
            }),
        );
        add(
            &mut r,
            Role::Manager,
            Box::new(|c| Ok(Box::new(ManagerNode::new(c.config.manager.clone())))),
        );
        add(
            &mut r,
            Role::Follower,
            Box::new(|c| {
                let mass = c.config.sim.vehicle.mass;
                Ok(Box::new(FollowerNode::new(c.config.follower.clone(), mass)))
            }),
        );
        add(
            &mut r,
            Role::Controller,
            Box::new(|c| {
                let v = &c.config.sim.vehicle;
                let limits = VehicleLimits {
                    mass: v.mass,
                    max_thrust: v.max_thrust(),
                };
                Ok(Box::new(ControllerNode::new(c.config.controller.clone(), limits)))
            }),
        );
        add(
            &mut r,
            Role::Logger,
            Box::new(|c| {
                let dir = c.out_dir.ok_or("the logger needs an output directory")?;
                let l = CsvLogger::create(dir, c.config.seed, &c.config_hash).map_err(|e| e.to_string())?;
                Ok(Box::new(l))
            }),
        );
        r
    }

    pub fn add(&mut self, role: Role, name: &str, factory: Factory) -> Result<(), RuntimeError> {
        let key = (role, name.to_string());
        if self.factories.contains_key(&key) {
            return Err(RuntimeError::DuplicateImplementation {
                role,
                name: name.to_string(),
            });
        }
        self.factories.insert(key, factory);
        Ok(())
    }

    /// Registered implementation names for a role.
    pub fn names(&self, role: Role) -> Vec<&str> {
        self.factories
            .keys()
            .filter(|(r, _)| *r == role)
            .map(|(_, n)| n.as_str())
            .collect()
    }

    pub fn build(&self, role: Role, name: &str, ctx: &BuildContext) -> Result<Box<dyn Node>, RuntimeError> {
        let f = self
            .factories
            .get(&(role, name.to_string()))
            .ok_or_else(|| RuntimeError::UnknownImplementation {
                role,
                name: name.to_string(),
            })?;
        f(ctx).map_err(|message| RuntimeError::Build { role, message })
    }
}

/// Build every bound role from the configuration and schedule its parameter
/// changes.
pub fn build_stack(registry: &Registry, ctx: &BuildContext) -> Result<Stack, RuntimeError> {
    let cfg = ctx.config;
    let mut stack = Stack::new(cfg.base_rate);
    for role in Role::ALL {
        let Some(binding) = cfg.nodes.get(role) else {
            continue;
        };
        let node = registry.build(role, &binding.implementation, ctx)?;
        stack.register(NodeDescriptor::new(role, &binding.implementation, binding.rate), node)?;
    }
    for p in &cfg.params {
        stack.schedule_param(p.clone());
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_implementation_is_reported() {
        let cfg = ScenarioConfig::default();
        let ctx = BuildContext::new(&cfg);
        let err = match Registry::with_defaults().build(Role::Follower, "nope", &ctx) {
            Err(e) => e,
            Ok(_) => panic!("built an unknown implementation"),
        };
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn duplicate_names_are_refused() {
        let mut r = Registry::with_defaults();
        let err = r
            .add(Role::Estimator, "default", Box::new(|_| Err("unused".into())))
            .unwrap_err();
        assert!(matches!(err, RuntimeError::DuplicateImplementation { .. }));
        assert_eq!(r.names(Role::Estimator), vec!["default"]);
    }

    #[test]
    fn planner_without_mission_fails_to_build() {
        let cfg = ScenarioConfig::default();
        let ctx = BuildContext::new(&cfg);
        assert!(Registry::with_defaults().build(Role::Planner, "default", &ctx).is_err());
    }
}
