//! Bind a different trajectory follower by name. This one is a plain PD on
//! position that ignores the feedforward terms; everything downstream runs
//! unchanged.

use std::any::Any;
use std::path::Path;

use rotorstack::app::{run_scenario, Scenario};
use rotorstack::controller::{ControlCommand, Mode};
use rotorstack::messages::{Message, StateEstimate};
use rotorstack::navigation::TrajectorySetpoint;
use rotorstack::runtime::{Context, Node, NodeFault, Registry, Role};

struct PositionOnly {
    setpoint: Option<TrajectorySetpoint>,
    estimate: Option<StateEstimate>,
}

impl Node for PositionOnly {
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
        if let (true, Some(sp)) = (fresh, self.setpoint) {
            // Hand the position straight to the controller's position loop.
            let p = sp.position;
            ctx.publish(Message::Command(ControlCommand::new(
                ctx.now,
                Mode::NedPosYaw,
                [p.x, p.y, p.z, sp.heading],
            )));
        }
        Ok(())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn main() {
    let mut registry = Registry::with_defaults();
    registry
        .add(
            Role::Follower,
            "position_only",
            Box::new(|_| {
                Ok(Box::new(PositionOnly {
                    setpoint: None,
                    estimate: None,
                }))
            }),
        )
        .unwrap();

    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let mut scenario = Scenario::load(&config, None).unwrap();
    scenario.config.nodes.logger.enabled = false;
    for name in ["default", "position_only"] {
        scenario.config.nodes.follower.implementation = name.into();
        let out = run_scenario(&scenario, &registry, None).unwrap();
        println!(
            "{name:>14}: status {}, path RMSE {:.3} m",
            out.summary.status,
            out.summary.path_rmse_total.unwrap_or(f64::NAN)
        );
    }
}
