//! Hold a hover with a pass-through wrench and report the drift.

use rotorstack::controller::FirmwareCommand;
use rotorstack::math::{Vec3, GRAVITY};
use rotorstack::sim::{SimConfig, Simulator, TruthState};

fn main() {
    let cfg = SimConfig::default();
    let weight = cfg.vehicle.mass * GRAVITY;
    let mut sim = Simulator::new(cfg, 1000.0, 1).expect("valid config");
    let start = TruthState {
        position: Vec3::new(0.0, 0.0, -5.0),
        ..Default::default()
    };
    sim.set_state(start);
    sim.set_command(FirmwareCommand::pass_through(0.0, weight, 0.0, 0.0, 0.0));

    for second in 1..=10 {
        for _ in 0..1000 {
            sim.step().expect("finite state");
        }
        let drift = (sim.state().position - start.position).norm();
        println!("t = {second:2} s  drift = {drift:.3e} m  motors = {:?}", sim.motors());
    }
}
