//! Route a command through every controller entry point from a hover
//! estimate and show where each one lands.

use rotorstack::controller::{Cascade, ControlCommand, GainSet, Mode, VehicleLimits};
use rotorstack::math::{EulerAngles, Vec3};
use rotorstack::messages::StateEstimate;

fn main() {
    let limits = VehicleLimits {
        mass: 2.0,
        max_thrust: 60.0,
    };
    let est = StateEstimate {
        stamp: 0.0,
        position: Vec3::new(0.0, 0.0, -5.0),
        velocity_body: Vec3::zeros(),
        euler: EulerAngles::new(0.0, 0.0, 0.3),
        gyro_bias: Vec3::zeros(),
        body_rates: Vec3::zeros(),
    };
    for mode in Mode::ALL {
        let values = match mode.index() {
            0 => [1.0, 0.0, -5.0, 0.3],
            1 | 3 => [0.5, 0.0, -5.0, 0.0],
            2 => [0.5, 0.0, 0.0, 0.0],
            4 => [0.0, 0.0, -0.5, 0.3],
            5 | 6 => [0.05, 0.0, 0.1, 0.33],
            7 => [0.1, 0.0, 0.0, 0.33],
            8 => [19.6, 0.01, 0.0, 0.0],
            _ => [0.05, 0.0, 0.1, 19.6],
        };
        let mut cascade = Cascade::new(GainSet::default(), limits);
        let cmd = ControlCommand::new(0.0, mode, values);
        let routed = cascade.route(&cmd, Some(&est), 0.0, 0.01).expect("valid command");
        let hops: Vec<usize> = routed.hops.iter().map(|m| m.index()).collect();
        println!(
            "{:2} {:<28} hops {:<14} -> {:?} u = {:?}",
            mode.index(),
            mode.name(),
            format!("{hops:?}"),
            routed.firmware.kind,
            routed.firmware.u.map(|v| (v * 1e3).round() / 1e3)
        );
    }
}
