//! Sample the smoothstep legs of the three-waypoint mission.

use rotorstack::navigation::{Waypoint, WaypointLeg};

fn main() {
    let heading = 130f64.to_radians();
    let wps = [
        Waypoint::new(0.0, 0.0, -5.0, heading),
        Waypoint::new(-20.0, 0.0, -8.0, heading),
        Waypoint::new(-20.0, 20.0, -5.0, heading),
    ];
    let v_max = 3.0;
    for (i, pair) in wps.windows(2).enumerate() {
        let leg = WaypointLeg::new(pair[0], pair[1], v_max, 2.0);
        let mut peak_speed = 0f64;
        let mut peak_accel = 0f64;
        let n = 1000;
        for k in 0..=n {
            let sp = leg.sample(leg.duration * k as f64 / n as f64);
            peak_speed = peak_speed.max(sp.velocity.norm());
            peak_accel = peak_accel.max(sp.acceleration.norm());
        }
        println!(
            "leg {i}: {:.3} s, peak speed {peak_speed:.4} m/s, peak accel {peak_accel:.4} m/s^2",
            leg.duration
        );
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let t = frac * leg.duration;
            let sp = leg.sample(t);
            println!(
                "    t = {:6.3}  p = [{:7.3}, {:7.3}, {:7.3}]  |v| = {:.3}",
                t,
                sp.position.x,
                sp.position.y,
                sp.position.z,
                sp.velocity.norm()
            );
        }
    }
}
