//! Fly the shipped three-waypoint mission in-process and print the report.

use std::path::Path;
use std::time::Instant;

use rotorstack::app::{run_scenario, Scenario};
use rotorstack::runtime::Registry;

fn main() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let mut scenario = Scenario::load(&config, None).expect("shipped config is valid");
    scenario.config.nodes.logger.enabled = false;

    let start = Instant::now();
    let outcome = run_scenario(&scenario, &Registry::with_defaults(), None).expect("run");
    print!("{}", outcome.summary.to_text());
    println!("wall time: {:.2} s", start.elapsed().as_secs_f64());
}
