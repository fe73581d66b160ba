//! Record a run to disk, replay the estimator over its sensor logs and check
//! that the replayed estimates match the live ones exactly.

use std::path::Path;

use rotorstack::app::{replay_estimator, sim_run, SimRunArgs};
use rotorstack::runtime::Registry;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = std::env::temp_dir().join(format!("rotorstack-record-{}", std::process::id()));
    let run = dir.join("run");
    let replay = dir.join("replay");

    let args = SimRunArgs {
        config: root.join("configs/default.toml"),
        mission: None,
        out: run.clone(),
        seed: Some(11),
        duration: Some(15.0),
    };
    let outcome = sim_run(&args, &Registry::with_defaults()).expect("run");
    println!("recorded {} s of flight into {}", outcome.summary.sim_time, run.display());

    let rep = replay_estimator(&run, &run.join("config.toml"), &replay).expect("replay");
    let live = std::fs::read(run.join("estimate.csv")).unwrap();
    let again = std::fs::read(replay.join("estimate.csv")).unwrap();
    println!("{} estimates replayed; identical to live: {}", rep.estimates.len(), live == again);
    if let Some(s) = rep.stats {
        println!(
            "estimator RMS over the log: {:.3} m, {:.4} m/s, {:.3} deg",
            s.position, s.velocity, s.attitude_deg
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}
