//! Feed noiseless simulated sensors to the EKF during a climbing turn and
//! print the innovations and the final estimate error.

use rotorstack::controller::FirmwareCommand;
use rotorstack::estimator::{Ekf, EstimatorConfig, SensorMessage};
use rotorstack::math::GRAVITY;
use rotorstack::sim::{SimConfig, Simulator};

fn main() {
    let mut cfg = SimConfig::default();
    cfg.sensors = cfg.sensors.noiseless();
    cfg.sensors.quantize = false;
    let hover = cfg.vehicle.mass * GRAVITY / cfg.vehicle.max_thrust();
    let mut sim = Simulator::new(cfg, 1000.0, 3).expect("valid config");
    let mut ekf = Ekf::new(EstimatorConfig::default());

    let (mut worst_baro, mut worst_mag, mut worst_gnss) = (0f64, 0f64, 0f64);
    for k in 0..8000 {
        // Climb for two seconds, then bank into a slow turn.
        let cmd = if k < 2000 {
            FirmwareCommand::angle(0.0, 0.0, 0.0, 0.0, 1.15 * hover)
        } else {
            FirmwareCommand::angle(0.0, 0.1, 0.05, 0.3, 1.02 * hover)
        };
        sim.set_command(cmd);
        let out = sim.step().expect("finite state");
        let f = out.sensors;
        if let Some(m) = f.imu {
            ekf.handle(&SensorMessage::Imu(m)).unwrap();
        }
        if let Some(m) = f.baro {
            worst_baro = worst_baro.max(ekf.update_baro(&m).map_or(0.0, f64::abs));
        }
        if let Some(m) = f.mag {
            worst_mag = worst_mag.max(ekf.update_mag(&m).map_or(0.0, f64::abs));
        }
        if let Some(m) = f.gnss {
            worst_gnss = worst_gnss.max(ekf.update_gnss(&m).map_or(0.0, |v| v.amax()));
        }
    }
    let est = ekf.estimate();
    let truth = sim.truth_sample();
    println!("largest |innovation|: baro {worst_baro:.3e} Pa, mag {worst_mag:.3e} rad, gnss {worst_gnss:.3e}");
    println!("position error {:.3e} m", (est.position - truth.position).norm());
    println!("yaw error      {:.3e} rad", (est.euler.yaw - truth.euler.yaw).abs());
}
