use serde::{Deserialize, Serialize};

/// Gains and limits for one PID loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Symmetric output saturation.
    pub output_limit: f64,
    /// Symmetric clamp on the integrator state.
    pub integrator_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            output_limit: f64::INFINITY,
            integrator_limit: 0.0,
        }
    }
}

impl PidGains {
    pub const fn p(kp: f64, output_limit: f64) -> Self {
        Self {
            kp,
            ki: 0.0,
            kd: 0.0,
            output_limit,
            integrator_limit: 0.0,
        }
    }
}

/// PID with derivative on measurement and a clamped integrator.
///
/// The derivative term acts on the measurement so a setpoint step does not
/// kick the output. Callers with a direct rate measurement pass it in;
/// otherwise the measurement is differenced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pid {
    pub gains: PidGains,
    integrator: f64,
    last_measurement: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integrator: 0.0,
            last_measurement: None,
        }
    }

    pub fn integrator(&self) -> f64 {
        self.integrator
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
        self.last_measurement = None;
    }

    /// `error` is setpoint − measurement, already wrapped if angular.
    pub fn update(&mut self, error: f64, measurement: f64, rate: Option<f64>, dt: f64) -> f64 {
        let g = self.gains;
        let rate = match rate {
            Some(r) => r,
            None => match self.last_measurement {
                Some(prev) if dt > 0.0 => (measurement - prev) / dt,
                _ => 0.0,
            },
        };
        self.last_measurement = Some(measurement);
        if g.ki != 0.0 {
            self.integrator =
                (self.integrator + error * dt).clamp(-g.integrator_limit, g.integrator_limit);
        }
        let out = g.kp * error + g.ki * self.integrator - g.kd * rate;
        out.clamp(-g.output_limit, g.output_limit)
    }
}
