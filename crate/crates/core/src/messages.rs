//! Message payloads exchanged between nodes and their flat CSV layouts.
//!
//! Every topic carries exactly one payload type. Payloads flatten into rows
//! of `f64` whose first column is always the timestamp in seconds.

use std::fmt;

use crate::controller::{ControlCommand, FirmwareCommand, FirmwareKind, Mode};
use crate::math::{EulerAngles, Vec3};
use crate::navigation::{TrajectorySetpoint, Waypoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub stamp: f64,
    /// Specific force, body frame, m/s².
    pub accel: Vec3,
    /// Angular rate, body frame, rad/s.
    pub gyro: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaroSample {
    pub stamp: f64,
    /// Pressure relative to the reading at initialization, Pa.
    pub pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagSample {
    pub stamp: f64,
    pub field: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnssSample {
    pub stamp: f64,
    /// Latitude, rad.
    pub lat: f64,
    /// Longitude, rad.
    pub lon: f64,
    /// Altitude above mean sea level, m.
    pub alt: f64,
    /// NED velocity, m/s.
    pub vel: Vec3,
}

/// Simulator ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub stamp: f64,
    pub position: Vec3,
    pub velocity_body: Vec3,
    pub euler: EulerAngles,
    pub body_rates: Vec3,
    pub gyro_bias: Vec3,
}

/// Output of the state estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub stamp: f64,
    pub position: Vec3,
    pub velocity_body: Vec3,
    pub euler: EulerAngles,
    pub gyro_bias: Vec3,
    /// Latest gyro reading with the bias estimate removed.
    pub body_rates: Vec3,
}

impl StateEstimate {
    pub fn velocity_ned(&self) -> Vec3 {
        crate::math::rotation_body_to_inertial(&self.euler) * self.velocity_body
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointList {
    pub stamp: f64,
    pub waypoints: Vec<Waypoint>,
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissionEventKind {
    TakeoffComplete,
    LegStarted,
    WaypointReached,
    MissionComplete,
}

impl MissionEventKind {
    fn code(self) -> f64 {
        match self {
            Self::TakeoffComplete => 1.0,
            Self::LegStarted => 2.0,
            Self::WaypointReached => 3.0,
            Self::MissionComplete => 4.0,
        }
    }

    fn from_code(c: f64) -> Option<Self> {
        Some(match c as i64 {
            1 => Self::TakeoffComplete,
            2 => Self::LegStarted,
            3 => Self::WaypointReached,
            4 => Self::MissionComplete,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionEvent {
    pub stamp: f64,
    pub kind: MissionEventKind,
    /// Waypoint or leg index the event refers to.
    pub index: usize,
}

/// Runtime parameter change, applied at the next tick boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamUpdate {
    pub stamp: f64,
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    Imu,
    Baro,
    Mag,
    Gnss,
    Truth,
    Estimate,
    Waypoints,
    Trajectory,
    Command,
    Firmware,
    Mission,
    Param,
}

impl Topic {
    pub const ALL: [Topic; 12] = [
        Topic::Imu,
        Topic::Baro,
        Topic::Mag,
        Topic::Gnss,
        Topic::Truth,
        Topic::Estimate,
        Topic::Waypoints,
        Topic::Trajectory,
        Topic::Command,
        Topic::Firmware,
        Topic::Mission,
        Topic::Param,
    ];

    pub const SENSORS: [Topic; 4] = [Topic::Imu, Topic::Baro, Topic::Mag, Topic::Gnss];

    pub fn name(self) -> &'static str {
        match self {
            Topic::Imu => "imu",
            Topic::Baro => "baro",
            Topic::Mag => "mag",
            Topic::Gnss => "gnss",
            Topic::Truth => "truth",
            Topic::Estimate => "estimate",
            Topic::Waypoints => "waypoints",
            Topic::Trajectory => "trajectory",
            Topic::Command => "command",
            Topic::Firmware => "firmware",
            Topic::Mission => "mission",
            Topic::Param => "param",
        }
    }

    pub fn from_name(name: &str) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Column names; `t` first.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Topic::Imu => &["t", "ax", "ay", "az", "gx", "gy", "gz"],
            Topic::Baro => &["t", "pressure"],
            Topic::Mag => &["t", "mx", "my", "mz"],
            Topic::Gnss => &["t", "lat", "lon", "alt", "vn", "ve", "vd"],
            Topic::Truth | Topic::Estimate => &[
                "t", "pn", "pe", "pd", "u", "v", "w", "roll", "pitch", "yaw", "bx", "by", "bz",
                "p", "q", "r",
            ],
            Topic::Waypoints => &["t", "index", "pn", "pe", "pd", "heading", "v_max"],
            Topic::Trajectory => &[
                "t", "leg", "pn", "pe", "pd", "vn", "ve", "vd", "an", "ae", "ad", "psi",
                "psi_dot", "psi_ddot",
            ],
            Topic::Command => &["t", "mode", "c0", "c1", "c2", "c3"],
            Topic::Firmware => &[
                "t", "kind", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9", "u10",
            ],
            Topic::Mission => &["t", "event", "index"],
            Topic::Param => &["t", "value"],
        }
    }

    pub fn units(self) -> &'static [&'static str] {
        match self {
            Topic::Imu => &["s", "m/s2", "m/s2", "m/s2", "rad/s", "rad/s", "rad/s"],
            Topic::Baro => &["s", "Pa"],
            Topic::Mag => &["s", "-", "-", "-"],
            Topic::Gnss => &["s", "rad", "rad", "m", "m/s", "m/s", "m/s"],
            Topic::Truth | Topic::Estimate => &[
                "s", "m", "m", "m", "m/s", "m/s", "m/s", "rad", "rad", "rad", "rad/s", "rad/s",
                "rad/s", "rad/s", "rad/s", "rad/s",
            ],
            Topic::Waypoints => &["s", "-", "m", "m", "m", "rad", "m/s"],
            Topic::Trajectory => &[
                "s", "-", "m", "m", "m", "m/s", "m/s", "m/s", "m/s2", "m/s2", "m/s2", "rad",
                "rad/s", "rad/s2",
            ],
            Topic::Command => &["s", "-", "-", "-", "-", "-"],
            Topic::Firmware => &["s", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-"],
            Topic::Mission => &["s", "-", "-"],
            Topic::Param => &["s", "-"],
        }
    }

    /// Topics whose payloads are written to run logs.
    pub fn is_logged(self) -> bool {
        !matches!(self, Topic::Param)
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Imu(ImuSample),
    Baro(BaroSample),
    Mag(MagSample),
    Gnss(GnssSample),
    Truth(TruthSample),
    Estimate(StateEstimate),
    Waypoints(WaypointList),
    Trajectory(TrajectorySetpoint),
    Command(ControlCommand),
    Firmware(FirmwareCommand),
    Mission(MissionEvent),
    Param(ParamUpdate),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("topic {topic} expects {expected} columns, found {found}")]
    Arity {
        topic: Topic,
        expected: usize,
        found: usize,
    },
    #[error("topic {topic}: {what}")]
    Invalid { topic: Topic, what: String },
    #[error("topic {0} cannot be decoded from a single row")]
    NotRowDecodable(Topic),
}

fn v3(r: &[f64], i: usize) -> Vec3 {
    Vec3::new(r[i], r[i + 1], r[i + 2])
}

fn push3(row: &mut Vec<f64>, v: &Vec3) {
    row.extend_from_slice(&[v.x, v.y, v.z]);
}

fn state_row(
    stamp: f64,
    p: &Vec3,
    v: &Vec3,
    e: &EulerAngles,
    b: &Vec3,
    w: &Vec3,
) -> Vec<f64> {
    let mut row = vec![stamp];
    push3(&mut row, p);
    push3(&mut row, v);
    row.extend_from_slice(&[e.roll, e.pitch, e.yaw]);
    push3(&mut row, b);
    push3(&mut row, w);
    row
}

impl Message {
    pub fn topic(&self) -> Topic {
        match self {
            Message::Imu(_) => Topic::Imu,
            Message::Baro(_) => Topic::Baro,
            Message::Mag(_) => Topic::Mag,
            Message::Gnss(_) => Topic::Gnss,
            Message::Truth(_) => Topic::Truth,
            Message::Estimate(_) => Topic::Estimate,
            Message::Waypoints(_) => Topic::Waypoints,
            Message::Trajectory(_) => Topic::Trajectory,
            Message::Command(_) => Topic::Command,
            Message::Firmware(_) => Topic::Firmware,
            Message::Mission(_) => Topic::Mission,
            Message::Param(_) => Topic::Param,
        }
    }

    pub fn stamp(&self) -> f64 {
        match self {
            Message::Imu(m) => m.stamp,
            Message::Baro(m) => m.stamp,
            Message::Mag(m) => m.stamp,
            Message::Gnss(m) => m.stamp,
            Message::Truth(m) => m.stamp,
            Message::Estimate(m) => m.stamp,
            Message::Waypoints(m) => m.stamp,
            Message::Trajectory(m) => m.stamp,
            Message::Command(m) => m.stamp,
            Message::Firmware(m) => m.stamp,
            Message::Mission(m) => m.stamp,
            Message::Param(m) => m.stamp,
        }
    }

    /// Flatten into log rows. Most payloads produce one row; a waypoint list
    /// produces one row per waypoint.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Message::Imu(m) => {
                let mut r = vec![m.stamp];
                push3(&mut r, &m.accel);
                push3(&mut r, &m.gyro);
                vec![r]
            }
            Message::Baro(m) => vec![vec![m.stamp, m.pressure]],
            Message::Mag(m) => {
                let mut r = vec![m.stamp];
                push3(&mut r, &m.field);
                vec![r]
            }
            Message::Gnss(m) => {
                let mut r = vec![m.stamp, m.lat, m.lon, m.alt];
                push3(&mut r, &m.vel);
                vec![r]
            }
            Message::Truth(m) => vec![state_row(
                m.stamp,
                &m.position,
                &m.velocity_body,
                &m.euler,
                &m.gyro_bias,
                &m.body_rates,
            )],
            Message::Estimate(m) => vec![state_row(
                m.stamp,
                &m.position,
                &m.velocity_body,
                &m.euler,
                &m.gyro_bias,
                &m.body_rates,
            )],
            Message::Waypoints(m) => m
                .waypoints
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    vec![
                        m.stamp,
                        i as f64,
                        w.position.x,
                        w.position.y,
                        w.position.z,
                        w.heading,
                        m.v_max,
                    ]
                })
                .collect(),
            Message::Trajectory(s) => {
                let mut r = vec![s.stamp, s.leg as f64];
                push3(&mut r, &s.position);
                push3(&mut r, &s.velocity);
                push3(&mut r, &s.acceleration);
                r.extend_from_slice(&[s.heading, s.heading_rate, s.heading_accel]);
                vec![r]
            }
            Message::Command(c) => {
                let mut r = vec![c.stamp, c.mode.index() as f64];
                r.extend_from_slice(&c.values);
                vec![r]
            }
            Message::Firmware(c) => {
                let mut r = vec![c.stamp, c.kind.code()];
                r.extend_from_slice(&c.u);
                vec![r]
            }
            Message::Mission(e) => vec![vec![e.stamp, e.kind.code(), e.index as f64]],
            Message::Param(p) => vec![vec![p.stamp, p.value]],
        }
    }

    /// Rebuild a message from one log row.
    pub fn from_row(topic: Topic, r: &[f64]) -> Result<Message, DecodeError> {
        let expected = topic.columns().len();
        if r.len() != expected {
            return Err(DecodeError::Arity {
                topic,
                expected,
                found: r.len(),
            });
        }
        let invalid = |what: &str| DecodeError::Invalid {
            topic,
            what: what.to_string(),
        };
        Ok(match topic {
            Topic::Imu => Message::Imu(ImuSample {
                stamp: r[0],
                accel: v3(r, 1),
                gyro: v3(r, 4),
            }),
            Topic::Baro => Message::Baro(BaroSample {
                stamp: r[0],
                pressure: r[1],
            }),
            Topic::Mag => Message::Mag(MagSample {
                stamp: r[0],
                field: v3(r, 1),
            }),
            Topic::Gnss => Message::Gnss(GnssSample {
                stamp: r[0],
                lat: r[1],
                lon: r[2],
                alt: r[3],
                vel: v3(r, 4),
            }),
            Topic::Truth => Message::Truth(TruthSample {
                stamp: r[0],
                position: v3(r, 1),
                velocity_body: v3(r, 4),
                euler: EulerAngles::new(r[7], r[8], r[9]),
                gyro_bias: v3(r, 10),
                body_rates: v3(r, 13),
            }),
            Topic::Estimate => Message::Estimate(StateEstimate {
                stamp: r[0],
                position: v3(r, 1),
                velocity_body: v3(r, 4),
                euler: EulerAngles::new(r[7], r[8], r[9]),
                gyro_bias: v3(r, 10),
                body_rates: v3(r, 13),
            }),
            Topic::Trajectory => Message::Trajectory(TrajectorySetpoint {
                stamp: r[0],
                leg: r[1] as usize,
                position: v3(r, 2),
                velocity: v3(r, 5),
                acceleration: v3(r, 8),
                heading: r[11],
                heading_rate: r[12],
                heading_accel: r[13],
            }),
            Topic::Command => {
                let mode = Mode::from_index(r[1] as i64).ok_or_else(|| invalid("bad mode"))?;
                Message::Command(ControlCommand {
                    stamp: r[0],
                    mode,
                    values: [r[2], r[3], r[4], r[5]],
                })
            }
            Topic::Firmware => {
                let kind = FirmwareKind::from_code(r[1]).ok_or_else(|| invalid("bad kind"))?;
                let mut u = [0.0; 10];
                u.copy_from_slice(&r[2..12]);
                Message::Firmware(FirmwareCommand {
                    stamp: r[0],
                    kind,
                    u,
                })
            }
            Topic::Mission => Message::Mission(MissionEvent {
                stamp: r[0],
                kind: MissionEventKind::from_code(r[1]).ok_or_else(|| invalid("bad event"))?,
                index: r[2] as usize,
            }),
            Topic::Waypoints | Topic::Param => return Err(DecodeError::NotRowDecodable(topic)),
        })
    }
}

/// Format a value with 9 significant digits, in the style of C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        strip_zeros(&fixed)
    } else {
        let m = strip_zeros(mantissa);
        format!("{m}e{exp}")
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Round a value to what survives a trip through the log format.
pub fn quantize_sig9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

pub fn quantize_vec(v: &Vec3) -> Vec3 {
    v.map(quantize_sig9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.004), "0.004");
        assert_eq!(format_sig9(12.345678912), "12.3456789");
        assert_eq!(format_sig9(-9.80665), "-9.80665");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(123456789012.0), "1.23456789e11");
    }

    #[test]
    fn row_round_trip_for_state_topics() {
        let msg = Message::Estimate(StateEstimate {
            stamp: 1.25,
            position: Vec3::new(1.0, 2.0, -3.0),
            velocity_body: Vec3::new(0.1, 0.2, 0.3),
            euler: EulerAngles::new(0.01, -0.02, 2.0),
            gyro_bias: Vec3::new(1e-3, 2e-3, 3e-3),
            body_rates: Vec3::new(0.5, 0.6, 0.7),
        });
        let rows = msg.rows();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].len(), Topic::Estimate.columns().len());
        assert_eq!(Message::from_row(Topic::Estimate, &rows[0]).unwrap(), msg);
    }

    #[test]
    fn column_and_unit_tables_agree() {
        for t in Topic::ALL {
            assert_eq!(t.columns().len(), t.units().len(), "{t}");
            assert_eq!(t.columns()[0], "t");
            assert_eq!(Topic::from_name(t.name()), Some(t));
        }
    }

    proptest! {
        #[test]
        fn quantized_values_survive_the_log_format(x in -1e7..1e7f64) {
            let q = quantize_sig9(x);
            prop_assert_eq!(format_sig9(q).parse::<f64>().unwrap(), q);
            prop_assert!((q - x).abs() <= x.abs() * 1e-8 + 1e-300);
        }
    }
}
