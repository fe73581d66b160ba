//! CSV run logs: one file per topic plus a `manifest.toml`.

use std::any::Any;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Context, Node, NodeFault, Role};
use crate::messages::{format_sig9, Message, Topic};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub name: String,
    pub file: String,
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub topics: Vec<TopicEntry>,
}

impl Manifest {
    pub fn entry(&self, topic: Topic) -> Option<&TopicEntry> {
        self.topics.iter().find(|t| t.name == topic.name())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(dir.join(MANIFEST_FILE), text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: header does not match the {topic} schema")]
    Header { path: PathBuf, topic: Topic },
    #[error("{path}: row {row}: {message}")]
    Corrupt {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: row {row}: time goes backwards")]
    NonMonotone { path: PathBuf, row: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every logged topic it receives to `<dir>/<topic>.csv`.
pub struct CsvLogger {
    dir: PathBuf,
    seed: u64,
    config_hash: String,
    writers: BTreeMap<Topic, (BufWriter<File>, u64)>,
}

impl CsvLogger {
    /// Creates the directory and one file per logged topic, headers included.
    pub fn create(dir: &Path, seed: u64, config_hash: &str) -> Result<Self, LogError> {
        Self::with_topics(dir, Role::Logger.subscriptions(), seed, config_hash)
    }

    pub fn with_topics(dir: &Path, topics: &[Topic], seed: u64, config_hash: &str) -> Result<Self, LogError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut writers = BTreeMap::new();
        for topic in topics {
            let path = dir.join(format!("{}.csv", topic.name()));
            let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
            writeln!(w, "{}", topic.columns().join(",")).map_err(io_err(&path))?;
            writers.insert(*topic, (w, 0));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            seed,
            config_hash: config_hash.to_string(),
            writers,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Append a message; topics without a file are ignored.
    pub fn record(&mut self, msg: &Message) -> std::io::Result<()> {
        let Some((w, rows)) = self.writers.get_mut(&msg.topic()) else {
            return Ok(());
        };
        for row in msg.rows() {
            let line: Vec<String> = row.iter().map(|v| format_sig9(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
            *rows += 1;
        }
        Ok(())
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            topics: self
                .writers
                .iter()
                .map(|(t, (_, rows))| TopicEntry {
                    name: t.name().to_string(),
                    file: format!("{}.csv", t.name()),
                    columns: t.columns().iter().map(|s| s.to_string()).collect(),
                    units: t.units().iter().map(|s| s.to_string()).collect(),
                    rows: *rows,
                })
                .collect(),
        }
    }
}

impl Node for CsvLogger {
    fn role(&self) -> Role {
        Role::Logger
    }

    fn work(&mut self, ctx: &mut Context) -> Result<(), NodeFault> {
        for m in ctx.take_inbox() {
            self.record(&m)
                .map_err(|e| NodeFault::new(Role::Logger, format!("{}: {e}", self.dir.display())))?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), NodeFault> {
        let fault = |e: std::io::Error| NodeFault::new(Role::Logger, e.to_string());
        for (w, _) in self.writers.values_mut() {
            w.flush().map_err(fault)?;
        }
        self.manifest().write(&self.dir).map_err(fault)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, LogError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| LogError::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(LogError::Manifest {
            path,
            message: format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                m.schema_version
            ),
        });
    }
    Ok(m)
}

/// One topic read back from a log.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicLog {
    pub messages: Vec<Message>,
    /// The final line had no newline and was dropped.
    pub truncated: bool,
}

/// Read one topic file. A last line without a newline is treated as a clean
/// end of stream; any other malformed row is an error naming the row.
pub fn read_log(dir: &Path, topic: Topic) -> Result<TopicLog, LogError> {
    let path = dir.join(format!("{}.csv", topic.name()));
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut out = TopicLog {
        messages: Vec::new(),
        truncated: false,
    };
    let mut row = 0usize;
    let mut last_stamp = f64::NEG_INFINITY;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(&path))?;
        if n == 0 {
            break;
        }
        row += 1;
        if !line.ends_with('\n') {
            out.truncated = true;
            break;
        }
        let text = line.trim_end_matches(['\n', '\r']);
        if row == 1 {
            if text != topic.columns().join(",") {
                return Err(LogError::Header { path, topic });
            }
            continue;
        }
        let corrupt = |message: String| LogError::Corrupt {
            path: path.clone(),
            row,
            message,
        };
        let values = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
            .collect::<Result<Vec<f64>, String>>()
            .map_err(corrupt)?;
        let msg = Message::from_row(topic, &values).map_err(|e| corrupt(e.to_string()))?;
        let stamp = msg.stamp();
        if !stamp.is_finite() {
            return Err(corrupt("non-finite timestamp".into()));
        }
        if stamp < last_stamp {
            return Err(LogError::NonMonotone { path, row });
        }
        last_stamp = stamp;
        out.messages.push(msg);
    }
    if row == 0 {
        return Err(LogError::Header { path, topic });
    }
    Ok(out)
}

/// All sensor messages of a log merged into one stream, ordered by stamp and
/// then by topic (imu, baro, mag, gnss), as the simulator publishes them.
pub fn read_sensor_stream(dir: &Path) -> Result<(Manifest, Vec<Message>, bool), LogError> {
    let manifest = read_manifest(dir)?;
    let mut all: Vec<(f64, Topic, usize, Message)> = Vec::new();
    let mut truncated = false;
    for topic in Topic::SENSORS {
        if manifest.entry(topic).is_none() {
            if topic == Topic::Imu {
                return Err(LogError::Manifest {
                    path: dir.join(MANIFEST_FILE),
                    message: "log has no imu topic".into(),
                });
            }
            continue;
        }
        let log = read_log(dir, topic)?;
        truncated |= log.truncated;
        for (i, m) in log.messages.into_iter().enumerate() {
            all.push((m.stamp(), topic, i, m));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok((manifest, all.into_iter().map(|e| e.3).collect(), truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::messages::{BaroSample, ImuSample};

    fn imu(t: f64) -> Message {
        Message::Imu(ImuSample {
            stamp: t,
            accel: Vec3::new(0.1, -0.2, -9.8),
            gyro: Vec3::new(1e-3, 0.0, -2e-3),
        })
    }

    fn write_log(dir: &Path, msgs: &[Message]) {
        let mut logger = CsvLogger::create(dir, 7, "abc").unwrap();
        for m in msgs {
            logger.record(m).unwrap();
        }
        logger.finish().unwrap();
    }

    #[test]
    fn round_trip_and_merge_order() {
        let dir = tempfile::tempdir().unwrap();
        let baro = Message::Baro(BaroSample {
            stamp: 0.0,
            pressure: 1.5,
        });
        write_log(dir.path(), &[imu(0.0), baro.clone(), imu(0.004)]);
        let (manifest, stream, truncated) = read_sensor_stream(dir.path()).unwrap();
        assert_eq!(manifest.seed, 7);
        assert_eq!(manifest.entry(Topic::Imu).unwrap().rows, 2);
        assert!(!truncated);
        assert_eq!(stream, vec![imu(0.0), baro, imu(0.004)]);
    }

    #[test]
    fn truncated_last_line_is_a_clean_end() {
        let dir = tempfile::tempdir().unwrap();
        write_log(dir.path(), &[imu(0.0), imu(0.004)]);
        let path = dir.path().join("imu.csv");
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("0.008,0.1,-0.2");
        std::fs::write(&path, text).unwrap();
        let log = read_log(dir.path(), Topic::Imu).unwrap();
        assert!(log.truncated);
        assert_eq!(log.messages.len(), 2);
    }

    #[test]
    fn corrupt_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_log(dir.path(), &[imu(0.0), imu(0.004)]);
        let path = dir.path().join("imu.csv");
        let text = std::fs::read_to_string(&path).unwrap().replace("0.004,", "0.004,x");
        std::fs::write(&path, text).unwrap();
        let err = read_log(dir.path(), Topic::Imu).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn backwards_time_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        write_log(dir.path(), &[imu(0.004), imu(0.0)]);
        let err = read_log(dir.path(), Topic::Imu).unwrap_err();
        assert!(matches!(err, LogError::NonMonotone { row: 3, .. }));
    }

    #[test]
    fn future_schema_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        write_log(dir.path(), &[]);
        let path = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("schema_version = 1", "schema_version = 2");
        std::fs::write(&path, text).unwrap();
        assert!(read_manifest(dir.path()).is_err());
    }
}
