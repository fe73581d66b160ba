//! The operations behind the command-line tool: run a mission, replay the
//! estimator over a log, validate a configuration.
//!
//! Exit codes: 0 success, 1 configuration or user error, 2 runtime failsafe
//! or incomplete mission.

use std::path::{Path, PathBuf};

use crate::config::{ConfigError, ScenarioConfig};
use crate::estimator::{Ekf, SensorMessage};
use crate::messages::{Message, StateEstimate, Topic, TruthSample};
use crate::mission::{check_feasible, MissionFile};
use crate::navigation::MissionPlan;
use crate::report::{estimator_rms, mission_metrics, EstimatorRms, MissionMetrics, Summary};
use crate::runtime::log::{read_log, read_sensor_stream, CsvLogger, LogError};
use crate::runtime::nodes::to_sensor_message;
use crate::runtime::{build_stack, BuildContext, ExitReport, ExitStatus, Node, Registry, RuntimeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_FAILSAFE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no mission given: pass --mission or set `mission` in the config")]
    NoMission,
    #[error("estimator fault during replay: {0}")]
    Replay(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Replay(_) => EXIT_FAILSAFE,
            _ => EXIT_USER,
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|source| AppError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A validated configuration together with its resolved mission.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mission: MissionFile,
    pub plan: MissionPlan,
}

impl Scenario {
    /// Validate and resolve. A mission origin, when given, also anchors the
    /// estimator's local frame so waypoints and estimates share one frame.
    pub fn new(mut config: ScenarioConfig, mission: MissionFile) -> Result<Self, ConfigError> {
        config.validate()?;
        let plan = mission.resolve(config.sim.sensors.origin)?;
        check_feasible(&plan, config.manager.min_leg_time, config.controller.tilt_limit_deg)?;
        if let Some(o) = mission.origin {
            config.estimator.origin = Some(o);
        }
        Ok(Self { config, mission, plan })
    }

    /// Load from files. `mission` overrides the config's own mission entry.
    pub fn load(config: &Path, mission: Option<&Path>) -> Result<Self, AppError> {
        let cfg = ScenarioConfig::load(config)?;
        let path = mission.map(Path::to_path_buf).or_else(|| cfg.mission.clone());
        let path = path.ok_or(AppError::NoMission)?;
        let mission = MissionFile::load(&path)?;
        Ok(Self::new(cfg, mission)?)
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit: ExitReport,
    pub metrics: MissionMetrics,
    pub summary: Summary,
    /// Every message published during the run.
    pub trace: Vec<Message>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }

    pub fn estimates(&self) -> Vec<StateEstimate> {
        self.trace
            .iter()
            .filter_map(|m| match m {
                Message::Estimate(e) => Some(*e),
                _ => None,
            })
            .collect()
    }

    pub fn truth(&self) -> Vec<TruthSample> {
        self.trace
            .iter()
            .filter_map(|m| match m {
                Message::Truth(t) => Some(*t),
                _ => None,
            })
            .collect()
    }
}

/// Run a scenario in-process. Logs go to `out` when the logger is bound.
pub fn run_scenario(scenario: &Scenario, registry: &Registry, out: Option<&Path>) -> Result<RunOutcome, AppError> {
    let cfg = &scenario.config;
    let mut ctx = BuildContext::new(cfg).with_plan(&scenario.plan);
    if let Some(dir) = out {
        ctx = ctx.with_out_dir(dir);
    }
    let mut stack = build_stack(registry, &ctx)?;
    stack.enable_trace();
    let exit = stack.run(cfg.duration);
    let trace = stack.take_trace();
    let metrics = mission_metrics(&trace, &scenario.plan.waypoints);
    let complete = metrics.complete_time.is_some();
    let exit_code = match exit.status {
        ExitStatus::Completed if complete => EXIT_OK,
        // Duration ran out after the mission completed but before the hold
        // finished: the mission itself succeeded.
        ExitStatus::DurationElapsed if complete => EXIT_OK,
        _ => EXIT_FAILSAFE,
    };
    let path = metrics.path;
    let est = metrics.estimator;
    let summary = Summary {
        status: exit.status.key().to_string(),
        exit_code,
        reason: exit.reason.clone(),
        seed: cfg.seed,
        config_hash: ctx.config_hash.clone(),
        sim_time: exit.end_time,
        mission_complete: complete,
        waypoints_reached: metrics.arrivals.len(),
        arrival_times: metrics.arrivals.iter().map(|a| a.1).collect(),
        arrival_errors_m: metrics.arrivals.iter().map(|a| a.2).collect(),
        takeoff_time: metrics.takeoff_time,
        complete_time: metrics.complete_time,
        path_rmse_north: path.map(|p| p.north),
        path_rmse_east: path.map(|p| p.east),
        path_rmse_down: path.map(|p| p.down),
        path_rmse_total: path.map(|p| p.total),
        est_rms_position_m: est.map(|e| e.position),
        est_rms_velocity_mps: est.map(|e| e.velocity),
        est_rms_attitude_deg: est.map(|e| e.attitude_deg),
        controller_failsafe_ticks: exit.counters.get("controller_failsafe").copied().unwrap_or(0),
        warnings: exit.warnings.len(),
    };
    Ok(RunOutcome {
        exit,
        metrics,
        summary,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct SimRunArgs {
    pub config: PathBuf,
    pub mission: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
}

/// Run a mission and write logs, a copy of the effective configuration and
/// mission, and the summary report under `out`.
pub fn sim_run(args: &SimRunArgs, registry: &Registry) -> Result<RunOutcome, AppError> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.duration {
        cfg.duration = d;
    }
    let mission_path = args.mission.clone().or_else(|| cfg.mission.clone()).ok_or(AppError::NoMission)?;
    let mission = MissionFile::load(&mission_path)?;
    // The copy in the run directory refers to its neighbouring mission file.
    cfg.mission = Some(PathBuf::from("mission.toml"));
    let scenario = Scenario::new(cfg, mission)?;

    let out = &args.out;
    std::fs::create_dir_all(out).map_err(|source| AppError::Io {
        path: out.clone(),
        source,
    })?;
    write(&out.join("config.toml"), &scenario.config.to_toml())?;
    write(&out.join("mission.toml"), &scenario.mission.to_toml())?;
    let outcome = run_scenario(&scenario, registry, Some(out))?;
    write(&out.join("summary.toml"), &outcome.summary.to_toml())?;
    write(&out.join("summary.txt"), &outcome.summary.to_text())?;
    Ok(outcome)
}

/// Result of replaying the estimator over a recorded log.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub estimates: Vec<StateEstimate>,
    /// `None` when the log has no truth topic.
    pub stats: Option<EstimatorRms>,
    /// The log ended in a partial line, which was dropped.
    pub truncated: bool,
}

/// Replay the estimator over a log's sensor topics.
pub fn replay(log: &Path, cfg: &ScenarioConfig) -> Result<ReplayOutcome, AppError> {
    let (manifest, stream, mut truncated) = read_sensor_stream(log)?;
    let sensors: Vec<SensorMessage> = stream.iter().filter_map(to_sensor_message).collect();
    let mut ekf = Ekf::new(cfg.estimator.clone());
    let estimates = ekf.process(&sensors).map_err(|e| AppError::Replay(e.to_string()))?;
    let stats = if manifest.entry(Topic::Truth).is_some() {
        let t = read_log(log, Topic::Truth)?;
        truncated |= t.truncated;
        let truth: Vec<TruthSample> = t
            .messages
            .into_iter()
            .filter_map(|m| match m {
                Message::Truth(t) => Some(t),
                _ => None,
            })
            .collect();
        estimator_rms(&truth, &estimates, f64::NEG_INFINITY, f64::INFINITY)
    } else {
        None
    };
    Ok(ReplayOutcome {
        estimates,
        stats,
        truncated,
    })
}

/// Replay and write `estimate.csv`, a manifest and `replay_summary.toml`.
pub fn replay_estimator(log: &Path, config: &Path, out: &Path) -> Result<ReplayOutcome, AppError> {
    let cfg = ScenarioConfig::load(config)?;
    cfg.validate()?;
    let outcome = replay(log, &cfg)?;
    let mut logger = CsvLogger::with_topics(out, &[Topic::Estimate], cfg.seed, &cfg.hash())?;
    for e in &outcome.estimates {
        logger.record(&Message::Estimate(*e)).map_err(|source| AppError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    }
    logger.finish().map_err(|f| AppError::Replay(f.message))?;

    let mut text = String::new();
    text.push_str(&format!("estimates = {}\n", outcome.estimates.len()));
    text.push_str(&format!("truncated_input = {}\n", outcome.truncated));
    match outcome.stats {
        Some(s) => {
            text.push_str("truth_available = true\n");
            text.push_str(&format!("est_rms_position_m = {}\n", s.position));
            text.push_str(&format!("est_rms_velocity_mps = {}\n", s.velocity));
            text.push_str(&format!("est_rms_attitude_deg = {}\n", s.attitude_deg));
        }
        None => text.push_str("truth_available = false\n"),
    }
    write(&out.join("replay_summary.toml"), &text)?;
    Ok(outcome)
}

/// Schema and physical checks. With no mission argument the config's own
/// mission entry, if any, is checked.
pub fn validate(config: &Path, mission: Option<&Path>) -> Result<(), AppError> {
    let cfg = ScenarioConfig::load(config)?;
    match mission.map(Path::to_path_buf).or_else(|| cfg.mission.clone()) {
        Some(path) => {
            Scenario::new(cfg, MissionFile::load(&path)?)?;
        }
        None => cfg.validate()?,
    }
    Ok(())
}
