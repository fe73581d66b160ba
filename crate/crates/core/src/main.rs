use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotorstack::app::{self, SimRunArgs, EXIT_OK};
use rotorstack::runtime::Registry;

#[derive(Parser)]
#[command(version, about = "Multirotor autonomy stack and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly a mission in simulation and write logs plus a summary report.
    SimRun {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's mission entry.
        #[arg(long)]
        mission: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Re-run the estimator over the sensor topics of a recorded log.
    ReplayEstimator {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a configuration and, optionally, a mission.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mission: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let registry = Registry::with_defaults();
    let result = match cli.command {
        Command::SimRun {
            config,
            mission,
            out,
            seed,
            duration,
        } => {
            let args = SimRunArgs {
                config,
                mission,
                out,
                seed,
                duration,
            };
            app::sim_run(&args, &registry).map(|o| {
                print!("{}", o.summary.to_text());
                o.exit_code()
            })
        }
        Command::ReplayEstimator { log, config, out } => app::replay_estimator(&log, &config, &out).map(|o| {
            println!("{} estimates written to {}", o.estimates.len(), out.display());
            match o.stats {
                Some(s) => println!(
                    "estimator RMS: position {:.3} m, velocity {:.3} m/s, attitude {:.3} deg",
                    s.position, s.velocity, s.attitude_deg
                ),
                None => println!("no truth topic in the log: error statistics unavailable"),
            }
            EXIT_OK
        }),
        Command::Validate { config, mission } => app::validate(&config, mission.as_deref()).map(|()| {
            println!("ok");
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
