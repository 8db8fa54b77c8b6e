//! Operator command line.
//!
//! | exit | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | runtime failure (I/O, storage, bind, locked data directory) |
//! | 2 | usage error |
//! | 3 | scenario invalid |
//! | 4 | log corrupt |
//! | 5 | twin or case not found |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use lcw_core::log::{encode_log, read_log, LogError};
use lcw_core::platform::{replay, PlatformError, PlatformState};
use lcw_core::sim::{render_comparison, render_table, run_scenario, Scenario, SimError, SimulationReport};

use crate::config::{ServiceConfig, TimeMode};
use crate::store::LOG_FILE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SCENARIO_INVALID: i32 = 3;
pub const EXIT_LOG_CORRUPT: i32 = 4;
pub const EXIT_NOT_FOUND: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "lcw", version, about = "Maintenance-service marketplace over digital twins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP/JSON service (flags override LCW_DATA_DIR, LCW_PORT, LCW_TIME_MODE).
    Serve {
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        time_mode: Option<TimeMode>,
    },
    /// Simulate a scenario, print the KPI table and write the JSON report.
    ScenarioRun {
        file: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Side-by-side KPI table of two scenarios.
    ScenarioCompare { a: PathBuf, b: PathBuf },
    /// Print a twin rebuilt from a data directory's log.
    TwinShow {
        twin_id: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        version: Option<u64>,
    },
    /// Print a case rebuilt from a data directory's log.
    CaseShow {
        case_id: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Gap, order and schema scan of an event log.
    LogVerify { log: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl std::fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::ScenarioInvalid(_) | SimError::MissingShippingRoute { .. } => EXIT_SCENARIO_INVALID,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e)
    }
}

fn log_failure(path: &Path, e: LogError) -> Failure {
    match e {
        LogError::Corrupt { .. } => Failure::new(EXIT_LOG_CORRUPT, format!("{}: {e}", path.display())),
        LogError::Storage(_) => Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())),
    }
}

fn replay_failure(path: &Path, e: PlatformError) -> Failure {
    Failure::new(EXIT_LOG_CORRUPT, format!("{}: replay refused: {e}", path.display()))
}

/// Entry point of the `lcw` binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first) and runs the command.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "lcw: {}", f.message);
            f.code
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_FAILURE, e))
}

fn simulate(file: &Path, seed: Option<u64>) -> Result<(SimulationReport, String), Failure> {
    let mut scenario = Scenario::load(file)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let run = run_scenario(&scenario)?;
    Ok((run.report, encode_log(&run.log)))
}

fn data_dir_state(data_dir: Option<PathBuf>) -> Result<PlatformState, Failure> {
    let dir = match data_dir {
        Some(d) => d,
        None => ServiceConfig::from_env().map_err(|e| Failure::new(EXIT_USAGE, e))?.data_dir,
    };
    let path = dir.join(LOG_FILE);
    let records = read_log(&path).map_err(|e| log_failure(&path, e))?;
    replay(&records).map_err(|e| replay_failure(&path, e))
}

fn not_found(e: PlatformError) -> Failure {
    let code = match e.code() {
        "UnknownTwin" | "UnknownCase" | "VersionOutOfRange" => EXIT_NOT_FOUND,
        _ => EXIT_FAILURE,
    };
    Failure::new(code, e)
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    text
}

fn run(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Serve { data_dir, port, time_mode } => {
            let mut config = ServiceConfig::from_env().map_err(|e| Failure::new(EXIT_USAGE, e))?;
            if let Some(d) = data_dir {
                config.data_dir = d;
            }
            if let Some(p) = port {
                config.port = p;
            }
            if let Some(m) = time_mode {
                config.time_mode = m;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            runtime.block_on(crate::serve(config)).map_err(|e| Failure::new(EXIT_FAILURE, e))
        }
        Command::ScenarioRun { file, seed, out: report_path, log } => {
            let (report, encoded) = simulate(&file, seed)?;
            if let Some(path) = report_path {
                write_file(&path, &report.to_json())?;
            }
            if let Some(path) = log {
                write_file(&path, &encoded)?;
            }
            emit(out, &render_table(&report))
        }
        Command::ScenarioCompare { a, b } => {
            let (a, _) = simulate(&a, None)?;
            let (b, _) = simulate(&b, None)?;
            emit(out, &render_comparison(&a, &b))
        }
        Command::TwinShow { twin_id, data_dir, version } => {
            let state = data_dir_state(data_dir)?;
            let twin_id = twin_id.as_str().into();
            let snapshot = state.twins().snapshot(&twin_id, version).map_err(|e| not_found(e.into()))?;
            let record = state.twins().get(&twin_id).map_err(|e| not_found(e.into()))?;
            let history = &record.events()[..snapshot.version as usize];
            emit(out, &pretty(&json!({ "snapshot": snapshot, "history": history })))
        }
        Command::CaseShow { case_id, data_dir } => {
            let state = data_dir_state(data_dir)?;
            let case = state.case(&case_id.as_str().into()).map_err(not_found)?;
            emit(out, &pretty(&json!({ "case": case, "recommendation": case.recommendation() })))
        }
        Command::LogVerify { log } => {
            let records = read_log(&log).map_err(|e| log_failure(&log, e))?;
            let state = replay(&records).map_err(|e| replay_failure(&log, e))?;
            emit(
                out,
                &format!(
                    "ok: {} records, clock at day {}, {} twins, {} cases\n",
                    records.len(),
                    state.clock().get(),
                    state.twins().len(),
                    state.market().len()
                ),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = execute(std::iter::once("lcw").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(exec(&[]).0, EXIT_USAGE);
        assert_eq!(exec(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(exec(&["log-verify", "x.log", "--strict"]).0, EXIT_USAGE);
        assert_eq!(exec(&["serve", "--time-mode", "wall"]).0, EXIT_USAGE);
        assert_eq!(exec(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_scenario_is_invalid() {
        let (code, _, err) = exec(&["scenario-run", "/nonexistent/x.scenario"]);
        assert_eq!(code, EXIT_SCENARIO_INVALID);
        assert!(err.contains("x.scenario"));
    }
}
