use std::path::PathBuf;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use lcw_core::domain::SimDay;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PORT: u16 = 8080;

/// How the platform clock moves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Only `POST /api/sim/tick` advances the clock.
    #[default]
    Sim,
    /// The clock follows the wall clock, counted in whole days since the
    /// Unix epoch.
    Live,
}

impl TimeMode {
    pub fn today() -> SimDay {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        SimDay::new(u32::try_from(secs / 86_400).unwrap_or(u32::MAX))
    }
}

impl FromStr for TimeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(TimeMode::Sim),
            "live" => Ok(TimeMode::Live),
            other => Err(format!("unknown time mode {other:?} (expected sim or live)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub port: u16,
    pub time_mode: TimeMode,
    /// Write `snapshot.json` after this many new events.
    pub snapshot_every: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { data_dir: PathBuf::from("lcw-data"), port: DEFAULT_PORT, time_mode: TimeMode::Sim, snapshot_every: 500 }
    }
}

impl ServiceConfig {
    /// Reads `LCW_DATA_DIR`, `LCW_PORT` and `LCW_TIME_MODE`, falling back to
    /// the defaults for unset variables.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut config = Self::default();
        if let Some(dir) = lookup("LCW_DATA_DIR") {
            config.data_dir = dir.into();
        }
        if let Some(port) = lookup("LCW_PORT") {
            config.port = port.parse().map_err(|_| format!("LCW_PORT is not a port number: {port:?}"))?;
        }
        if let Some(mode) = lookup("LCW_TIME_MODE") {
            config.time_mode = mode.parse()?;
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_lookup() {
        let config = ServiceConfig::from_lookup(|k| match k {
            "LCW_PORT" => Some("9001".into()),
            "LCW_TIME_MODE" => Some("live".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(config.port, 9001);
        assert_eq!(config.time_mode, TimeMode::Live);
        assert_eq!(config.data_dir, PathBuf::from("lcw-data"));
        assert!(ServiceConfig::from_lookup(|k| (k == "LCW_PORT").then(|| "http".into())).is_err());
        assert!(ServiceConfig::from_lookup(|k| (k == "LCW_TIME_MODE").then(|| "wall".into())).is_err());
    }

    #[test]
    fn live_day_is_past_2020() {
        assert!(TimeMode::today() > SimDay::new(18_262));
    }
}
