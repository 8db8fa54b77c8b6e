//! Data directory: the event log, an optional snapshot, and a lock file.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use lcw_core::log::{EventRecord, EventSink, FileLog, LogError};
use lcw_core::platform::{replay, Platform, PlatformState};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const LOCK_FILE: &str = "LOCK";

/// Exclusive handle on a data directory. The lock is released on drop.
#[derive(Debug)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ServiceError::io(&root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { root })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(ServiceError::DataDirLocked(root)),
            Err(e) => Err(ServiceError::io(&lock, e)),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join(LOG_FILE)
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.root.join(SNAPSHOT_FILE)
    }
}

impl Drop for DataDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK_FILE));
    }
}

/// File log that also keeps every committed record in memory for the
/// events endpoint.
pub struct MirroredLog {
    file: FileLog,
    records: Vec<EventRecord>,
}

impl MirroredLog {
    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }
}

impl EventSink for MirroredLog {
    fn append(&mut self, record: &EventRecord) -> Result<(), LogError> {
        self.file.append(record)?;
        self.records.push(record.clone());
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    /// Number of records folded into `state`.
    records: u64,
    /// Encoded last folded record, to detect a snapshot from another log.
    last_record: Option<String>,
    state: PlatformState,
}

/// Rebuilds the platform from the directory. A snapshot that does not match
/// the log is ignored and the full log is replayed instead.
pub fn load(dir: &DataDir, sync: bool) -> Result<Platform<MirroredLog>, ServiceError> {
    let (file, records) = FileLog::open(dir.log_path())?;
    let file = if sync { file } else { file.without_sync() };
    let state = match read_snapshot(dir, &records) {
        Some(mut state) => {
            for record in &records[state.next_seq() as usize..] {
                state.apply(record)?;
            }
            state
        }
        None => replay(&records)?,
    };
    Ok(Platform::from_state(state, MirroredLog { file, records }))
}

fn read_snapshot(dir: &DataDir, records: &[EventRecord]) -> Option<PlatformState> {
    let text = fs::read_to_string(dir.snapshot_path()).ok()?;
    let snapshot: Snapshot = serde_json::from_str(&text).ok()?;
    let n = usize::try_from(snapshot.records).ok()?;
    if n > records.len() || snapshot.state.next_seq() != snapshot.records {
        return None;
    }
    let last = n.checked_sub(1).map(|i| records[i].encode());
    (last == snapshot.last_record).then_some(snapshot.state)
}

/// Writes `snapshot.json` atomically (temp file, then rename).
pub fn write_snapshot(dir: &DataDir, platform: &Platform<MirroredLog>) -> Result<(), ServiceError> {
    let records = platform.sink().records();
    let snapshot = Snapshot {
        records: records.len() as u64,
        last_record: records.last().map(EventRecord::encode),
        state: platform.state().clone(),
    };
    let text = serde_json::to_string(&snapshot).map_err(|e| ServiceError::io(dir.root(), io::Error::other(e)))?;
    let tmp = dir.root().join(format!("{SNAPSHOT_FILE}.tmp"));
    fs::write(&tmp, text).map_err(|e| ServiceError::io(&tmp, e))?;
    fs::rename(&tmp, dir.snapshot_path()).map_err(|e| ServiceError::io(dir.root(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lcw_core::domain::SimDay;

    #[test]
    fn lock_is_exclusive_and_released() {
        let tmp = tempfile::tempdir().unwrap();
        let first = DataDir::open(tmp.path()).unwrap();
        assert!(matches!(DataDir::open(tmp.path()), Err(ServiceError::DataDirLocked(_))));
        drop(first);
        assert!(DataDir::open(tmp.path()).is_ok());
    }

    #[test]
    fn snapshot_plus_tail_equals_replay() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = DataDir::open(tmp.path()).unwrap();
        let mut p = load(&dir, false).unwrap();
        for day in 1..=5 {
            p.advance_clock(SimDay::new(day)).unwrap();
        }
        write_snapshot(&dir, &p).unwrap();
        for day in 6..=9 {
            p.advance_clock(SimDay::new(day)).unwrap();
        }
        let live = p.state().clone();
        drop(p);
        let reloaded = load(&dir, false).unwrap();
        assert_eq!(reloaded.state(), &live);
        assert_eq!(reloaded.sink().records().len(), 9);
    }

    #[test]
    fn foreign_snapshot_is_ignored() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = DataDir::open(tmp.path()).unwrap();
        let mut p = load(&dir, false).unwrap();
        p.advance_clock(SimDay::new(3)).unwrap();
        write_snapshot(&dir, &p).unwrap();
        drop(p);
        // a different history of the same length
        fs::write(
            dir.log_path(),
            r#"{"seq":0,"day":4,"kind":"sim.clock_advanced","payload":{"to":4}}"#.to_owned() + "\n",
        )
        .unwrap();
        let reloaded = load(&dir, false).unwrap();
        assert_eq!(reloaded.clock(), SimDay::new(4));
    }
}
