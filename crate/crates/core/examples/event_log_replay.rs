//! Persists a scenario run to a log file, reads it back, verifies it and
//! rebuilds the platform from it, including from a prefix.

use lcw_core::log::{encode_log, read_log, EventSink, FileLog};
use lcw_core::platform::replay;
use lcw_core::sim::{run_scenario, Scenario};

pub fn run() -> Result<usize, Box<dyn std::error::Error>> {
    let scenario = Scenario::from_toml(include_str!("../scenarios/lcw.scenario"))?;
    let live = run_scenario(&scenario)?;

    let dir = std::env::temp_dir().join(format!("lcw-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("events.log");
    let _ = std::fs::remove_file(&path);
    let (mut log, existing) = FileLog::open(&path)?;
    assert!(existing.is_empty());
    for record in &live.log {
        log.append(record)?;
    }
    drop(log);

    let records = read_log(&path)?;
    assert_eq!(std::fs::read_to_string(&path)?, encode_log(&live.log));
    let state = replay(&records)?;
    println!("{} records, replayed state equals live state: {}", records.len(), state == live.state);

    let half = records.len() / 2;
    let prefix = replay(&records[..half])?;
    println!("prefix of {half} records: clock at day {}", prefix.clock().get());

    std::fs::remove_dir_all(&dir)?;
    Ok(records.len())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
