//! Append-only event log.
//!
//! One JSON record per line, keys in the order `seq`, `day`, `kind`,
//! `payload`. Every line ends with `\n`; there are no blank lines.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AdministratorConfig, Decision, DecisionMode, ProviderConfig, ServiceOffer, ServiceRequest};
use crate::domain::{CaseEvent, CaseId, CaseState, ProductDescriptor, SimDay, StakeholderId, TwinId};
use crate::twin::{ConditionReport, RepairRecord, Telemetry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum PlatformEvent {
    #[serde(rename = "twin.taxonomy_configured")]
    TaxonomyConfigured { damage_codes: Vec<String> },
    #[serde(rename = "sim.clock_advanced")]
    ClockAdvanced { to: SimDay },
    #[serde(rename = "twin.registered")]
    TwinRegistered { twin_id: TwinId, descriptor: ProductDescriptor, administrator: StakeholderId },
    #[serde(rename = "twin.assessment_ingested")]
    AssessmentIngested { twin_id: TwinId, report: ConditionReport },
    #[serde(rename = "twin.telemetry_ingested")]
    TelemetryIngested { twin_id: TwinId, telemetry: Telemetry },
    #[serde(rename = "twin.repair_recorded")]
    RepairRecorded { twin_id: TwinId, record: RepairRecord },
    #[serde(rename = "twin.binding_transferred")]
    BindingTransferred { twin_id: TwinId, from: StakeholderId, to: StakeholderId },
    #[serde(rename = "agent.administrator_configured")]
    AdministratorConfigured { config: AdministratorConfig },
    #[serde(rename = "agent.provider_configured")]
    ProviderConfigured { config: ProviderConfig },
    /// An administrator agent read a twin to formulate a request.
    #[serde(rename = "agent.twin_evaluated")]
    TwinEvaluated { administrator: StakeholderId, twin_id: TwinId, twin_version: u64 },
    #[serde(rename = "market.request_posted")]
    RequestPosted {
        case_id: CaseId,
        administrator: StakeholderId,
        request: ServiceRequest,
        decision_mode: DecisionMode,
        offer_window_days: u32,
    },
    #[serde(rename = "market.offer_submitted")]
    OfferSubmitted { case_id: CaseId, offer: ServiceOffer },
    #[serde(rename = "market.case_decided")]
    CaseDecided { case_id: CaseId, decision: Decision, manual: bool },
    #[serde(rename = "market.case_advanced")]
    CaseAdvanced { case_id: CaseId, event: CaseEvent, to: CaseState, replacement_twin: Option<TwinId> },
}

impl PlatformEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            PlatformEvent::TaxonomyConfigured { .. } => "twin.taxonomy_configured",
            PlatformEvent::ClockAdvanced { .. } => "sim.clock_advanced",
            PlatformEvent::TwinRegistered { .. } => "twin.registered",
            PlatformEvent::AssessmentIngested { .. } => "twin.assessment_ingested",
            PlatformEvent::TelemetryIngested { .. } => "twin.telemetry_ingested",
            PlatformEvent::RepairRecorded { .. } => "twin.repair_recorded",
            PlatformEvent::BindingTransferred { .. } => "twin.binding_transferred",
            PlatformEvent::AdministratorConfigured { .. } => "agent.administrator_configured",
            PlatformEvent::ProviderConfigured { .. } => "agent.provider_configured",
            PlatformEvent::TwinEvaluated { .. } => "agent.twin_evaluated",
            PlatformEvent::RequestPosted { .. } => "market.request_posted",
            PlatformEvent::OfferSubmitted { .. } => "market.offer_submitted",
            PlatformEvent::CaseDecided { .. } => "market.case_decided",
            PlatformEvent::CaseAdvanced { .. } => "market.case_advanced",
        }
    }

    /// Case this event belongs to, if any.
    pub fn case_id(&self) -> Option<&CaseId> {
        match self {
            PlatformEvent::RequestPosted { case_id, .. }
            | PlatformEvent::OfferSubmitted { case_id, .. }
            | PlatformEvent::CaseDecided { case_id, .. }
            | PlatformEvent::CaseAdvanced { case_id, .. } => Some(case_id),
            _ => None,
        }
    }

    /// Twin this event touches, if any.
    pub fn twin_id(&self) -> Option<&TwinId> {
        match self {
            PlatformEvent::TwinRegistered { twin_id, .. }
            | PlatformEvent::AssessmentIngested { twin_id, .. }
            | PlatformEvent::TelemetryIngested { twin_id, .. }
            | PlatformEvent::RepairRecorded { twin_id, .. }
            | PlatformEvent::BindingTransferred { twin_id, .. }
            | PlatformEvent::TwinEvaluated { twin_id, .. } => Some(twin_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub day: SimDay,
    #[serde(flatten)]
    pub event: PlatformEvent,
}

impl EventRecord {
    pub fn kind(&self) -> &'static str {
        self.event.kind()
    }

    /// The record's line, without the terminating newline.
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("event records always serialize")
    }

    pub fn decode(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("corrupt log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
}

/// Destination of committed records.
pub trait EventSink {
    fn append(&mut self, record: &EventRecord) -> Result<(), LogError>;
}

impl EventSink for Vec<EventRecord> {
    fn append(&mut self, record: &EventRecord) -> Result<(), LogError> {
        self.push(record.clone());
        Ok(())
    }
}

/// Writes the whole log in the line format.
pub fn encode_log(records: &[EventRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.encode());
        out.push('\n');
    }
    out
}

/// Parses and verifies a log: sequence numbers start at 0 without gaps and
/// days never decrease.
pub fn parse_log(text: &str) -> Result<Vec<EventRecord>, LogError> {
    let mut records = Vec::new();
    if text.is_empty() {
        return Ok(records);
    }
    let body = text.strip_suffix('\n').ok_or(LogError::Corrupt {
        line: text.lines().count(),
        reason: "last record is not newline-terminated".into(),
    })?;
    for (index, line) in body.split('\n').enumerate() {
        let record = EventRecord::decode(line).map_err(|e| LogError::Corrupt {
            line: index + 1,
            reason: if line.trim().is_empty() { "blank line".into() } else { format!("schema violation: {e}") },
        })?;
        records.push(record);
    }
    verify_records(&records)?;
    Ok(records)
}

/// Gap and monotonicity scan over decoded records.
pub fn verify_records(records: &[EventRecord]) -> Result<(), LogError> {
    let mut last_day = SimDay::ZERO;
    for (index, record) in records.iter().enumerate() {
        if record.seq != index as u64 {
            return Err(LogError::Corrupt {
                line: index + 1,
                reason: format!("expected seq {index}, found {}", record.seq),
            });
        }
        if record.day < last_day {
            return Err(LogError::Corrupt {
                line: index + 1,
                reason: format!("day {} precedes {}", record.day.get(), last_day.get()),
            });
        }
        last_day = record.day;
    }
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, LogError> {
    let text = std::fs::read_to_string(path)?;
    parse_log(&text)
}

/// File-backed sink. Each append is flushed and synced before it returns.
pub struct FileLog {
    path: PathBuf,
    file: File,
    sync: bool,
}

impl FileLog {
    /// Opens (or creates) the log and returns it with the records it holds.
    pub fn open(path: impl Into<PathBuf>) -> Result<(Self, Vec<EventRecord>), LogError> {
        let path = path.into();
        let existing = match std::fs::read_to_string(&path) {
            Ok(text) => parse_log(&text)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((Self { path, file, sync: true }, existing))
    }

    /// Skip fsync after each append (tests and bulk simulation).
    pub fn without_sync(mut self) -> Self {
        self.sync = false;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for FileLog {
    fn append(&mut self, record: &EventRecord) -> Result<(), LogError> {
        let mut line = record.encode();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        if self.sync {
            self.file.sync_data()?;
        }
        Ok(())
    }
}
