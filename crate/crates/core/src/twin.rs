//! Event-sourced registry of digital twins.
//!
//! Every twin is an append-only list of [`TwinEvent`]s. The live record keeps
//! an incrementally maintained view; [`materialize`] rebuilds the same view
//! from the event list alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DescriptorError, Money, ProductDescriptor, ProductId, SimDay, StakeholderId, ToolId, TwinId};

/// Damage codes known out of the box.
pub const DEFAULT_DAMAGE_CODES: [&str; 3] = ["plug_damaged", "cell_capacity_degraded", "bms_fault"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageTaxonomy {
    codes: BTreeSet<String>,
}

impl Default for DamageTaxonomy {
    fn default() -> Self {
        Self::new(DEFAULT_DAMAGE_CODES)
    }
}

impl DamageTaxonomy {
    pub fn new<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { codes: codes.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.contains(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    None,
    Minor,
    Major,
    Unserviceable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub component_path: String,
    pub damage_code: String,
    pub severity: Severity,
    #[serde(default)]
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub recorded_by: ToolId,
    pub day: SimDay,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub day: SimDay,
    pub readings: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairAction {
    pub damage_code: String,
    /// Component the damage was found on; absent when the code was not
    /// present and the action was a no-op.
    pub component_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub recorded_by: ToolId,
    pub performed_by: StakeholderId,
    pub day: SimDay,
    pub actions: Vec<RepairAction>,
    pub cost: Money,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwinSource {
    ToolingAssessment,
    ProductTelemetry,
    RepairRecord,
    BindingTransfer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", content = "data")]
pub enum TwinPayload {
    ToolingAssessment(ConditionReport),
    ProductTelemetry(Telemetry),
    RepairRecord(RepairRecord),
    BindingTransfer { from: StakeholderId, to: StakeholderId },
}

impl TwinPayload {
    pub fn source(&self) -> TwinSource {
        match self {
            TwinPayload::ToolingAssessment(_) => TwinSource::ToolingAssessment,
            TwinPayload::ProductTelemetry(_) => TwinSource::ProductTelemetry,
            TwinPayload::RepairRecord(_) => TwinSource::RepairRecord,
            TwinPayload::BindingTransfer { .. } => TwinSource::BindingTransfer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinEvent {
    pub seq: u64,
    pub day: SimDay,
    pub payload: TwinPayload,
}

/// Materialized view of a twin at some version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSnapshot {
    pub twin_id: TwinId,
    pub descriptor: ProductDescriptor,
    pub administrator: StakeholderId,
    pub version: u64,
    /// Latest finding per component path.
    pub condition: BTreeMap<String, Finding>,
    /// Latest reading per metric name.
    pub telemetry: BTreeMap<String, Measurement>,
}

impl TwinSnapshot {
    fn empty(twin_id: TwinId, descriptor: ProductDescriptor, administrator: StakeholderId) -> Self {
        Self { twin_id, descriptor, administrator, version: 0, condition: BTreeMap::new(), telemetry: BTreeMap::new() }
    }

    fn apply(&mut self, payload: &TwinPayload) {
        match payload {
            TwinPayload::ToolingAssessment(report) => {
                for finding in &report.findings {
                    self.condition.insert(finding.component_path.clone(), finding.clone());
                }
            }
            TwinPayload::ProductTelemetry(telemetry) => {
                for reading in &telemetry.readings {
                    self.telemetry.insert(reading.name.clone(), reading.clone());
                }
            }
            TwinPayload::RepairRecord(record) => {
                let repaired: BTreeSet<&str> = record.actions.iter().map(|a| a.damage_code.as_str()).collect();
                self.condition.retain(|_, f| !repaired.contains(f.damage_code.as_str()));
            }
            TwinPayload::BindingTransfer { to, .. } => self.administrator = to.clone(),
        }
        self.version += 1;
    }

    /// Findings that call for a service.
    pub fn serviceable_findings(&self) -> impl Iterator<Item = &Finding> {
        self.condition.values().filter(|f| f.severity >= Severity::Minor)
    }
}

/// Rebuilds a snapshot by folding `events` over the registration state.
pub fn materialize(
    twin_id: &TwinId,
    descriptor: &ProductDescriptor,
    initial_administrator: &StakeholderId,
    events: &[TwinEvent],
) -> TwinSnapshot {
    let mut snapshot = TwinSnapshot::empty(twin_id.clone(), descriptor.clone(), initial_administrator.clone());
    for event in events {
        snapshot.apply(&event.payload);
    }
    snapshot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinRecord {
    pub twin_id: TwinId,
    pub descriptor: ProductDescriptor,
    pub initial_administrator: StakeholderId,
    pub registered_day: SimDay,
    events: Vec<TwinEvent>,
    live: TwinSnapshot,
}

impl TwinRecord {
    pub fn version(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn administrator(&self) -> &StakeholderId {
        &self.live.administrator
    }

    pub fn events(&self) -> &[TwinEvent] {
        &self.events
    }

    pub fn live(&self) -> &TwinSnapshot {
        &self.live
    }

    fn last_day(&self) -> SimDay {
        self.events.last().map_or(self.registered_day, |e| e.day)
    }

    fn push(&mut self, day: SimDay, payload: TwinPayload) -> u64 {
        self.live.apply(&payload);
        self.events.push(TwinEvent { seq: self.events.len() as u64, day, payload });
        self.version()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwinError {
    #[error("product {0} already has a twin")]
    DuplicateProduct(ProductId),
    #[error("unknown twin {0}")]
    UnknownTwin(TwinId),
    #[error("parent product {0} is not registered")]
    UnknownParent(ProductId),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(#[from] DescriptorError),
    #[error("event day {day} precedes the twin's last event ({last})")]
    NonMonotonicDay { day: SimDay, last: SimDay },
    #[error("product {0} has no connectivity")]
    NotConnected(ProductId),
    #[error("damage code {0:?} is not in the taxonomy")]
    UnknownDamageCode(String),
    #[error("finding has an empty component path")]
    EmptyComponentPath,
    #[error("{0} is already the bound administrator")]
    InvalidTransfer(StakeholderId),
    #[error("version {requested} is beyond the current version {current}")]
    VersionOutOfRange { requested: u64, current: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TwinRegistry {
    taxonomy: DamageTaxonomy,
    twins: BTreeMap<TwinId, TwinRecord>,
    by_product: BTreeMap<ProductId, TwinId>,
}

impl TwinRegistry {
    pub fn new(taxonomy: DamageTaxonomy) -> Self {
        Self { taxonomy, ..Self::default() }
    }

    pub fn taxonomy(&self) -> &DamageTaxonomy {
        &self.taxonomy
    }

    pub fn set_taxonomy(&mut self, taxonomy: DamageTaxonomy) {
        self.taxonomy = taxonomy;
    }

    pub fn len(&self) -> usize {
        self.twins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twins.is_empty()
    }

    pub fn twin_id_for(product_id: &ProductId) -> TwinId {
        TwinId::new(format!("twin-{product_id}"))
    }

    pub fn get(&self, twin_id: &TwinId) -> Result<&TwinRecord, TwinError> {
        self.twins.get(twin_id).ok_or_else(|| TwinError::UnknownTwin(twin_id.clone()))
    }

    pub fn by_product(&self, product_id: &ProductId) -> Option<&TwinRecord> {
        self.by_product.get(product_id).and_then(|id| self.twins.get(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &TwinRecord> {
        self.twins.values()
    }

    pub fn bound_to<'a>(&'a self, administrator: &'a StakeholderId) -> impl Iterator<Item = &'a TwinRecord> {
        self.twins.values().filter(move |t| t.administrator() == administrator)
    }

    pub fn register_twin(
        &mut self,
        descriptor: ProductDescriptor,
        administrator: StakeholderId,
        day: SimDay,
    ) -> Result<TwinId, TwinError> {
        descriptor.validate()?;
        if self.by_product.contains_key(&descriptor.product_id) {
            return Err(TwinError::DuplicateProduct(descriptor.product_id));
        }
        if let Some(parent) = &descriptor.parent {
            let parent_record = self.by_product(parent).ok_or_else(|| TwinError::UnknownParent(parent.clone()))?;
            descriptor.validate_parent_kind(parent_record.descriptor.kind)?;
        }
        let twin_id = Self::twin_id_for(&descriptor.product_id);
        let live = TwinSnapshot::empty(twin_id.clone(), descriptor.clone(), administrator.clone());
        self.by_product.insert(descriptor.product_id.clone(), twin_id.clone());
        self.twins.insert(
            twin_id.clone(),
            TwinRecord {
                twin_id: twin_id.clone(),
                descriptor,
                initial_administrator: administrator,
                registered_day: day,
                events: Vec::new(),
                live,
            },
        );
        Ok(twin_id)
    }

    fn record_for_append(&mut self, twin_id: &TwinId, day: SimDay) -> Result<&mut TwinRecord, TwinError> {
        let record = self.twins.get_mut(twin_id).ok_or_else(|| TwinError::UnknownTwin(twin_id.clone()))?;
        let last = record.last_day();
        if day < last {
            return Err(TwinError::NonMonotonicDay { day, last });
        }
        Ok(record)
    }

    fn check_code(&self, code: &str) -> Result<(), TwinError> {
        if self.taxonomy.contains(code) {
            Ok(())
        } else {
            Err(TwinError::UnknownDamageCode(code.to_owned()))
        }
    }

    pub fn ingest_assessment(&mut self, twin_id: &TwinId, report: ConditionReport) -> Result<u64, TwinError> {
        for finding in &report.findings {
            if finding.component_path.trim().is_empty() {
                return Err(TwinError::EmptyComponentPath);
            }
            self.check_code(&finding.damage_code)?;
        }
        let record = self.record_for_append(twin_id, report.day)?;
        Ok(record.push(report.day, TwinPayload::ToolingAssessment(report)))
    }

    pub fn ingest_telemetry(&mut self, twin_id: &TwinId, telemetry: Telemetry) -> Result<u64, TwinError> {
        let record = self.record_for_append(twin_id, telemetry.day)?;
        if !record.descriptor.connectivity {
            return Err(TwinError::NotConnected(record.descriptor.product_id.clone()));
        }
        Ok(record.push(telemetry.day, TwinPayload::ProductTelemetry(telemetry)))
    }

    pub fn ingest_repair(&mut self, twin_id: &TwinId, repair: RepairRecord) -> Result<u64, TwinError> {
        for action in &repair.actions {
            self.check_code(&action.damage_code)?;
        }
        let record = self.record_for_append(twin_id, repair.day)?;
        Ok(record.push(repair.day, TwinPayload::RepairRecord(repair)))
    }

    pub fn transfer_binding(
        &mut self,
        twin_id: &TwinId,
        new_administrator: StakeholderId,
        day: SimDay,
    ) -> Result<u64, TwinError> {
        let record = self.record_for_append(twin_id, day)?;
        let from = record.administrator().clone();
        if from == new_administrator {
            return Err(TwinError::InvalidTransfer(new_administrator));
        }
        Ok(record.push(day, TwinPayload::BindingTransfer { from, to: new_administrator }))
    }

    /// Current view, or the view after the first `at_version` events.
    pub fn snapshot(&self, twin_id: &TwinId, at_version: Option<u64>) -> Result<TwinSnapshot, TwinError> {
        let record = self.get(twin_id)?;
        match at_version {
            None => Ok(record.live.clone()),
            Some(v) if v > record.version() => {
                Err(TwinError::VersionOutOfRange { requested: v, current: record.version() })
            }
            Some(v) if v == record.version() => Ok(record.live.clone()),
            Some(v) => Ok(materialize(
                &record.twin_id,
                &record.descriptor,
                &record.initial_administrator,
                &record.events[..v as usize],
            )),
        }
    }
}
