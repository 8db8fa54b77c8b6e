//! The platform: twins, market and agent configurations, mutated only by
//! committing [`PlatformEvent`]s.
//!
//! [`PlatformState::apply`] is the single mutation path. It validates a
//! record in full before touching anything, so the live platform and a
//! replay of its log run the same code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    build_service_request, match_request, AdministratorConfig, AgentError, Decision, ProviderConfig, ServiceOffer,
};
use crate::domain::{
    advance_case, custody, BusinessModel, CaseError, CaseEvent, CaseId, CaseState, Holder, Money, ProductDescriptor,
    ProductId, RequestId, SimDay, StakeholderId, TwinId, Unit,
};
use crate::log::{verify_records, EventRecord, EventSink, LogError, PlatformEvent};
use crate::market::{DecisionTrigger, FulfillmentStep, Market, MarketError, OfferAck, ServiceCase};
use crate::twin::{
    ConditionReport, DamageTaxonomy, Measurement, RepairRecord, Telemetry, TwinError, TwinRegistry, TwinSnapshot,
};

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error(transparent)]
    Twin(#[from] TwinError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Storage(#[from] LogError),
    #[error("expected sequence number {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("day {day} precedes the platform clock ({clock})")]
    ClockRegression { day: SimDay, clock: SimDay },
    #[error("assessment is dated {day}, after the platform clock ({clock})")]
    FutureReport { day: SimDay, clock: SimDay },
    #[error("no administrator agent configured for {0}")]
    UnknownAdministrator(StakeholderId),
    #[error("no provider agent configured for {0}")]
    UnknownProvider(StakeholderId),
    #[error("{0} is configured as both administrator and provider")]
    RoleConflict(StakeholderId),
    #[error("provider {provider} may not view twin {twin}")]
    AccessDenied { provider: StakeholderId, twin: TwinId },
    #[error("invalid replacement: {0}")]
    InvalidReplacement(String),
    #[error("event does not match the platform state: {0}")]
    Inconsistent(String),
    #[error("a previous storage failure left the platform read-only")]
    Poisoned,
}

impl PlatformError {
    /// Stable machine-readable code for API error envelopes.
    pub fn code(&self) -> &'static str {
        match self {
            PlatformError::Twin(e) => match e {
                TwinError::DuplicateProduct(_) => "DuplicateProduct",
                TwinError::UnknownTwin(_) => "UnknownTwin",
                TwinError::UnknownParent(_) => "UnknownParent",
                TwinError::InvalidDescriptor(_) => "InvalidDescriptor",
                TwinError::NonMonotonicDay { .. } => "NonMonotonicDay",
                TwinError::NotConnected(_) => "NotConnected",
                TwinError::UnknownDamageCode(_) => "UnknownDamageCode",
                TwinError::EmptyComponentPath => "EmptyComponentPath",
                TwinError::InvalidTransfer(_) => "InvalidTransfer",
                TwinError::VersionOutOfRange { .. } => "VersionOutOfRange",
            },
            PlatformError::Market(e) => match e {
                MarketError::DuplicateRequest(_) => "DuplicateRequest",
                MarketError::RequestNotOpen(_) => "RequestNotOpen",
                MarketError::UnknownCase(_) => "UnknownCase",
                MarketError::UnknownRequest(_) => "UnknownRequest",
                MarketError::RequestClosed(_) => "RequestClosed",
                MarketError::WrongRequest(_) => "WrongRequest",
                MarketError::DuplicateOffer(_) => "DuplicateOffer",
                MarketError::WindowStillOpen { .. } => "WindowStillOpen",
                MarketError::AlreadyDecided(_) => "AlreadyDecided",
                MarketError::AwaitingManualApproval(_) => "AwaitingManualApproval",
                MarketError::InfeasibleChoice(_) => "InfeasibleChoice",
                MarketError::NotInFulfillment(_) => "NotInFulfillment",
                MarketError::NonMonotonicDay { .. } => "NonMonotonicDay",
                MarketError::Case(c) => case_code(c),
                MarketError::Agent(a) => agent_code(a),
            },
            PlatformError::Agent(a) => agent_code(a),
            PlatformError::Case(c) => case_code(c),
            PlatformError::Storage(_) => "StorageFailure",
            PlatformError::SequenceGap { .. } => "SequenceGap",
            PlatformError::ClockRegression { .. } => "ClockRegression",
            PlatformError::FutureReport { .. } => "FutureReport",
            PlatformError::UnknownAdministrator(_) => "UnknownAdministrator",
            PlatformError::UnknownProvider(_) => "UnknownProvider",
            PlatformError::RoleConflict(_) => "RoleConflict",
            PlatformError::AccessDenied { .. } => "AccessDenied",
            PlatformError::InvalidReplacement(_) => "InvalidReplacement",
            PlatformError::Inconsistent(_) => "SchemaViolation",
            PlatformError::Poisoned => "StorageFailure",
        }
    }
}

fn case_code(e: &CaseError) -> &'static str {
    match e {
        CaseError::IllegalTransition { .. } => "IllegalTransition",
        CaseError::ModelMismatch { .. } => "ModelMismatch",
    }
}

fn agent_code(e: &AgentError) -> &'static str {
    match e {
        AgentError::NoConstraintsConfigured(_) => "NoConstraintsConfigured",
        AgentError::NothingToService(_) => "NothingToService",
        AgentError::StaleTwinVersion { .. } => "StaleTwinVersion",
        AgentError::MixedRequests => "MixedRequests",
        AgentError::InvalidConfig(_) => "InvalidConfig",
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Counters {
    requests: u64,
    cases: u64,
    offers: u64,
}

/// Everything the event log determines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    next_seq: u64,
    clock: SimDay,
    twins: TwinRegistry,
    market: Market,
    administrators: BTreeMap<StakeholderId, AdministratorConfig>,
    providers: BTreeMap<StakeholderId, ProviderConfig>,
    counters: Counters,
}

impl PlatformState {
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn clock(&self) -> SimDay {
        self.clock
    }

    pub fn twins(&self) -> &TwinRegistry {
        &self.twins
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn administrators(&self) -> &BTreeMap<StakeholderId, AdministratorConfig> {
        &self.administrators
    }

    pub fn providers(&self) -> &BTreeMap<StakeholderId, ProviderConfig> {
        &self.providers
    }

    pub fn case(&self, case_id: &CaseId) -> Result<&ServiceCase, PlatformError> {
        Ok(self.market.case(case_id)?)
    }

    fn next_ids(&self) -> (RequestId, CaseId) {
        (
            RequestId::new(format!("req-{:04}", self.counters.requests + 1)),
            CaseId::new(format!("case-{:04}", self.counters.cases + 1)),
        )
    }

    fn next_offer_id(&self) -> crate::domain::OfferId {
        crate::domain::OfferId::new(format!("offer-{:04}", self.counters.offers + 1))
    }

    /// Active (non-terminal) case involving `twin_id`, with the unit role.
    pub fn active_case_for_twin(&self, twin_id: &TwinId) -> Option<(&ServiceCase, Unit)> {
        self.market.cases().filter(|c| !c.state.is_terminal()).find_map(|c| {
            if &c.request.twin_id == twin_id {
                Some((c, Unit::Original))
            } else if c.replacement_twin.as_ref() == Some(twin_id) {
                Some((c, Unit::Replacement))
            } else {
                None
            }
        })
    }

    /// Who physically holds a product now; `None` while in transit.
    pub fn custodian(&self, product_id: &ProductId) -> Result<Option<StakeholderId>, PlatformError> {
        let twin = self
            .twins
            .by_product(product_id)
            .ok_or_else(|| TwinError::UnknownTwin(TwinRegistry::twin_id_for(product_id)))?;
        let Some((case, unit)) = self.active_case_for_twin(&twin.twin_id) else {
            return Ok(Some(twin.administrator().clone()));
        };
        let model = case.model().unwrap_or(BusinessModel::SendInRepair);
        Ok(match custody(case.state, model, unit) {
            Some(Holder::Administrator) => Some(case.administrator.clone()),
            Some(Holder::Provider) => match case.accepted_offer() {
                Some(offer) => Some(offer.provider_id.clone()),
                None => Some(twin.administrator().clone()),
            },
            Some(Holder::InTransit) => None,
            None => Some(twin.administrator().clone()),
        })
    }

    /// Twin view for a provider agent: only twins referenced by open
    /// requests, or bound to the provider itself.
    pub fn provider_view(
        &self,
        provider: &StakeholderId,
        twin_id: &TwinId,
        at_version: Option<u64>,
    ) -> Result<TwinSnapshot, PlatformError> {
        let record = self.twins.get(twin_id)?;
        let open = self.market.cases().any(|c| c.state.is_open() && &c.request.twin_id == twin_id);
        if !open && record.administrator() != provider {
            return Err(PlatformError::AccessDenied { provider: provider.clone(), twin: twin_id.clone() });
        }
        Ok(self.twins.snapshot(twin_id, at_version)?)
    }

    /// Validates `record` against the current state and applies it. Nothing
    /// changes when an error is returned.
    pub fn apply(&mut self, record: &EventRecord) -> Result<(), PlatformError> {
        if record.seq != self.next_seq {
            return Err(PlatformError::SequenceGap { expected: self.next_seq, got: record.seq });
        }
        if record.day < self.clock {
            return Err(PlatformError::ClockRegression { day: record.day, clock: self.clock });
        }
        let day = record.day;
        match &record.event {
            PlatformEvent::TaxonomyConfigured { damage_codes } => {
                if damage_codes.is_empty() {
                    return Err(PlatformError::Inconsistent("taxonomy cannot be empty".into()));
                }
                self.twins.set_taxonomy(DamageTaxonomy::new(damage_codes.iter().cloned()));
            }
            PlatformEvent::ClockAdvanced { to } => {
                if *to != day {
                    return Err(PlatformError::Inconsistent(format!("clock target {to} differs from record {day}")));
                }
            }
            PlatformEvent::TwinRegistered { twin_id, descriptor, administrator } => {
                if *twin_id != TwinRegistry::twin_id_for(&descriptor.product_id) {
                    return Err(PlatformError::Inconsistent(format!("unexpected twin id {twin_id}")));
                }
                self.twins.register_twin(descriptor.clone(), administrator.clone(), day)?;
            }
            PlatformEvent::AssessmentIngested { twin_id, report } => {
                if report.day > day {
                    return Err(PlatformError::FutureReport { day: report.day, clock: day });
                }
                self.twins.ingest_assessment(twin_id, report.clone())?;
            }
            PlatformEvent::TelemetryIngested { twin_id, telemetry } => {
                if telemetry.day > day {
                    return Err(PlatformError::FutureReport { day: telemetry.day, clock: day });
                }
                self.twins.ingest_telemetry(twin_id, telemetry.clone())?;
            }
            PlatformEvent::RepairRecorded { twin_id, record: repair } => {
                if repair.day > day {
                    return Err(PlatformError::FutureReport { day: repair.day, clock: day });
                }
                self.twins.ingest_repair(twin_id, repair.clone())?;
            }
            PlatformEvent::BindingTransferred { twin_id, from, to } => {
                let current = self.twins.get(twin_id)?.administrator();
                if current != from {
                    return Err(PlatformError::Inconsistent(format!(
                        "twin {twin_id} is bound to {current}, not {from}"
                    )));
                }
                self.twins.transfer_binding(twin_id, to.clone(), day)?;
            }
            PlatformEvent::AdministratorConfigured { config } => {
                config.validate()?;
                if self.providers.contains_key(&config.administrator_id) {
                    return Err(PlatformError::RoleConflict(config.administrator_id.clone()));
                }
                self.administrators.insert(config.administrator_id.clone(), config.clone());
            }
            PlatformEvent::ProviderConfigured { config } => {
                config.validate()?;
                if self.administrators.contains_key(&config.provider_id) {
                    return Err(PlatformError::RoleConflict(config.provider_id.clone()));
                }
                self.providers.insert(config.provider_id.clone(), config.clone());
            }
            PlatformEvent::TwinEvaluated { twin_id, twin_version, .. } => {
                let current = self.twins.get(twin_id)?.version();
                if *twin_version > current {
                    return Err(TwinError::VersionOutOfRange { requested: *twin_version, current }.into());
                }
            }
            PlatformEvent::RequestPosted { case_id, administrator, request, decision_mode, offer_window_days } => {
                let twin = self.twins.get(&request.twin_id)?;
                if request.twin_version > twin.version() {
                    return Err(TwinError::VersionOutOfRange {
                        requested: request.twin_version,
                        current: twin.version(),
                    }
                    .into());
                }
                if request.opened_day != day {
                    return Err(PlatformError::Inconsistent("request must open on the record's day".into()));
                }
                if *offer_window_days < 1 {
                    return Err(AgentError::InvalidConfig("offer window must be at least one day".into()).into());
                }
                self.market.post_request(
                    case_id.clone(),
                    request.clone(),
                    administrator.clone(),
                    *decision_mode,
                    *offer_window_days,
                )?;
                self.counters.requests += 1;
                self.counters.cases += 1;
            }
            PlatformEvent::OfferSubmitted { case_id, offer } => {
                if offer.submitted_day != day {
                    return Err(PlatformError::Inconsistent("offer must be submitted on the record's day".into()));
                }
                self.market.submit_offer(case_id, offer.clone())?;
                self.counters.offers += 1;
            }
            PlatformEvent::CaseDecided { case_id, decision, manual } => {
                let trigger = if *manual {
                    DecisionTrigger::Manual(match decision {
                        Decision::Accepted(id) => Some(id.clone()),
                        Decision::NoFeasibleOffer => None,
                    })
                } else {
                    DecisionTrigger::WindowClose
                };
                let expected = self.market.evaluate_decision(case_id, day, &trigger)?;
                if &expected != decision {
                    return Err(PlatformError::Inconsistent(format!(
                        "decision {decision:?} differs from the evaluated {expected:?}"
                    )));
                }
                self.market.record_decision(case_id, decision.clone(), day)?;
            }
            PlatformEvent::CaseAdvanced { case_id, event, to, replacement_twin } => {
                let case = self.market.case(case_id)?;
                let model = case.model().unwrap_or(BusinessModel::SendInRepair);
                let expected = advance_case(case.state, *event, model)?;
                if expected != *to {
                    return Err(PlatformError::Inconsistent(format!("{event:?} leads to {expected}, not {to}")));
                }
                self.check_replacement(case, *event, replacement_twin.as_ref())?;
                if *event == CaseEvent::Cancel {
                    self.market.cancel(case_id, day)?;
                } else {
                    self.market.advance_fulfillment(case_id, *event, day, replacement_twin.clone())?;
                }
            }
        }
        self.clock = day;
        self.next_seq += 1;
        Ok(())
    }

    /// An exchange shipment must name a sound-looking unit of the same
    /// model that the accepted provider holds; other events must not name one.
    fn check_replacement(
        &self,
        case: &ServiceCase,
        event: CaseEvent,
        replacement: Option<&TwinId>,
    ) -> Result<(), PlatformError> {
        let ships_replacement = case.state == CaseState::Decided
            && event == CaseEvent::Shipped
            && case.model() == Some(BusinessModel::Exchange);
        match (ships_replacement, replacement) {
            (false, None) => Ok(()),
            (false, Some(_)) => Err(PlatformError::InvalidReplacement("no replacement is shipped at this step".into())),
            (true, None) => Err(PlatformError::InvalidReplacement("exchange shipment needs a replacement twin".into())),
            (true, Some(twin_id)) => {
                let provider = &case.accepted_offer().expect("exchange model implies an accepted offer").provider_id;
                let replacement = self.twins.get(twin_id)?;
                let original = self.twins.get(&case.request.twin_id)?;
                if twin_id == &original.twin_id {
                    return Err(PlatformError::InvalidReplacement("replacement is the original".into()));
                }
                if replacement.administrator() != provider {
                    return Err(PlatformError::InvalidReplacement(format!("{twin_id} is not held by {provider}")));
                }
                if replacement.descriptor.model_id != original.descriptor.model_id {
                    return Err(PlatformError::InvalidReplacement(format!("{twin_id} is a different model")));
                }
                if self.active_case_for_twin(twin_id).is_some() {
                    return Err(PlatformError::InvalidReplacement(format!("{twin_id} is already in a case")));
                }
                Ok(())
            }
        }
    }

    /// Replacement candidates a provider holds for the given original twin.
    pub fn replacement_stock(&self, provider: &StakeholderId, original: &TwinId) -> Vec<TwinId> {
        let Ok(original) = self.twins.get(original) else {
            return Vec::new();
        };
        self.twins
            .bound_to(provider)
            .filter(|t| t.twin_id != original.twin_id)
            .filter(|t| t.descriptor.model_id == original.descriptor.model_id)
            .filter(|t| t.live().serviceable_findings().next().is_none())
            .filter(|t| self.active_case_for_twin(&t.twin_id).is_none())
            .map(|t| t.twin_id.clone())
            .collect()
    }
}

/// Rebuilds platform state from a log. Refuses partial replay.
pub fn replay(records: &[EventRecord]) -> Result<PlatformState, PlatformError> {
    verify_records(records)?;
    let mut state = PlatformState::default();
    for record in records {
        state.apply(record)?;
    }
    Ok(state)
}

/// State plus the sink its events are committed to.
pub struct Platform<S: EventSink = Vec<EventRecord>> {
    state: PlatformState,
    sink: S,
    poisoned: bool,
}

impl Default for Platform<Vec<EventRecord>> {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl<S: EventSink> Platform<S> {
    pub fn new(sink: S) -> Self {
        Self::from_state(PlatformState::default(), sink)
    }

    /// Continues from a replayed state; `sink` must already hold its log.
    pub fn from_state(state: PlatformState, sink: S) -> Self {
        Self { state, sink, poisoned: false }
    }

    pub fn state(&self) -> &PlatformState {
        &self.state
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_parts(self) -> (PlatformState, S) {
        (self.state, self.sink)
    }

    pub fn clock(&self) -> SimDay {
        self.state.clock
    }

    /// Validates, applies and persists one event; returns its sequence number.
    pub fn append_event(&mut self, event: PlatformEvent) -> Result<u64, PlatformError> {
        if self.poisoned {
            return Err(PlatformError::Poisoned);
        }
        let record = EventRecord { seq: self.state.next_seq, day: self.state.clock, event };
        self.state.apply(&record)?;
        if let Err(e) = self.sink.append(&record) {
            self.poisoned = true;
            return Err(e.into());
        }
        Ok(record.seq)
    }

    /// Moves the clock forward. No event when `to` equals the clock.
    pub fn advance_clock(&mut self, to: SimDay) -> Result<(), PlatformError> {
        if to < self.state.clock {
            return Err(PlatformError::ClockRegression { day: to, clock: self.state.clock });
        }
        if to > self.state.clock {
            if self.poisoned {
                return Err(PlatformError::Poisoned);
            }
            let record = EventRecord { seq: self.state.next_seq, day: to, event: PlatformEvent::ClockAdvanced { to } };
            self.state.apply(&record)?;
            if let Err(e) = self.sink.append(&record) {
                self.poisoned = true;
                return Err(e.into());
            }
        }
        Ok(())
    }

    pub fn configure_taxonomy(&mut self, damage_codes: Vec<String>) -> Result<u64, PlatformError> {
        self.append_event(PlatformEvent::TaxonomyConfigured { damage_codes })
    }

    pub fn register_twin(
        &mut self,
        descriptor: ProductDescriptor,
        administrator: StakeholderId,
    ) -> Result<TwinId, PlatformError> {
        let twin_id = TwinRegistry::twin_id_for(&descriptor.product_id);
        self.append_event(PlatformEvent::TwinRegistered { twin_id: twin_id.clone(), descriptor, administrator })?;
        Ok(twin_id)
    }

    pub fn ingest_assessment(&mut self, twin_id: &TwinId, report: ConditionReport) -> Result<u64, PlatformError> {
        self.append_event(PlatformEvent::AssessmentIngested { twin_id: twin_id.clone(), report })?;
        Ok(self.state.twins.get(twin_id)?.version())
    }

    /// Telemetry readings dated today.
    pub fn ingest_telemetry(&mut self, twin_id: &TwinId, readings: Vec<Measurement>) -> Result<u64, PlatformError> {
        let telemetry = Telemetry { day: self.state.clock, readings };
        self.append_event(PlatformEvent::TelemetryIngested { twin_id: twin_id.clone(), telemetry })?;
        Ok(self.state.twins.get(twin_id)?.version())
    }

    pub fn record_repair(&mut self, twin_id: &TwinId, record: RepairRecord) -> Result<u64, PlatformError> {
        self.append_event(PlatformEvent::RepairRecorded { twin_id: twin_id.clone(), record })?;
        Ok(self.state.twins.get(twin_id)?.version())
    }

    pub fn transfer_binding(&mut self, twin_id: &TwinId, to: StakeholderId) -> Result<u64, PlatformError> {
        let from = self.state.twins.get(twin_id)?.administrator().clone();
        self.append_event(PlatformEvent::BindingTransferred { twin_id: twin_id.clone(), from, to })?;
        Ok(self.state.twins.get(twin_id)?.version())
    }

    pub fn configure_administrator(&mut self, config: AdministratorConfig) -> Result<u64, PlatformError> {
        self.append_event(PlatformEvent::AdministratorConfigured { config })
    }

    pub fn configure_provider(&mut self, config: ProviderConfig) -> Result<u64, PlatformError> {
        self.append_event(PlatformEvent::ProviderConfigured { config })
    }

    /// The bound administrator's agent reads the twin and posts a request.
    pub fn request_service(&mut self, twin_id: &TwinId) -> Result<CaseId, PlatformError> {
        let snapshot = self.state.twins.snapshot(twin_id, None)?;
        let administrator = snapshot.administrator.clone();
        let config = self
            .state
            .administrators
            .get(&administrator)
            .ok_or_else(|| PlatformError::UnknownAdministrator(administrator.clone()))?;
        let (request_id, case_id) = self.state.next_ids();
        let request = build_service_request(config, &snapshot, request_id, self.state.clock)?;
        let constraints = *config.constraints_for(&snapshot.descriptor).expect("request built from these constraints");
        if let Some((case, _)) = self.state.active_case_for_twin(twin_id) {
            return Err(MarketError::DuplicateRequest(case.request.request_id.clone()).into());
        }
        self.append_event(PlatformEvent::TwinEvaluated {
            administrator: administrator.clone(),
            twin_id: twin_id.clone(),
            twin_version: snapshot.version,
        })?;
        self.append_event(PlatformEvent::RequestPosted {
            case_id: case_id.clone(),
            administrator,
            request,
            decision_mode: constraints.decision_mode,
            offer_window_days: constraints.offer_window_days,
        })?;
        Ok(case_id)
    }

    /// Submits an offer with explicit terms on behalf of a provider.
    pub fn submit_offer(
        &mut self,
        request_id: &RequestId,
        provider_id: StakeholderId,
        price: Money,
        promised_duration_days: u32,
        model: BusinessModel,
    ) -> Result<OfferAck, PlatformError> {
        if self.state.administrators.contains_key(&provider_id) {
            return Err(PlatformError::RoleConflict(provider_id));
        }
        let case_id = self.state.market.case_for_request(request_id)?.case_id.clone();
        if promised_duration_days < 1 {
            return Err(AgentError::InvalidConfig("promised duration must be at least one day".into()).into());
        }
        let offer = ServiceOffer {
            offer_id: self.state.next_offer_id(),
            request_id: request_id.clone(),
            provider_id,
            price,
            promised_duration_days,
            model,
            submitted_day: self.state.clock,
        };
        self.commit_offer(case_id, offer)
    }

    fn commit_offer(&mut self, case_id: CaseId, offer: ServiceOffer) -> Result<OfferAck, PlatformError> {
        let offer_id = offer.offer_id.clone();
        self.append_event(PlatformEvent::OfferSubmitted { case_id: case_id.clone(), offer })?;
        let held = self.state.market.case(&case_id)?.offers.len();
        Ok(OfferAck { case_id, offer_id, offers_held: held })
    }

    /// The provider's agent matches a request against its catalog and
    /// submits the resulting offer, if any.
    pub fn offer_from_catalog(
        &mut self,
        provider_id: &StakeholderId,
        request_id: &RequestId,
    ) -> Result<Option<OfferAck>, PlatformError> {
        let config =
            self.state.providers.get(provider_id).ok_or_else(|| PlatformError::UnknownProvider(provider_id.clone()))?;
        let case = self.state.market.case_for_request(request_id)?;
        let twin = self.state.provider_view(provider_id, &case.request.twin_id, Some(case.request.twin_version))?;
        let offer = match_request(config, &case.request, &twin, self.state.next_offer_id(), self.state.clock)?;
        match offer {
            Some(offer) => {
                let case_id = case.case_id.clone();
                self.commit_offer(case_id, offer).map(Some)
            }
            None => Ok(None),
        }
    }

    pub fn decide(&mut self, case_id: &CaseId, trigger: DecisionTrigger) -> Result<Decision, PlatformError> {
        let decision = self.state.market.evaluate_decision(case_id, self.state.clock, &trigger)?;
        let manual = matches!(trigger, DecisionTrigger::Manual(_));
        self.append_event(PlatformEvent::CaseDecided { case_id: case_id.clone(), decision: decision.clone(), manual })?;
        Ok(decision)
    }

    /// Advances a case. When an exchange replacement arrives, the
    /// administrator is rebound to the replacement twin and the provider to
    /// the original.
    pub fn fulfill(
        &mut self,
        case_id: &CaseId,
        event: CaseEvent,
        replacement_twin: Option<TwinId>,
    ) -> Result<FulfillmentStep, PlatformError> {
        let case = self.state.market.case(case_id)?;
        let model = case.model().unwrap_or(BusinessModel::SendInRepair);
        let from = case.state;
        let to = advance_case(from, event, model)?;
        self.append_event(PlatformEvent::CaseAdvanced { case_id: case_id.clone(), event, to, replacement_twin })?;

        let case = self.state.market.case(case_id)?;
        let reinstated = case.model().is_some_and(|m| crate::domain::reinstates_functionality(to, m));
        if reinstated && model == BusinessModel::Exchange {
            let administrator = case.administrator.clone();
            let provider = case.accepted_offer().expect("decided").provider_id.clone();
            let original = case.request.twin_id.clone();
            let replacement = case.replacement_twin.clone().expect("shipped with a replacement");
            self.transfer_binding(&replacement, administrator)?;
            self.transfer_binding(&original, provider)?;
        }
        Ok(FulfillmentStep { from, to, reinstated })
    }
}
