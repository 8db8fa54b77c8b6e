//! Runs the configured agents against a platform for one day.
//!
//! Phases run in a fixed order: request generation, provider crawling,
//! window-close decisions. Every market action goes through the platform's
//! serialized commit path.

use serde::{Deserialize, Serialize};

use crate::agents::{AgentError, Decision, DecisionMode};
use crate::domain::{CaseId, ProductId, StakeholderId, TwinId};
use crate::log::EventSink;
use crate::market::{DecisionTrigger, OfferAck};
use crate::platform::{Platform, PlatformError};

/// Actions a stakeholder (or their agent) performs during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorAction {
    Request,
    Offer,
    Decide,
    Ship,
    Assess,
    Repair,
    Store,
}

/// Decides whether an actor may perform an action on a product today.
pub trait ActionGate {
    fn allows(&self, actor: &StakeholderId, action: ActorAction, product: &ProductId) -> bool;
}

/// Lets every action through.
pub struct OpenGate;

impl ActionGate for OpenGate {
    fn allows(&self, _: &StakeholderId, _: ActorAction, _: &ProductId) -> bool {
        true
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayActivity {
    pub requests: Vec<CaseId>,
    pub offers: Vec<OfferAck>,
    pub decisions: Vec<(CaseId, Decision)>,
}

impl<S: EventSink> Platform<S> {
    /// Administrator agents post requests for bound twins that need service
    /// and have no request at their current version yet.
    pub fn run_request_generation(&mut self, gate: &dyn ActionGate) -> Result<Vec<CaseId>, PlatformError> {
        let state = self.state();
        let mut candidates: Vec<TwinId> = Vec::new();
        for (admin_id, config) in state.administrators() {
            for twin in state.twins().bound_to(admin_id) {
                let snapshot = twin.live();
                if config.constraints_for(&twin.descriptor).is_none()
                    || snapshot.serviceable_findings().next().is_none()
                    || state.active_case_for_twin(&twin.twin_id).is_some()
                    || !gate.allows(admin_id, ActorAction::Request, &twin.descriptor.product_id)
                {
                    continue;
                }
                let already_requested = state
                    .market()
                    .cases()
                    .any(|c| c.request.twin_id == twin.twin_id && c.request.twin_version == twin.version());
                if !already_requested {
                    candidates.push(twin.twin_id.clone());
                }
            }
        }
        let mut posted = Vec::new();
        for twin_id in candidates {
            posted.push(self.request_service(&twin_id)?);
        }
        Ok(posted)
    }

    /// Provider agents crawl the open board and offer where their catalog
    /// matches.
    pub fn run_provider_crawl(&mut self, gate: &dyn ActionGate) -> Result<Vec<OfferAck>, PlatformError> {
        let state = self.state();
        let mut work = Vec::new();
        for provider in state.providers().keys() {
            let open = state.market().list_open_requests(None, |_| None);
            for request in open {
                let case = state.market().case_for_request(&request.request_id)?;
                let product = &state.twins().get(&request.twin_id)?.descriptor.product_id;
                if case.offers.iter().any(|o| &o.provider_id == provider)
                    || !gate.allows(provider, ActorAction::Offer, product)
                {
                    continue;
                }
                work.push((provider.clone(), request.request_id.clone()));
            }
        }
        let mut acks = Vec::new();
        for (provider, request_id) in work {
            match self.offer_from_catalog(&provider, &request_id) {
                Ok(Some(ack)) => acks.push(ack),
                Ok(None) | Err(PlatformError::Agent(AgentError::StaleTwinVersion { .. })) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(acks)
    }

    /// Autonomous cases whose offer window has closed are decided.
    pub fn run_window_decisions(&mut self, gate: &dyn ActionGate) -> Result<Vec<(CaseId, Decision)>, PlatformError> {
        let state = self.state();
        let now = state.clock();
        let mut due = Vec::new();
        for case in state.market().cases() {
            if case.state.is_open() && case.decision_mode == DecisionMode::Autonomous && now >= case.window_closes() {
                let product = &state.twins().get(&case.request.twin_id)?.descriptor.product_id;
                if gate.allows(&case.administrator, ActorAction::Decide, product) {
                    due.push(case.case_id.clone());
                }
            }
        }
        let mut decided = Vec::new();
        for case_id in due {
            let decision = self.decide(&case_id, DecisionTrigger::WindowClose)?;
            decided.push((case_id, decision));
        }
        Ok(decided)
    }

    pub fn run_agent_day(&mut self, gate: &dyn ActionGate) -> Result<DayActivity, PlatformError> {
        Ok(DayActivity {
            requests: self.run_request_generation(gate)?,
            offers: self.run_provider_crawl(gate)?,
            decisions: self.run_window_decisions(gate)?,
        })
    }
}
