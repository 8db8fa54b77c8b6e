//! The open request board, offer intake, decisions and per-case lifecycle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    is_feasible, select_offer, AgentError, Decision, DecisionMode, RequestStatus, ServiceOffer, ServiceRequest,
};
use crate::domain::{
    advance_case, reinstates_functionality, BusinessModel, CaseError, CaseEvent, CaseId, CaseState, OfferId, RequestId,
    SimDay, StakeholderId, TwinId,
};

/// One entry of a case's audit trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTransition {
    pub day: SimDay,
    pub event: CaseEvent,
    pub to: CaseState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCase {
    pub case_id: CaseId,
    pub administrator: StakeholderId,
    pub request: ServiceRequest,
    pub decision_mode: DecisionMode,
    pub offer_window_days: u32,
    pub offers: Vec<ServiceOffer>,
    pub decision: Option<Decision>,
    pub state: CaseState,
    /// Twin of the refurbished unit shipped in an exchange.
    pub replacement_twin: Option<TwinId>,
    pub day_opened: SimDay,
    pub day_decided: Option<SimDay>,
    pub day_reinstated: Option<SimDay>,
    pub day_closed: Option<SimDay>,
    pub timeline: Vec<CaseTransition>,
}

impl ServiceCase {
    pub fn accepted_offer(&self) -> Option<&ServiceOffer> {
        match &self.decision {
            Some(Decision::Accepted(id)) => self.offers.iter().find(|o| &o.offer_id == id),
            _ => None,
        }
    }

    pub fn model(&self) -> Option<BusinessModel> {
        self.accepted_offer().map(|o| o.model)
    }

    pub fn window_closes(&self) -> SimDay {
        self.day_opened.plus(self.offer_window_days)
    }

    pub fn turnaround_days(&self) -> Option<u32> {
        self.day_reinstated.and_then(|d| d.days_since(self.day_opened))
    }

    /// Recommendation of the selection rule over the offers received so far.
    pub fn recommendation(&self) -> Decision {
        // offers are checked against the request on intake, so this cannot mix requests
        select_offer(&self.request.constraints, &self.offers).unwrap_or(Decision::NoFeasibleOffer)
    }

    /// Re-checks the record-level invariants of a case.
    pub fn check_invariants(&self) -> Result<(), String> {
        let days = [Some(self.day_opened), self.day_decided, self.day_reinstated, self.day_closed];
        let present: Vec<SimDay> = days.into_iter().flatten().collect();
        if present.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!("case {}: milestone days out of order", self.case_id));
        }
        if let Some(Decision::Accepted(id)) = &self.decision {
            let offer = self
                .accepted_offer()
                .ok_or_else(|| format!("case {}: accepted offer {id} not among offers", self.case_id))?;
            if !is_feasible(&self.request.constraints, offer) {
                return Err(format!("case {}: accepted offer {id} is infeasible", self.case_id));
            }
        }
        if self.state.is_open() != (self.request.status == RequestStatus::Open) {
            return Err(format!("case {}: board status disagrees with state", self.case_id));
        }
        Ok(())
    }

    fn transition(&mut self, event: CaseEvent, day: SimDay) -> Result<CaseState, MarketError> {
        // edges before the decision do not depend on the model
        let model = self.model().unwrap_or(BusinessModel::SendInRepair);
        let next = advance_case(self.state, event, model)?;
        self.state = next;
        self.timeline.push(CaseTransition { day, event, to: next });
        if !next.is_open() {
            self.request.status = RequestStatus::Closed;
        }
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfferAck {
    pub case_id: CaseId,
    pub offer_id: OfferId,
    pub offers_held: usize,
}

/// How a decision is triggered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionTrigger {
    /// The offer window has closed; the selection rule decides.
    WindowClose,
    /// A human decides. `None` accepts the recommendation.
    Manual(Option<OfferId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarketError {
    #[error("request {0} was already posted")]
    DuplicateRequest(RequestId),
    #[error("request {0} is not open")]
    RequestNotOpen(RequestId),
    #[error("unknown case {0}")]
    UnknownCase(CaseId),
    #[error("unknown request {0}")]
    UnknownRequest(RequestId),
    #[error("case {0} no longer accepts offers")]
    RequestClosed(CaseId),
    #[error("offer does not reference request {0}")]
    WrongRequest(RequestId),
    #[error("offer {0} duplicates an earlier submission")]
    DuplicateOffer(OfferId),
    #[error("offer window of case {case} is open until {closes}")]
    WindowStillOpen { case: CaseId, closes: SimDay },
    #[error("case {0} was already decided")]
    AlreadyDecided(CaseId),
    #[error("case {0} awaits a manual decision")]
    AwaitingManualApproval(CaseId),
    #[error("offer {0} is not a feasible offer of this case")]
    InfeasibleChoice(OfferId),
    #[error("case {0} is not in fulfillment")]
    NotInFulfillment(CaseId),
    #[error("day {day} precedes the case's last activity ({last})")]
    NonMonotonicDay { day: SimDay, last: SimDay },
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Outcome of one fulfillment step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FulfillmentStep {
    pub from: CaseState,
    pub to: CaseState,
    pub reinstated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Market {
    cases: BTreeMap<CaseId, ServiceCase>,
    by_request: BTreeMap<RequestId, CaseId>,
}

impl Market {
    pub fn case(&self, case_id: &CaseId) -> Result<&ServiceCase, MarketError> {
        self.cases.get(case_id).ok_or_else(|| MarketError::UnknownCase(case_id.clone()))
    }

    pub fn case_for_request(&self, request_id: &RequestId) -> Result<&ServiceCase, MarketError> {
        self.by_request
            .get(request_id)
            .and_then(|id| self.cases.get(id))
            .ok_or_else(|| MarketError::UnknownRequest(request_id.clone()))
    }

    pub fn cases(&self) -> impl Iterator<Item = &ServiceCase> {
        self.cases.values()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    fn case_mut(&mut self, case_id: &CaseId) -> Result<&mut ServiceCase, MarketError> {
        self.cases.get_mut(case_id).ok_or_else(|| MarketError::UnknownCase(case_id.clone()))
    }

    pub fn post_request(
        &mut self,
        case_id: CaseId,
        request: ServiceRequest,
        administrator: StakeholderId,
        decision_mode: DecisionMode,
        offer_window_days: u32,
    ) -> Result<CaseId, MarketError> {
        if self.by_request.contains_key(&request.request_id) || self.cases.contains_key(&case_id) {
            return Err(MarketError::DuplicateRequest(request.request_id));
        }
        if request.status != RequestStatus::Open {
            return Err(MarketError::RequestNotOpen(request.request_id));
        }
        let day = request.opened_day;
        let case = ServiceCase {
            case_id: case_id.clone(),
            administrator,
            decision_mode,
            offer_window_days,
            offers: Vec::new(),
            decision: None,
            state: CaseState::Requested,
            replacement_twin: None,
            day_opened: day,
            day_decided: None,
            day_reinstated: None,
            day_closed: None,
            timeline: vec![CaseTransition { day, event: CaseEvent::RequestPosted, to: CaseState::Requested }],
            request,
        };
        self.by_request.insert(case.request.request_id.clone(), case_id.clone());
        self.cases.insert(case_id.clone(), case);
        Ok(case_id)
    }

    /// Open requests, optionally restricted to twins whose model id matches
    /// `model_filter` (a glob), ordered by opening day then request id.
    pub fn list_open_requests<'a>(
        &'a self,
        model_filter: Option<&str>,
        model_of: impl Fn(&TwinId) -> Option<&'a str>,
    ) -> Vec<&'a ServiceRequest> {
        self.list_requests(Some(RequestStatus::Open), model_filter, model_of)
    }

    /// Like [`Market::list_open_requests`] for any status; `None` lists all.
    /// An unparsable filter matches nothing.
    pub fn list_requests<'a>(
        &'a self,
        status: Option<RequestStatus>,
        model_filter: Option<&str>,
        model_of: impl Fn(&TwinId) -> Option<&'a str>,
    ) -> Vec<&'a ServiceRequest> {
        let pattern = model_filter.and_then(|f| glob::Pattern::new(f).ok());
        let mut listed: Vec<&ServiceRequest> = self
            .cases
            .values()
            .map(|c| &c.request)
            .filter(|r| status.is_none_or(|s| r.status == s))
            .filter(|r| match (&pattern, model_filter) {
                (_, None) => true,
                (Some(p), Some(_)) => model_of(&r.twin_id).is_some_and(|m| p.matches(m)),
                (None, Some(_)) => false,
            })
            .collect();
        listed.sort_by(|a, b| (a.opened_day, &a.request_id).cmp(&(b.opened_day, &b.request_id)));
        listed
    }

    pub fn submit_offer(&mut self, case_id: &CaseId, offer: ServiceOffer) -> Result<OfferAck, MarketError> {
        let case = self.case_mut(case_id)?;
        if !case.state.is_open() {
            return Err(MarketError::RequestClosed(case_id.clone()));
        }
        if offer.request_id != case.request.request_id {
            return Err(MarketError::WrongRequest(case.request.request_id.clone()));
        }
        let last = case.timeline.last().map_or(case.day_opened, |t| t.day);
        if offer.submitted_day < last {
            return Err(MarketError::NonMonotonicDay { day: offer.submitted_day, last });
        }
        let duplicate = case
            .offers
            .iter()
            .any(|o| o.offer_id == offer.offer_id || (o.provider_id == offer.provider_id && o.model == offer.model));
        if duplicate {
            return Err(MarketError::DuplicateOffer(offer.offer_id));
        }
        let day = offer.submitted_day;
        let offer_id = offer.offer_id.clone();
        case.offers.push(offer);
        case.transition(CaseEvent::OfferReceived, day)?;
        Ok(OfferAck { case_id: case_id.clone(), offer_id, offers_held: case.offers.len() })
    }

    /// Works out the decision `trigger` would produce on `now`, without
    /// changing anything.
    pub fn evaluate_decision(
        &self,
        case_id: &CaseId,
        now: SimDay,
        trigger: &DecisionTrigger,
    ) -> Result<Decision, MarketError> {
        let case = self.case(case_id)?;
        if case.decision.is_some() {
            return Err(MarketError::AlreadyDecided(case_id.clone()));
        }
        if !case.state.is_open() {
            return Err(MarketError::RequestClosed(case_id.clone()));
        }
        match trigger {
            DecisionTrigger::WindowClose => {
                if case.decision_mode == DecisionMode::ManualApproval {
                    return Err(MarketError::AwaitingManualApproval(case_id.clone()));
                }
                if now < case.window_closes() {
                    return Err(MarketError::WindowStillOpen { case: case_id.clone(), closes: case.window_closes() });
                }
                Ok(case.recommendation())
            }
            DecisionTrigger::Manual(None) => Ok(case.recommendation()),
            DecisionTrigger::Manual(Some(offer_id)) => {
                let feasible =
                    case.offers.iter().any(|o| &o.offer_id == offer_id && is_feasible(&case.request.constraints, o));
                if feasible {
                    Ok(Decision::Accepted(offer_id.clone()))
                } else {
                    Err(MarketError::InfeasibleChoice(offer_id.clone()))
                }
            }
        }
    }

    /// Evaluates and records a decision.
    pub fn decide_case(
        &mut self,
        case_id: &CaseId,
        now: SimDay,
        trigger: &DecisionTrigger,
    ) -> Result<Decision, MarketError> {
        let decision = self.evaluate_decision(case_id, now, trigger)?;
        self.record_decision(case_id, decision.clone(), now)?;
        Ok(decision)
    }

    /// Stores a decision that was already evaluated. Re-checks feasibility.
    pub(crate) fn record_decision(
        &mut self,
        case_id: &CaseId,
        decision: Decision,
        now: SimDay,
    ) -> Result<(), MarketError> {
        let case = self.case_mut(case_id)?;
        if case.decision.is_some() {
            return Err(MarketError::AlreadyDecided(case_id.clone()));
        }
        let event = match &decision {
            Decision::Accepted(id) => {
                let ok = case.offers.iter().any(|o| &o.offer_id == id && is_feasible(&case.request.constraints, o));
                if !ok {
                    return Err(MarketError::InfeasibleChoice(id.clone()));
                }
                CaseEvent::OfferAccepted
            }
            Decision::NoFeasibleOffer => CaseEvent::Timeout,
        };
        advance_case(case.state, event, BusinessModel::SendInRepair)?;
        case.decision = Some(decision);
        case.transition(event, now)?;
        case.day_decided = Some(now);
        Ok(())
    }

    /// Advances a decided case. Binding transfers are the caller's job.
    pub fn advance_fulfillment(
        &mut self,
        case_id: &CaseId,
        event: CaseEvent,
        day: SimDay,
        replacement_twin: Option<TwinId>,
    ) -> Result<FulfillmentStep, MarketError> {
        let case = self.case_mut(case_id)?;
        // terminal states fall through so the state machine reports them
        let fulfilling = matches!(case.state, CaseState::Decided | CaseState::Fulfillment(_))
            || case.state.is_terminal()
            || (case.state == CaseState::NoFeasibleOffer && matches!(event, CaseEvent::Close | CaseEvent::Cancel));
        if !fulfilling {
            return Err(MarketError::NotInFulfillment(case_id.clone()));
        }
        let last = case.timeline.last().map_or(case.day_opened, |t| t.day);
        if day < last {
            return Err(MarketError::NonMonotonicDay { day, last });
        }
        let from = case.state;
        let to = case.transition(event, day)?;
        if let Some(twin) = replacement_twin {
            case.replacement_twin = Some(twin);
        }
        let reinstated = case.model().is_some_and(|m| reinstates_functionality(to, m));
        if reinstated {
            case.day_reinstated = Some(day);
        }
        if to.is_terminal() {
            case.day_closed = Some(day);
        }
        Ok(FulfillmentStep { from, to, reinstated })
    }

    /// Cancels any non-terminal case.
    pub fn cancel(&mut self, case_id: &CaseId, day: SimDay) -> Result<CaseState, MarketError> {
        let case = self.case_mut(case_id)?;
        let to = case.transition(CaseEvent::Cancel, day)?;
        case.day_closed = Some(day);
        Ok(to)
    }
}
