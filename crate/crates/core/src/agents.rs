//! Decision logic of the two agent kinds.
//!
//! The administrator agent turns a twin's condition into a service request
//! and picks an offer; the provider agent matches open requests against its
//! service catalog. All functions here are pure.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BusinessModel, Money, OfferId, ProductDescriptor, RequestId, SimDay, StakeholderId, TwinId};
use crate::twin::TwinSnapshot;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionMode {
    #[default]
    Autonomous,
    ManualApproval,
}

fn default_offer_window() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductConstraints {
    pub max_cost: Money,
    pub max_duration_days: u32,
    #[serde(default)]
    pub decision_mode: DecisionMode,
    #[serde(default = "default_offer_window")]
    pub offer_window_days: u32,
}

impl ProductConstraints {
    pub fn request_constraints(&self) -> RequestConstraints {
        RequestConstraints { max_cost: self.max_cost, max_duration_days: self.max_duration_days }
    }
}

/// Administrator agent rules. Constraint sets are keyed by product id, or by
/// model id as a fallback for every product of that model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdministratorConfig {
    pub administrator_id: StakeholderId,
    pub constraints: BTreeMap<String, ProductConstraints>,
}

impl AdministratorConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (key, c) in &self.constraints {
            if c.offer_window_days < 1 {
                return Err(AgentError::InvalidConfig(format!("{key}: offer window must be at least one day")));
            }
        }
        Ok(())
    }

    pub fn constraints_for(&self, descriptor: &ProductDescriptor) -> Option<&ProductConstraints> {
        self.constraints.get(descriptor.product_id.as_str()).or_else(|| self.constraints.get(&descriptor.model_id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServicePolicy {
    /// Glob pattern over the product's model id.
    pub matcher: String,
    pub model: BusinessModel,
    pub price: Money,
    pub promised_duration_days: u32,
}

impl ServicePolicy {
    pub fn matches(&self, model_id: &str) -> bool {
        glob::Pattern::new(&self.matcher).is_ok_and(|p| p.matches(model_id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider_id: StakeholderId,
    pub catalog: Vec<ServicePolicy>,
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let mut seen = BTreeSet::new();
        for policy in &self.catalog {
            if policy.promised_duration_days < 1 {
                return Err(AgentError::InvalidConfig(format!(
                    "{}: promised duration must be at least one day",
                    policy.matcher
                )));
            }
            if let Err(e) = glob::Pattern::new(&policy.matcher) {
                return Err(AgentError::InvalidConfig(format!("{}: {e}", policy.matcher)));
            }
            if !seen.insert((policy.matcher.as_str(), policy.model)) {
                return Err(AgentError::InvalidConfig(format!(
                    "duplicate policy for {} / {:?}",
                    policy.matcher, policy.model
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestConstraints {
    pub max_cost: Money,
    pub max_duration_days: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub request_id: RequestId,
    pub twin_id: TwinId,
    pub twin_version: u64,
    pub constraints: RequestConstraints,
    pub opened_day: SimDay,
    pub status: RequestStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceOffer {
    pub offer_id: OfferId,
    pub request_id: RequestId,
    pub provider_id: StakeholderId,
    pub price: Money,
    pub promised_duration_days: u32,
    pub model: BusinessModel,
    pub submitted_day: SimDay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accepted(OfferId),
    NoFeasibleOffer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("no constraints configured for product {0}")]
    NoConstraintsConfigured(String),
    #[error("twin {0} has no finding that needs service")]
    NothingToService(TwinId),
    #[error("twin snapshot does not match request (expected {twin_id} at version {version})")]
    StaleTwinVersion { twin_id: TwinId, version: u64 },
    #[error("offers reference more than one request")]
    MixedRequests,
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

pub fn build_service_request(
    config: &AdministratorConfig,
    twin: &TwinSnapshot,
    request_id: RequestId,
    day: SimDay,
) -> Result<ServiceRequest, AgentError> {
    let constraints = config
        .constraints_for(&twin.descriptor)
        .ok_or_else(|| AgentError::NoConstraintsConfigured(twin.descriptor.product_id.to_string()))?;
    if twin.serviceable_findings().next().is_none() {
        return Err(AgentError::NothingToService(twin.twin_id.clone()));
    }
    Ok(ServiceRequest {
        request_id,
        twin_id: twin.twin_id.clone(),
        twin_version: twin.version,
        constraints: constraints.request_constraints(),
        opened_day: day,
        status: RequestStatus::Open,
    })
}

/// Offer from the first catalog policy whose matcher accepts the twin's
/// model. The requester's constraints are deliberately not consulted.
pub fn match_request(
    config: &ProviderConfig,
    request: &ServiceRequest,
    twin: &TwinSnapshot,
    offer_id: OfferId,
    day: SimDay,
) -> Result<Option<ServiceOffer>, AgentError> {
    if twin.twin_id != request.twin_id || twin.version != request.twin_version {
        return Err(AgentError::StaleTwinVersion { twin_id: request.twin_id.clone(), version: request.twin_version });
    }
    Ok(config.catalog.iter().find(|p| p.matches(&twin.descriptor.model_id)).map(|policy| ServiceOffer {
        offer_id,
        request_id: request.request_id.clone(),
        provider_id: config.provider_id.clone(),
        price: policy.price,
        promised_duration_days: policy.promised_duration_days,
        model: policy.model,
        submitted_day: day,
    }))
}

/// Both bounds are inclusive.
pub fn is_feasible(constraints: &RequestConstraints, offer: &ServiceOffer) -> bool {
    offer.price <= constraints.max_cost && offer.promised_duration_days <= constraints.max_duration_days
}

/// Shortest feasible promise wins; ties go to the lower price, then the
/// lower offer id.
pub fn select_offer(constraints: &RequestConstraints, offers: &[ServiceOffer]) -> Result<Decision, AgentError> {
    if let Some(first) = offers.first() {
        if offers.iter().any(|o| o.request_id != first.request_id) {
            return Err(AgentError::MixedRequests);
        }
    }
    Ok(offers
        .iter()
        .filter(|o| is_feasible(constraints, o))
        .min_by(|a, b| {
            (a.promised_duration_days, a.price, &a.offer_id).cmp(&(b.promised_duration_days, b.price, &b.offer_id))
        })
        .map_or(Decision::NoFeasibleOffer, |o| Decision::Accepted(o.offer_id.clone())))
}
