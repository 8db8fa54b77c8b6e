//! KPIs computed from an event log in one ordered scan.
//!
//! Fields that never happened (no decision, no reinstatement) are `None`,
//! never zero.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{is_feasible, Decision, RequestConstraints, ServiceOffer};
use crate::domain::{reinstates_functionality, BusinessModel, CaseId, CaseState, Money, SimDay, StakeholderId, TwinId};
use crate::log::{verify_records, EventRecord, PlatformEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KpiError {
    #[error("malformed log at seq {seq}: {reason}")]
    MalformedLog { seq: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseKpi {
    pub case_id: CaseId,
    pub administrator: StakeholderId,
    pub twin_id: TwinId,
    pub opened_day: SimDay,
    pub decided_day: Option<SimDay>,
    pub reinstated_day: Option<SimDay>,
    pub closed_day: Option<SimDay>,
    /// Reinstatement day minus opening day.
    pub turnaround_days: Option<u32>,
    pub accepted_provider: Option<StakeholderId>,
    pub accepted_price: Option<Money>,
    pub promised_duration_days: Option<u32>,
    pub model: Option<BusinessModel>,
    /// Whether reinstatement came within the promised duration of the decision.
    pub promise_met: Option<bool>,
    pub offers_received: usize,
    pub final_state: CaseState,
    pub feasibility_violations: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderEconomics {
    pub revenue: Money,
    pub cost: Money,
    /// Revenue minus cost, in cents.
    pub profit: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpiSection {
    pub cases: Vec<CaseKpi>,
    pub providers: BTreeMap<StakeholderId, ProviderEconomics>,
    pub feasibility_violations: u32,
}

#[derive(Debug, Clone)]
struct Tracked {
    kpi: CaseKpi,
    constraints: RequestConstraints,
    offers: Vec<ServiceOffer>,
}

/// Incremental KPI scan. Feed records in log order, then [`finish`](Self::finish).
#[derive(Debug, Clone, Default)]
pub struct KpiAccumulator {
    cases: BTreeMap<CaseId, Tracked>,
    providers: BTreeSet<StakeholderId>,
    costs: BTreeMap<StakeholderId, Money>,
    next_seq: u64,
}

fn malformed(seq: u64, reason: impl Into<String>) -> KpiError {
    KpiError::MalformedLog { seq, reason: reason.into() }
}

impl KpiAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    fn tracked(&mut self, seq: u64, case_id: &CaseId) -> Result<&mut Tracked, KpiError> {
        self.cases.get_mut(case_id).ok_or_else(|| malformed(seq, format!("event for unknown case {case_id}")))
    }

    pub fn push(&mut self, record: &EventRecord) -> Result<(), KpiError> {
        let seq = record.seq;
        if seq != self.next_seq {
            return Err(malformed(seq, format!("expected seq {}", self.next_seq)));
        }
        self.next_seq += 1;
        let day = record.day;
        match &record.event {
            PlatformEvent::ProviderConfigured { config } => {
                self.providers.insert(config.provider_id.clone());
            }
            PlatformEvent::RepairRecorded { record: repair, .. } => {
                let total = self.costs.entry(repair.performed_by.clone()).or_default();
                *total = total.checked_add(repair.cost).ok_or_else(|| malformed(seq, "repair cost overflow"))?;
            }
            PlatformEvent::RequestPosted { case_id, administrator, request, .. } => {
                if self.cases.contains_key(case_id) {
                    return Err(malformed(seq, format!("case {case_id} posted twice")));
                }
                let kpi = CaseKpi {
                    case_id: case_id.clone(),
                    administrator: administrator.clone(),
                    twin_id: request.twin_id.clone(),
                    opened_day: day,
                    decided_day: None,
                    reinstated_day: None,
                    closed_day: None,
                    turnaround_days: None,
                    accepted_provider: None,
                    accepted_price: None,
                    promised_duration_days: None,
                    model: None,
                    promise_met: None,
                    offers_received: 0,
                    final_state: CaseState::Requested,
                    feasibility_violations: 0,
                };
                self.cases
                    .insert(case_id.clone(), Tracked { kpi, constraints: request.constraints, offers: Vec::new() });
            }
            PlatformEvent::OfferSubmitted { case_id, offer } => {
                let t = self.tracked(seq, case_id)?;
                t.offers.push(offer.clone());
                t.kpi.offers_received += 1;
                t.kpi.final_state = CaseState::OfferCollection;
            }
            PlatformEvent::CaseDecided { case_id, decision, .. } => {
                let t = self.tracked(seq, case_id)?;
                if t.kpi.decided_day.is_some() {
                    return Err(malformed(seq, format!("case {case_id} decided twice")));
                }
                t.kpi.decided_day = Some(day);
                match decision {
                    Decision::NoFeasibleOffer => t.kpi.final_state = CaseState::NoFeasibleOffer,
                    Decision::Accepted(offer_id) => {
                        let offer = t
                            .offers
                            .iter()
                            .find(|o| &o.offer_id == offer_id)
                            .ok_or_else(|| malformed(seq, format!("accepted unknown offer {offer_id}")))?
                            .clone();
                        if !is_feasible(&t.constraints, &offer) {
                            t.kpi.feasibility_violations += 1;
                        }
                        t.kpi.final_state = CaseState::Decided;
                        t.kpi.accepted_provider = Some(offer.provider_id);
                        t.kpi.accepted_price = Some(offer.price);
                        t.kpi.promised_duration_days = Some(offer.promised_duration_days);
                        t.kpi.model = Some(offer.model);
                    }
                }
            }
            PlatformEvent::CaseAdvanced { case_id, to, .. } => {
                let t = self.tracked(seq, case_id)?;
                t.kpi.final_state = *to;
                let reinstated = t.kpi.model.is_some_and(|m| reinstates_functionality(*to, m));
                if reinstated && t.kpi.reinstated_day.is_none() {
                    t.kpi.reinstated_day = Some(day);
                    t.kpi.turnaround_days = day.days_since(t.kpi.opened_day);
                    if let (Some(decided), Some(promised)) = (t.kpi.decided_day, t.kpi.promised_duration_days) {
                        t.kpi.promise_met = day.days_since(decided).map(|d| d <= promised);
                    }
                }
                if to.is_terminal() {
                    t.kpi.closed_day = Some(day);
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn finish(self) -> KpiSection {
        let mut providers: BTreeMap<StakeholderId, ProviderEconomics> =
            self.providers.iter().map(|p| (p.clone(), ProviderEconomics::default())).collect();
        let cases: Vec<CaseKpi> = self.cases.into_values().map(|t| t.kpi).collect();
        for case in &cases {
            if case.final_state == CaseState::Cancelled {
                continue;
            }
            if let (Some(provider), Some(price)) = (&case.accepted_provider, case.accepted_price) {
                let entry = providers.entry(provider.clone()).or_default();
                entry.revenue = Money::from_cents(entry.revenue.cents().saturating_add(price.cents()));
            }
        }
        for (provider, cost) in self.costs {
            if let Some(entry) = providers.get_mut(&provider) {
                entry.cost = cost;
            }
        }
        for entry in providers.values_mut() {
            entry.profit = entry.revenue.signed_sub(entry.cost);
        }
        let feasibility_violations = cases.iter().map(|c| c.feasibility_violations).sum();
        KpiSection { cases, providers, feasibility_violations }
    }
}

/// Verifies the log's ordering, then scans it once.
pub fn compute_kpis(log: &[EventRecord]) -> Result<KpiSection, KpiError> {
    verify_records(log).map_err(|e| malformed(0, e.to_string()))?;
    let mut acc = KpiAccumulator::new();
    for record in log {
        acc.push(record)?;
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_has_no_cases() {
        let kpis = compute_kpis(&[]).unwrap();
        assert!(kpis.cases.is_empty());
        assert_eq!(kpis.feasibility_violations, 0);
    }

    #[test]
    fn offer_for_unknown_case_is_malformed() {
        let record = EventRecord {
            seq: 0,
            day: SimDay::ZERO,
            event: PlatformEvent::CaseAdvanced {
                case_id: "case-9".into(),
                event: crate::domain::CaseEvent::Close,
                to: CaseState::Closed,
                replacement_twin: None,
            },
        };
        assert!(matches!(compute_kpis(&[record]), Err(KpiError::MalformedLog { seq: 0, .. })));
    }
}
