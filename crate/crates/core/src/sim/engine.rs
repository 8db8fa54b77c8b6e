use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::DecisionMode;
use crate::domain::{
    BusinessModel, CaseEvent, CaseId, CaseState, FulfillmentStage as Stage, ProductId, SimDay, StakeholderId, TwinId,
};
use crate::log::EventRecord;
use crate::market::{DecisionTrigger, ServiceCase};
use crate::platform::{Platform, PlatformState};
use crate::runtime::{ActionGate, ActorAction};
use crate::tooling::{assess_noisy, repair, ToolProfile, TrueState};
use crate::twin::{ConditionReport, RepairRecord, TwinRegistry, DEFAULT_DAMAGE_CODES};
use CaseState::Fulfillment;

use super::report::SimulationReport;
use super::scenario::{DelayGate, Scenario, TriggerAction};
use super::SimError;

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub report: SimulationReport,
    pub log: Vec<EventRecord>,
    pub state: PlatformState,
    /// Physical condition of every product at the horizon.
    pub truths: BTreeMap<ProductId, TrueState>,
}

/// Work that completes on a later day.
#[derive(Debug, Clone)]
enum Task {
    Assessment { case: Option<CaseId>, product: ProductId, report: ConditionReport },
    Repair { case: CaseId, product: ProductId, truth: TrueState, record: RepairRecord },
    Arrival { case: CaseId, event: CaseEvent },
}

impl Task {
    fn is_tooling(&self) -> bool {
        !matches!(self, Task::Arrival { .. })
    }
}

struct Simulator<'a> {
    scenario: &'a Scenario,
    platform: Platform,
    truths: BTreeMap<ProductId, TrueState>,
    rng: ChaCha8Rng,
    pending: BTreeMap<SimDay, Vec<Task>>,
    /// Cases waiting on a scheduled task.
    busy: BTreeSet<CaseId>,
    /// Send-in cases whose repair is done but not yet shipped back.
    repaired: BTreeSet<CaseId>,
    today: SimDay,
}

/// Runs `scenario` from day 0 through its horizon.
pub fn run_scenario(scenario: &Scenario) -> Result<SimulationRun, SimError> {
    scenario.validate()?;
    let mut sim = Simulator {
        scenario,
        platform: Platform::default(),
        truths: scenario
            .products
            .iter()
            .map(|p| {
                let id = p.descriptor.product_id.clone();
                (id.clone(), scenario.true_state(&id))
            })
            .collect(),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        pending: BTreeMap::new(),
        busy: BTreeSet::new(),
        repaired: BTreeSet::new(),
        today: SimDay::ZERO,
    };
    sim.setup()?;
    for day in 0..=scenario.horizon {
        sim.today = SimDay::new(day);
        sim.platform.advance_clock(sim.today)?;
        sim.run_day()?;
    }
    let (state, log) = sim.platform.into_parts();
    let report = SimulationReport::build(scenario, &state, &log)?;
    Ok(SimulationRun { report, log, state, truths: sim.truths })
}

impl Simulator<'_> {
    fn setup(&mut self) -> Result<(), SimError> {
        if let Some(codes) = &self.scenario.damage_codes {
            let default: Vec<String> = DEFAULT_DAMAGE_CODES.iter().map(|c| c.to_string()).collect();
            if *codes != default {
                self.platform.configure_taxonomy(codes.clone())?;
            }
        }
        for product in &self.scenario.products {
            self.platform.register_twin(product.descriptor.clone(), product.administrator.clone())?;
        }
        for config in &self.scenario.agents.administrators {
            self.platform.configure_administrator(config.clone())?;
        }
        for config in &self.scenario.agents.providers {
            self.platform.configure_provider(config.clone())?;
        }
        Ok(())
    }

    fn gate(&self) -> DelayGate<'_> {
        DelayGate { delays: &self.scenario.delays, today: self.today }
    }

    fn allows(&self, actor: &StakeholderId, action: ActorAction, product: &ProductId) -> bool {
        self.gate().allows(actor, action, product)
    }

    fn run_day(&mut self) -> Result<(), SimError> {
        self.telemetry_phase()?;
        self.tooling_phase()?;
        let gate = DelayGate { delays: &self.scenario.delays, today: self.today };
        self.platform.run_request_generation(&gate)?;
        self.platform.run_provider_crawl(&gate)?;
        self.platform.run_window_decisions(&gate)?;
        self.manual_decisions()?;
        self.fulfillment_phase()
    }

    fn telemetry_phase(&mut self) -> Result<(), SimError> {
        for trigger in self.scenario.triggers.iter().filter(|t| t.day == self.today) {
            if let TriggerAction::Telemetry { product, readings } = &trigger.action {
                self.platform.ingest_telemetry(&TwinRegistry::twin_id_for(product), readings.clone())?;
            }
        }
        Ok(())
    }

    fn schedule(&mut self, day: SimDay, task: Task) {
        self.pending.entry(day).or_default().push(task);
    }

    /// Removes and returns today's tasks of one kind, in scheduling order.
    fn take_due(&mut self, tooling: bool) -> Vec<Task> {
        let Some(tasks) = self.pending.get_mut(&self.today) else {
            return Vec::new();
        };
        let (due, rest): (Vec<Task>, Vec<Task>) = tasks.drain(..).partition(|t| t.is_tooling() == tooling);
        *tasks = rest;
        due
    }

    fn custodian(&self, product: &ProductId) -> Result<Option<StakeholderId>, SimError> {
        Ok(self.platform.state().custodian(product)?)
    }

    /// Runs an assessment now; the report is ingested when it is due.
    fn start_assessment(
        &mut self,
        tool: &ToolProfile,
        product: &ProductId,
        case: Option<CaseId>,
    ) -> Result<(), SimError> {
        let holder = self.custodian(product)?;
        let truth = &self.truths[product];
        let report = assess_noisy(tool, truth, holder.as_ref(), self.today, &mut self.rng)?;
        if let Some(case) = &case {
            self.busy.insert(case.clone());
        }
        self.schedule(report.day, Task::Assessment { case, product: product.clone(), report });
        Ok(())
    }

    fn tooling_phase(&mut self) -> Result<(), SimError> {
        let triggers: Vec<_> = self
            .scenario
            .triggers
            .iter()
            .filter(|t| t.day == self.today)
            .filter_map(|t| match &t.action {
                TriggerAction::Assess { tool, product } => Some((tool.clone(), product.clone())),
                TriggerAction::Telemetry { .. } => None,
            })
            .collect();
        for (tool, product) in triggers {
            let profile = self.scenario.tool(&tool).expect("validated").clone();
            self.start_assessment(&profile, &product, None)?;
        }

        loop {
            let mut progressed = false;
            for task in self.take_due(true) {
                progressed = true;
                self.complete(task)?;
            }
            for case in self.active_cases() {
                if self.busy.contains(&case.case_id) {
                    continue;
                }
                progressed |= self.start_provider_tooling(&case)?;
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    fn complete(&mut self, task: Task) -> Result<(), SimError> {
        match task {
            Task::Assessment { case, product, report } => {
                self.platform.ingest_assessment(&TwinRegistry::twin_id_for(&product), report)?;
                if let Some(case) = case {
                    self.busy.remove(&case);
                    self.platform.fulfill(&case, CaseEvent::AssessmentDone, None)?;
                }
            }
            Task::Repair { case, product, truth, record } => {
                self.truths.insert(product.clone(), truth);
                self.platform.record_repair(&TwinRegistry::twin_id_for(&product), record)?;
                self.busy.remove(&case);
                if self.platform.state().case(&case)?.model() == Some(BusinessModel::Exchange) {
                    self.platform.fulfill(&case, CaseEvent::RepairDone, None)?;
                } else {
                    self.repaired.insert(case);
                }
            }
            Task::Arrival { case, event } => {
                self.busy.remove(&case);
                self.platform.fulfill(&case, event, None)?;
            }
        }
        Ok(())
    }

    fn active_cases(&self) -> Vec<ServiceCase> {
        self.platform.state().market().cases().filter(|c| !c.state.is_terminal()).cloned().collect()
    }

    fn provider_tools(&self, provider: &StakeholderId) -> impl Iterator<Item = &ToolProfile> + '_ {
        let provider = provider.clone();
        self.scenario.tools.iter().filter(move |t| t.owner == provider)
    }

    fn product_of(&self, twin: &TwinId) -> Result<ProductId, SimError> {
        Ok(self.platform.state().twins().get(twin)?.descriptor.product_id.clone())
    }

    /// Provider-side assessment and repair of the unit it received.
    fn start_provider_tooling(&mut self, case: &ServiceCase) -> Result<bool, SimError> {
        let (Some(model), Some(offer)) = (case.model(), case.accepted_offer()) else {
            return Ok(false);
        };
        let provider = offer.provider_id.clone();
        let product = self.product_of(&case.request.twin_id)?;
        let exchange = model == BusinessModel::Exchange;
        let wants_assessment = matches!(
            (exchange, case.state),
            (false, Fulfillment(Stage::ProductReceived)) | (true, Fulfillment(Stage::OriginalReceived))
        );
        let wants_repair = matches!(
            (exchange, case.state),
            (false, Fulfillment(Stage::Repairing)) | (true, Fulfillment(Stage::OriginalAssessed))
        ) && !self.repaired.contains(&case.case_id);

        if wants_assessment && self.allows(&provider, ActorAction::Assess, &product) {
            // the tool that sees the most
            let Some(tool) = self
                .provider_tools(&provider)
                .max_by(|a, b| a.detectable_codes.len().cmp(&b.detectable_codes.len()).then(b.tool_id.cmp(&a.tool_id)))
                .cloned()
            else {
                return Ok(false);
            };
            self.start_assessment(&tool, &product, Some(case.case_id.clone()))?;
            return Ok(true);
        }

        if wants_repair && self.allows(&provider, ActorAction::Repair, &product) {
            let twin = self.platform.state().twins().get(&case.request.twin_id)?;
            let needed: BTreeSet<String> = twin.live().serviceable_findings().map(|f| f.damage_code.clone()).collect();
            let Some(tool) = self
                .provider_tools(&provider)
                .filter(|t| !t.repairable_codes.is_empty())
                .max_by(|a, b| {
                    let score = |t: &ToolProfile| needed.intersection(&t.repairable_codes).count();
                    score(a).cmp(&score(b)).then(b.tool_id.cmp(&a.tool_id))
                })
                .cloned()
            else {
                return Ok(false);
            };
            let targets: BTreeSet<String> = needed.intersection(&tool.repairable_codes).cloned().collect();
            let holder = self.custodian(&product)?;
            let (truth, record) = repair(&tool, &self.truths[&product], &targets, holder.as_ref(), self.today)?;
            self.busy.insert(case.case_id.clone());
            self.schedule(record.day, Task::Repair { case: case.case_id.clone(), product, truth, record });
            return Ok(true);
        }
        Ok(false)
    }

    fn manual_decisions(&mut self) -> Result<(), SimError> {
        for case in self.active_cases() {
            if case.state.is_open()
                && case.decision_mode == DecisionMode::ManualApproval
                && self.today >= case.window_closes()
            {
                let product = self.product_of(&case.request.twin_id)?;
                if self.allows(&case.administrator, ActorAction::Decide, &product) {
                    self.platform.decide(&case.case_id, DecisionTrigger::Manual(None))?;
                }
            }
        }
        Ok(())
    }

    fn shipping(&self, from: &StakeholderId, to: &StakeholderId) -> Result<u32, SimError> {
        self.scenario
            .shipping_days(from, to)
            .ok_or_else(|| SimError::MissingShippingRoute { from: from.clone(), to: to.clone() })
    }

    /// Dispatches a shipment; `event` fires when it arrives.
    fn ship(
        &mut self,
        case: &CaseId,
        from: &StakeholderId,
        to: &StakeholderId,
        event: CaseEvent,
    ) -> Result<(), SimError> {
        let days = self.shipping(from, to)?;
        self.busy.insert(case.clone());
        self.schedule(self.today.plus(days), Task::Arrival { case: case.clone(), event });
        Ok(())
    }

    fn fulfillment_phase(&mut self) -> Result<(), SimError> {
        loop {
            let mut progressed = false;
            for task in self.take_due(false) {
                progressed = true;
                self.complete(task)?;
            }
            for case in self.active_cases() {
                if self.busy.contains(&case.case_id) {
                    continue;
                }
                progressed |= self.fulfillment_step(&case)?;
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    fn fulfillment_step(&mut self, case: &ServiceCase) -> Result<bool, SimError> {
        let id = &case.case_id;
        if case.state == CaseState::NoFeasibleOffer {
            self.platform.fulfill(id, CaseEvent::Close, None)?;
            return Ok(true);
        }
        let (Some(model), Some(offer)) = (case.model(), case.accepted_offer()) else {
            return Ok(false);
        };
        let admin = case.administrator.clone();
        let provider = offer.provider_id.clone();
        let product = self.product_of(&case.request.twin_id)?;

        match (model, case.state) {
            (BusinessModel::Exchange, CaseState::Decided) => {
                if !self.allows(&provider, ActorAction::Ship, &product) {
                    return Ok(false);
                }
                let stock = self.platform.state().replacement_stock(&provider, &case.request.twin_id);
                let Some(replacement) = stock.into_iter().next() else {
                    return Ok(false);
                };
                self.platform.fulfill(id, CaseEvent::Shipped, Some(replacement))?;
                self.ship(id, &provider, &admin, CaseEvent::Received)?;
            }
            (_, CaseState::Decided) | (BusinessModel::Exchange, Fulfillment(Stage::ReplacementReceived)) => {
                if !self.allows(&admin, ActorAction::Ship, &product) {
                    return Ok(false);
                }
                self.platform.fulfill(id, CaseEvent::Shipped, None)?;
                self.ship(id, &admin, &provider, CaseEvent::Received)?;
            }
            (_, Fulfillment(Stage::Repairing)) if self.repaired.contains(id) => {
                if !self.allows(&provider, ActorAction::Ship, &product) {
                    return Ok(false);
                }
                self.repaired.remove(id);
                self.ship(id, &provider, &admin, CaseEvent::Returned)?;
            }
            (BusinessModel::Exchange, Fulfillment(Stage::OriginalRepaired)) => {
                if !self.allows(&provider, ActorAction::Store, &product) {
                    return Ok(false);
                }
                self.platform.fulfill(id, CaseEvent::Stored, None)?;
            }
            (_, Fulfillment(Stage::Returned)) | (BusinessModel::Exchange, Fulfillment(Stage::Stored)) => {
                self.platform.fulfill(id, CaseEvent::Close, None)?;
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}
