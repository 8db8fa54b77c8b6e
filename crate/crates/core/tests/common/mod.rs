//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lcw_core::agents::{
    AdministratorConfig, DecisionMode, ProductConstraints, ProviderConfig, RequestConstraints, ServiceOffer,
    ServicePolicy,
};
use lcw_core::domain::{BusinessModel, Money, OfferId, ProductDescriptor, ProductKind, SimDay};
use lcw_core::runtime::ActorAction;
use lcw_core::sim::scenario::{
    AgentSection, Delay, ProductEntry, Role, ShippingRoute, Stakeholder, Trigger, TriggerAction, TrueStateEntry,
};
use lcw_core::sim::Scenario;
use lcw_core::tooling::{Damage, ToolProfile};
use lcw_core::twin::{Severity, DEFAULT_DAMAGE_CODES};

pub const BASELINE: &str = include_str!("../../scenarios/baseline.scenario");
pub const LCW: &str = include_str!("../../scenarios/lcw.scenario");

pub fn baseline() -> Scenario {
    Scenario::from_toml(BASELINE).unwrap()
}

pub fn lcw() -> Scenario {
    Scenario::from_toml(LCW).unwrap()
}

pub fn battery(id: &str) -> ProductDescriptor {
    ProductDescriptor {
        product_id: id.into(),
        kind: ProductKind::Item,
        model_id: "BikeBattery-36V".into(),
        manufacturer: "Voltara".into(),
        parent: None,
        connectivity: true,
    }
}

/// Brute-force selection: filter by both bounds, then scan for the
/// lexicographic minimum of (duration, price, id).
pub fn oracle_select(constraints: &RequestConstraints, offers: &[ServiceOffer]) -> Option<OfferId> {
    let mut best: Option<&ServiceOffer> = None;
    for o in offers {
        if o.price.cents() > constraints.max_cost.cents() || o.promised_duration_days > constraints.max_duration_days {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                (o.promised_duration_days, o.price.cents(), o.offer_id.as_str())
                    < (b.promised_duration_days, b.price.cents(), b.offer_id.as_str())
            }
        };
        if better {
            best = Some(o);
        }
    }
    best.map(|o| o.offer_id.clone())
}

pub fn random_offers(rng: &mut ChaCha8Rng, request: &str, n: usize) -> Vec<ServiceOffer> {
    (0..n)
        .map(|i| ServiceOffer {
            offer_id: format!("offer-{:03}", rng.random_range(0..1000) * 10 + i).into(),
            request_id: request.into(),
            provider_id: format!("p{}", rng.random_range(0..5)).into(),
            price: Money::from_cents(rng.random_range(0..=6) * 5000),
            promised_duration_days: rng.random_range(1..=8),
            model: BusinessModel::ALL[rng.random_range(0..3)],
            submitted_day: SimDay::ZERO,
        })
        .collect()
}

const MODELS: [&str; 2] = ["BikeBattery-36V", "Scooter-X"];

/// A random but valid scenario: one administrator, a few products with
/// hidden damage, providers with random catalogs, full-mesh shipping, and
/// random human latency.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes: Vec<String> = DEFAULT_DAMAGE_CODES.iter().map(|c| c.to_string()).collect();
    let admin = "admin";
    let provider_count = rng.random_range(1..=4);
    let providers: Vec<String> = (0..provider_count).map(|i| format!("prov{i}")).collect();

    let mut stakeholders = vec![Stakeholder { id: admin.into(), role: Role::Administrator, name: None }];
    stakeholders.extend(providers.iter().map(|p| Stakeholder {
        id: p.as_str().into(),
        role: Role::Provider,
        name: None,
    }));

    let mut products = Vec::new();
    let mut true_states = Vec::new();
    let mut triggers = Vec::new();
    let mut constraints = BTreeMap::new();
    for i in 0..rng.random_range(1..=3) {
        let model = MODELS[rng.random_range(0..MODELS.len())];
        let id = format!("prod{i}");
        products.push(ProductEntry {
            descriptor: ProductDescriptor {
                product_id: id.as_str().into(),
                kind: ProductKind::Item,
                model_id: model.into(),
                manufacturer: "Acme".into(),
                parent: None,
                connectivity: rng.random_bool(0.5),
            },
            administrator: admin.into(),
        });
        let mut damages = Vec::new();
        for c in &codes {
            if rng.random_bool(0.6) {
                let severity =
                    [Severity::None, Severity::Minor, Severity::Major, Severity::Unserviceable][rng.random_range(0..4)];
                damages.push(Damage { component_path: format!("part/{c}"), damage_code: c.clone(), severity });
            }
        }
        true_states.push(TrueStateEntry { product_id: id.as_str().into(), damages });
        triggers.push(Trigger {
            day: SimDay::new(rng.random_range(0..4)),
            actor: admin.into(),
            action: TriggerAction::Assess { tool: "admin-scan".into(), product: id.as_str().into() },
        });
        constraints.insert(
            id,
            ProductConstraints {
                max_cost: Money::from_cents(rng.random_range(1..=8) * 5000),
                max_duration_days: rng.random_range(0..=10),
                decision_mode: if rng.random_bool(0.3) {
                    DecisionMode::ManualApproval
                } else {
                    DecisionMode::Autonomous
                },
                offer_window_days: rng.random_range(1..=3),
            },
        );
    }

    let mut tools = vec![ToolProfile {
        tool_id: "admin-scan".into(),
        owner: admin.into(),
        detectable_codes: codes.iter().filter(|_| rng.random_bool(0.7)).cloned().collect(),
        repairable_codes: Default::default(),
        assessment_days: 0,
        repair_days: 0,
        repair_costs: Default::default(),
        miss_probability: None,
    }];
    let mut provider_configs = Vec::new();
    for p in &providers {
        tools.push(ToolProfile {
            tool_id: format!("{p}-bench").into(),
            owner: p.as_str().into(),
            detectable_codes: codes.iter().cloned().collect(),
            repairable_codes: codes.iter().cloned().collect(),
            assessment_days: rng.random_range(0..=2),
            repair_days: rng.random_range(0..=3),
            repair_costs: codes
                .iter()
                .map(|c| (c.clone(), Money::from_cents(rng.random_range(1..=20) * 1000)))
                .collect(),
            miss_probability: if rng.random_bool(0.2) { Some(0.25) } else { None },
        });
        let mut catalog = Vec::new();
        for model in BusinessModel::ALL {
            if rng.random_bool(0.5) {
                catalog.push(ServicePolicy {
                    matcher: ["*", "BikeBattery*", "Scooter*"][rng.random_range(0..3)].into(),
                    model,
                    price: Money::from_cents(rng.random_range(1..=8) * 5000),
                    promised_duration_days: rng.random_range(1..=10),
                });
            }
        }
        // at most one policy per (matcher, model)
        catalog.sort_by(|a, b| (&a.matcher, a.model as u8).cmp(&(&b.matcher, b.model as u8)));
        catalog.dedup_by(|a, b| a.matcher == b.matcher && a.model == b.model);
        provider_configs.push(ProviderConfig { provider_id: p.as_str().into(), catalog });

        // spares for exchange service
        for (j, model) in MODELS.iter().enumerate() {
            if rng.random_bool(0.7) {
                products.push(ProductEntry {
                    descriptor: ProductDescriptor {
                        product_id: format!("{p}-spare{j}").into(),
                        kind: ProductKind::Item,
                        model_id: (*model).into(),
                        manufacturer: "Acme".into(),
                        parent: None,
                        connectivity: false,
                    },
                    administrator: p.as_str().into(),
                });
            }
        }
    }

    let mut shipping = Vec::new();
    for p in &providers {
        shipping.push(ShippingRoute { from: admin.into(), to: p.as_str().into(), days: rng.random_range(0..=3) });
        shipping.push(ShippingRoute { from: p.as_str().into(), to: admin.into(), days: rng.random_range(0..=3) });
    }

    let actions =
        [ActorAction::Offer, ActorAction::Ship, ActorAction::Assess, ActorAction::Repair, ActorAction::Decide];
    let mut delays = Vec::new();
    for _ in 0..rng.random_range(0..=4) {
        let actor = if rng.random_bool(0.3) {
            admin.to_owned()
        } else {
            providers[rng.random_range(0..providers.len())].clone()
        };
        delays.push(Delay {
            day: SimDay::new(rng.random_range(0..=8)),
            actor: actor.as_str().into(),
            action: actions[rng.random_range(0..actions.len())],
            product: None,
            note: None,
        });
    }

    let scenario = Scenario {
        name: format!("random-{seed}"),
        horizon: 30,
        seed,
        damage_codes: None,
        stakeholders,
        products,
        true_states,
        tools,
        agents: AgentSection {
            administrators: vec![AdministratorConfig { administrator_id: admin.into(), constraints }],
            providers: provider_configs,
        },
        shipping,
        delays,
        triggers,
    };
    scenario.validate().expect("generated scenarios are valid");
    scenario
}

use lcw_core::agents::Decision;
use lcw_core::domain::{CaseId, CaseState, FulfillmentStage, StakeholderId};
use lcw_core::log::{EventRecord, PlatformEvent};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleCase {
    pub opened: u32,
    pub turnaround: Option<u32>,
    pub provider: Option<StakeholderId>,
    pub price: Option<u64>,
    pub closed: Option<u32>,
    pub violations: u32,
    pub cancelled: bool,
}

/// KPIs by repeated filtering of the whole log instead of one incremental
/// scan. Reinstatement states are spelled out here rather than taken from
/// the library.
pub fn oracle_kpis(log: &[EventRecord]) -> (BTreeMap<CaseId, OracleCase>, BTreeMap<StakeholderId, (u64, u64)>) {
    let mut cases = BTreeMap::new();
    for r in log {
        if let PlatformEvent::RequestPosted { case_id, request, .. } = &r.event {
            let mut case = OracleCase { opened: r.day.get(), ..Default::default() };
            let offers: Vec<&ServiceOffer> = log
                .iter()
                .filter_map(|x| match &x.event {
                    PlatformEvent::OfferSubmitted { case_id: c, offer } if c == case_id => Some(offer),
                    _ => None,
                })
                .collect();
            let decision = log.iter().find_map(|x| match &x.event {
                PlatformEvent::CaseDecided { case_id: c, decision, .. } if c == case_id => {
                    Some((x.day.get(), decision))
                }
                _ => None,
            });
            let mut model = None;
            if let Some((_, Decision::Accepted(id))) = decision {
                let offer = offers.iter().find(|o| &o.offer_id == id).expect("accepted offer exists");
                if offer.price > request.constraints.max_cost
                    || offer.promised_duration_days > request.constraints.max_duration_days
                {
                    case.violations += 1;
                }
                case.provider = Some(offer.provider_id.clone());
                case.price = Some(offer.price.cents());
                model = Some(offer.model);
            }
            let reinstating = match model {
                Some(BusinessModel::Exchange) => Some(CaseState::Fulfillment(FulfillmentStage::ReplacementReceived)),
                Some(_) => Some(CaseState::Fulfillment(FulfillmentStage::Returned)),
                None => None,
            };
            for x in log {
                if let PlatformEvent::CaseAdvanced { case_id: c, to, .. } = &x.event {
                    if c != case_id {
                        continue;
                    }
                    if Some(*to) == reinstating && case.turnaround.is_none() {
                        case.turnaround = Some(x.day.get() - case.opened);
                    }
                    if matches!(to, CaseState::Closed | CaseState::Cancelled) {
                        case.closed = Some(x.day.get());
                        case.cancelled = *to == CaseState::Cancelled;
                    }
                }
            }
            cases.insert(case_id.clone(), case);
        }
    }

    let mut economics: BTreeMap<StakeholderId, (u64, u64)> = BTreeMap::new();
    for r in log {
        if let PlatformEvent::ProviderConfigured { config } = &r.event {
            economics.entry(config.provider_id.clone()).or_default();
        }
    }
    for case in cases.values() {
        if let (Some(p), Some(price), false) = (&case.provider, case.price, case.cancelled) {
            economics.get_mut(p).expect("offers come from configured providers").0 += price;
        }
    }
    for r in log {
        if let PlatformEvent::RepairRecorded { record, .. } = &r.event {
            if let Some(e) = economics.get_mut(&record.performed_by) {
                e.1 += record.cost.cents();
            }
        }
    }
    (cases, economics)
}
