//! The platform driven by hand: agents are configured, Claire's agent
//! requests a service, providers offer, and Claire approves the
//! recommendation herself.

use std::collections::BTreeMap;

use lcw_core::agents::{AdministratorConfig, DecisionMode, ProductConstraints, ProviderConfig, ServicePolicy};
use lcw_core::domain::{BusinessModel, CaseEvent, Money, ProductDescriptor, ProductKind, SimDay};
use lcw_core::market::DecisionTrigger;
use lcw_core::platform::{replay, Platform};
use lcw_core::runtime::OpenGate;
use lcw_core::twin::{ConditionReport, Finding, Severity};

fn battery(id: &str) -> ProductDescriptor {
    ProductDescriptor {
        product_id: id.into(),
        kind: ProductKind::Item,
        model_id: "BikeBattery-36V".into(),
        manufacturer: "Voltara".into(),
        parent: None,
        connectivity: true,
    }
}

fn provider(id: &str, model: BusinessModel, euros: u64, days: u32) -> ProviderConfig {
    ProviderConfig {
        provider_id: id.into(),
        catalog: vec![ServicePolicy {
            matcher: "BikeBattery*".into(),
            model,
            price: Money::from_euros(euros),
            promised_duration_days: days,
        }],
    }
}

pub fn run() -> Result<Platform, Box<dyn std::error::Error>> {
    let mut platform = Platform::default();
    let twin = platform.register_twin(battery("bb-claire"), "claire".into())?;
    let spare = platform.register_twin(battery("bb-reese-spare"), "reese".into())?;

    let constraints = ProductConstraints {
        max_cost: Money::from_euros(400),
        max_duration_days: 6,
        decision_mode: DecisionMode::ManualApproval,
        offer_window_days: 1,
    };
    platform.configure_administrator(AdministratorConfig {
        administrator_id: "claire".into(),
        constraints: BTreeMap::from([("bb-claire".to_owned(), constraints)]),
    })?;
    platform.configure_provider(provider("rebecca", BusinessModel::SendInRepair, 350, 14))?;
    platform.configure_provider(provider("robert", BusinessModel::SendInRepair, 450, 5))?;
    platform.configure_provider(provider("reese", BusinessModel::Exchange, 400, 4))?;

    platform.ingest_assessment(
        &twin,
        ConditionReport {
            recorded_by: "claire-phone".into(),
            day: SimDay::ZERO,
            findings: vec![Finding {
                component_path: "main_connection_plug".into(),
                damage_code: "plug_damaged".into(),
                severity: Severity::Major,
                measurements: vec![],
            }],
        },
    )?;

    let day0 = platform.run_agent_day(&OpenGate)?;
    let case_id = day0.requests[0].clone();
    println!("{case_id}: {} offers on the board", day0.offers.len());

    platform.advance_clock(SimDay::new(1))?;
    let case = platform.state().case(&case_id)?;
    println!("recommended: {:?}", case.recommendation());
    // the window closed, but nothing happens until Claire approves
    assert!(platform.run_agent_day(&OpenGate)?.decisions.is_empty());
    let decision = platform.decide(&case_id, DecisionTrigger::Manual(None))?;
    println!("Claire approved: {decision:?}");

    platform.fulfill(&case_id, CaseEvent::Shipped, Some(spare.clone()))?;
    platform.advance_clock(SimDay::new(3))?;
    let step = platform.fulfill(&case_id, CaseEvent::Received, None)?;
    println!("reinstated on day 3: {}", step.reinstated);
    println!(
        "spare now bound to {}, original to {}",
        platform.state().twins().get(&spare)?.administrator(),
        platform.state().twins().get(&twin)?.administrator()
    );

    let rebuilt = replay(platform.sink())?;
    assert_eq!(&rebuilt, platform.state());
    println!("{} events replay to the same state", platform.sink().len());
    Ok(platform)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
