//! A battery twin collecting an assessment, telemetry and a repair, then
//! read back at an earlier version.

use lcw_core::domain::{ProductDescriptor, ProductKind, SimDay};
use lcw_core::twin::{
    ConditionReport, DamageTaxonomy, Finding, Measurement, RepairAction, RepairRecord, Severity, Telemetry,
    TwinRegistry, DEFAULT_DAMAGE_CODES,
};

pub fn run() -> Result<TwinRegistry, Box<dyn std::error::Error>> {
    let mut registry = TwinRegistry::new(DamageTaxonomy::new(DEFAULT_DAMAGE_CODES));
    let battery = ProductDescriptor {
        product_id: "bb-claire".into(),
        kind: ProductKind::Item,
        model_id: "BikeBattery-36V".into(),
        manufacturer: "Voltara".into(),
        parent: None,
        connectivity: true,
    };
    let twin = registry.register_twin(battery, "claire".into(), SimDay::ZERO)?;

    registry.ingest_assessment(
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
    registry.ingest_telemetry(
        &twin,
        Telemetry {
            day: SimDay::new(1),
            readings: vec![Measurement { name: "state_of_health".into(), value: 71.5, unit: "%".into() }],
        },
    )?;
    registry.ingest_repair(
        &twin,
        RepairRecord {
            recorded_by: "soldering-station".into(),
            performed_by: "reese".into(),
            day: SimDay::new(7),
            actions: vec![RepairAction {
                damage_code: "plug_damaged".into(),
                component_path: Some("main_connection_plug".into()),
            }],
            cost: lcw_core::domain::Money::from_euros(45),
        },
    )?;

    let now = registry.snapshot(&twin, None)?;
    let before_repair = registry.snapshot(&twin, Some(2))?;
    println!("version {}: {} open findings", now.version, now.condition.len());
    println!("version {}: {:?}", before_repair.version, before_repair.condition.keys().collect::<Vec<_>>());
    println!("telemetry: {:?}", now.telemetry.get("state_of_health").map(|m| m.value));
    Ok(registry)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
