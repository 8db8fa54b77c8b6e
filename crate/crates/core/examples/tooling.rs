//! A phone tool sees only the damaged plug; a bench tool sees everything,
//! and after its repair a fresh bench assessment comes back clean.

use std::collections::BTreeSet;

use lcw_core::domain::{Money, SimDay};
use lcw_core::tooling::{assess, repair, Damage, ToolProfile, TrueState};
use lcw_core::twin::Severity;

fn codes(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|c| c.to_string()).collect()
}

pub fn run() -> Result<TrueState, Box<dyn std::error::Error>> {
    let all = ["plug_damaged", "cell_capacity_degraded", "bms_fault"];
    let truth = TrueState {
        product_id: "bb-claire".into(),
        actual_damages: [
            ("main_connection_plug", "plug_damaged", Severity::Major),
            ("cells/block_2", "cell_capacity_degraded", Severity::Major),
            ("bms", "bms_fault", Severity::Minor),
        ]
        .into_iter()
        .map(|(path, code, severity)| Damage { component_path: path.into(), damage_code: code.into(), severity })
        .collect(),
    };
    let phone = ToolProfile {
        tool_id: "claire-phone".into(),
        owner: "claire".into(),
        detectable_codes: codes(&["plug_damaged"]),
        repairable_codes: BTreeSet::new(),
        assessment_days: 0,
        repair_days: 0,
        repair_costs: Default::default(),
        miss_probability: None,
    };
    let bench = ToolProfile {
        tool_id: "reese-bench".into(),
        owner: "reese".into(),
        detectable_codes: codes(&all),
        repairable_codes: codes(&all),
        assessment_days: 0,
        repair_days: 1,
        repair_costs: all.iter().map(|c| (c.to_string(), Money::from_euros(60))).collect(),
        miss_probability: None,
    };

    let claire = "claire".into();
    let reese = "reese".into();
    let seen_by_phone = assess(&phone, &truth, Some(&claire), SimDay::ZERO)?;
    println!("phone: {:?}", seen_by_phone.findings.iter().map(|f| &f.damage_code).collect::<Vec<_>>());
    // the bench is Reese's; it cannot be used while Claire has the battery
    assert!(assess(&bench, &truth, Some(&claire), SimDay::ZERO).is_err());

    let seen_by_bench = assess(&bench, &truth, Some(&reese), SimDay::new(5))?;
    println!("bench: {} findings", seen_by_bench.findings.len());
    let (repaired, record) = repair(&bench, &truth, &codes(&all), Some(&reese), SimDay::new(5))?;
    println!("repair finished on day {} for {}", record.day.get(), record.cost);
    let after = assess(&bench, &repaired, Some(&reese), record.day)?;
    println!("after repair: {} findings", after.findings.len());
    Ok(repaired)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
