//! Builds a scenario in code: a fleet manager with two scooters, one
//! fixed-price provider, and a battery that no provider can service in
//! time.

use lcw_core::domain::CaseState;
use lcw_core::sim::{render_table, run_scenario, Scenario, SimulationReport};

const FLEET: &str = r#"
name = "fleet"
horizon = 10
seed = 1

[[stakeholders]]
id = "fleet"
role = "administrator"

[[stakeholders]]
id = "fixit"
role = "provider"

[[products]]
product_id = "scooter-1"
kind = "Item"
model_id = "Scooter-X"
manufacturer = "Rollwerk"
connectivity = true
administrator = "fleet"

[[products]]
product_id = "scooter-1-battery"
kind = "Assembly"
model_id = "ScooterBattery"
manufacturer = "Rollwerk"
parent = "scooter-1"
administrator = "fleet"

[[true_states]]
product_id = "scooter-1"
damages = [{ component_path = "deck/plug", damage_code = "plug_damaged", severity = "Minor" }]

[[true_states]]
product_id = "scooter-1-battery"
damages = [{ component_path = "bms", damage_code = "bms_fault", severity = "Major" }]

[[tools]]
tool_id = "fleet-app"
owner = "fleet"
detectable_codes = ["plug_damaged", "bms_fault"]

[[tools]]
tool_id = "fixit-bench"
owner = "fixit"
detectable_codes = ["plug_damaged", "bms_fault"]
repairable_codes = ["plug_damaged", "bms_fault"]
repair_days = 1
repair_costs = { plug_damaged = 2000, bms_fault = 9000 }

[[agents.administrators]]
administrator_id = "fleet"
constraints = { Scooter-X = { max_cost = 8000, max_duration_days = 5 }, ScooterBattery = { max_cost = 8000, max_duration_days = 1 } }

[[agents.providers]]
provider_id = "fixit"
catalog = [
    { matcher = "Scooter*", model = "FixedPrice", price = 6000, promised_duration_days = 4 },
]

[[shipping]]
from = "fleet"
to = "fixit"
days = 1

[[shipping]]
from = "fixit"
to = "fleet"
days = 1

[[triggers]]
day = 0
actor = "fleet"
action = "assess"
tool = "fleet-app"
product = "scooter-1"

[[triggers]]
day = 0
actor = "fleet"
action = "assess"
tool = "fleet-app"
product = "scooter-1-battery"
"#;

pub fn run() -> Result<SimulationReport, Box<dyn std::error::Error>> {
    let scenario = Scenario::from_toml(FLEET)?;
    let report = run_scenario(&scenario)?.report;
    print!("{}", render_table(&report));
    let closed_without_offer = report
        .kpis
        .cases
        .iter()
        .filter(|c| c.accepted_provider.is_none() && c.final_state == CaseState::Closed)
        .count();
    println!("cases closed without a feasible offer: {closed_without_offer}");
    Ok(report)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
