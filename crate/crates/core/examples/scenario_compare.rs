//! Runs the send-in baseline and the exchange flow and prints their KPIs
//! next to each other.

use lcw_core::sim::{render_comparison, render_table, run_scenario, Scenario, SimulationReport};

pub fn run() -> Result<(SimulationReport, SimulationReport), Box<dyn std::error::Error>> {
    let baseline = Scenario::from_toml(include_str!("../scenarios/baseline.scenario"))?;
    let lcw = Scenario::from_toml(include_str!("../scenarios/lcw.scenario"))?;
    let a = run_scenario(&baseline)?.report;
    let b = run_scenario(&lcw)?.report;
    println!("{}", render_table(&a));
    println!("{}", render_table(&b));
    println!("{}", render_comparison(&a, &b));
    Ok((a, b))
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
