use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{CaseId, CaseState};
use crate::log::{encode_log, EventRecord};
use crate::platform::PlatformState;

use super::kpi::{compute_kpis, CaseKpi, KpiSection};
use super::scenario::Scenario;
use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenCase {
    pub case_id: CaseId,
    pub state: CaseState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub seed: u64,
    pub horizon: u32,
    pub kpis: KpiSection,
    /// Cases still running when the horizon was reached.
    pub open_cases: Vec<OpenCase>,
    pub event_count: u64,
    /// SHA-256 of the encoded event log, hex.
    pub log_sha256: String,
}

impl SimulationReport {
    pub fn build(scenario: &Scenario, state: &PlatformState, log: &[EventRecord]) -> Result<Self, SimError> {
        let kpis = compute_kpis(log)?;
        let open_cases = state
            .market()
            .cases()
            .filter(|c| !c.state.is_terminal())
            .map(|c| OpenCase { case_id: c.case_id.clone(), state: c.state })
            .collect();
        Ok(Self {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            horizon: scenario.horizon,
            kpis,
            open_cases,
            event_count: log.len() as u64,
            log_sha256: log_digest(log),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }

    /// The first case, which is the only one in the shipped scenarios.
    pub fn primary_case(&self) -> Option<&CaseKpi> {
        self.kpis.cases.first()
    }
}

pub fn log_digest(log: &[EventRecord]) -> String {
    let digest = Sha256::digest(encode_log(log).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

/// Human-readable per-case and per-provider summary.
pub fn render_table(report: &SimulationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} (seed {}, horizon {} days, {} events)",
        report.scenario, report.seed, report.horizon, report.event_count
    );
    let _ = writeln!(
        out,
        "{:<10} {:<10} {:>7} {:>7} {:>10} {:>10} {:>14} {:<18}",
        "case", "provider", "opened", "decided", "reinstated", "turnaround", "price", "state"
    );
    for c in &report.kpis.cases {
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:>7} {:>7} {:>10} {:>10} {:>14} {:<18}",
            c.case_id.as_str(),
            opt(c.accepted_provider.as_ref()),
            c.opened_day.get(),
            opt(c.decided_day.map(|d| d.get())),
            opt(c.reinstated_day.map(|d| d.get())),
            opt(c.turnaround_days),
            opt(c.accepted_price),
            format!("{:?}", c.final_state),
        );
    }
    if !report.kpis.providers.is_empty() {
        let _ = writeln!(out, "{:<10} {:>14} {:>14} {:>14}", "provider", "revenue", "cost", "profit");
        for (id, e) in &report.kpis.providers {
            let _ = writeln!(
                out,
                "{:<10} {:>14} {:>14} {:>14}",
                id.as_str(),
                e.revenue.to_string(),
                e.cost.to_string(),
                format!("{:.2} EUR", e.profit as f64 / 100.0)
            );
        }
    }
    let _ = writeln!(out, "feasibility violations: {}", report.kpis.feasibility_violations);
    for open in &report.open_cases {
        let _ = writeln!(out, "open at horizon: {} ({:?})", open.case_id, open.state);
    }
    out
}

/// Side-by-side view of the first case of two runs.
pub fn render_comparison(a: &SimulationReport, b: &SimulationReport) -> String {
    type Cell = Box<dyn Fn(&SimulationReport) -> String>;
    let rows: [(&str, Cell); 7] = [
        ("accepted provider", Box::new(|r| opt(r.primary_case().and_then(|c| c.accepted_provider.as_ref())))),
        ("accepted price", Box::new(|r| opt(r.primary_case().and_then(|c| c.accepted_price)))),
        ("business model", Box::new(|r| opt(r.primary_case().and_then(|c| c.model).map(|m| format!("{m:?}"))))),
        ("promised days", Box::new(|r| opt(r.primary_case().and_then(|c| c.promised_duration_days)))),
        ("turnaround days", Box::new(|r| opt(r.primary_case().and_then(|c| c.turnaround_days)))),
        ("closed on day", Box::new(|r| opt(r.primary_case().and_then(|c| c.closed_day).map(|d| d.get())))),
        ("feasibility violations", Box::new(|r| r.kpis.feasibility_violations.to_string())),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:>18} {:>18}", "", a.scenario, b.scenario);
    for (label, f) in rows.iter() {
        let _ = writeln!(out, "{:<24} {:>18} {:>18}", label, f(a), f(b));
    }
    out
}
