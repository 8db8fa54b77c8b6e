//! Deterministic, day-granular scenario simulation.
//!
//! A [`Scenario`] describes stakeholders, products with their hidden true
//! state, tools, agent configurations, shipping legs and scripted human
//! latency. [`run_scenario`] drives the platform through it and returns the
//! event log together with a KPI report computed from that log.

mod engine;
pub mod kpi;
pub mod report;
pub mod risk;
pub mod scenario;

use thiserror::Error;

use crate::domain::StakeholderId;
use crate::platform::PlatformError;
use crate::tooling::ToolingError;

pub use engine::{run_scenario, SimulationRun};
pub use kpi::{compute_kpis, CaseKpi, KpiAccumulator, KpiError, KpiSection, ProviderEconomics};
pub use report::{render_comparison, render_table, SimulationReport};
pub use risk::{fixed_price_risk_sweep, severity_mix_sweep, MixPoint, RiskSweep};
pub use scenario::{DelayGate, Scenario};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    ScenarioInvalid(String),
    #[error("no shipping route from {from} to {to}")]
    MissingShippingRoute { from: StakeholderId, to: StakeholderId },
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Tooling(#[from] ToolingError),
    #[error(transparent)]
    Kpi(#[from] KpiError),
}

impl From<crate::twin::TwinError> for SimError {
    fn from(e: crate::twin::TwinError) -> Self {
        SimError::Platform(e.into())
    }
}
