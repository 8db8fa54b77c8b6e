//! Maintenance-service marketplace over digital twins.
//!
//! Product administrators and service providers are represented by
//! configured agents. Administrator agents read a product's digital twin and
//! post service requests; provider agents crawl the open board and offer
//! from their catalogs; the administrator agent accepts the shortest feasible
//! offer. Every state change is an [`log::EventRecord`] applied through
//! [`platform::PlatformState::apply`], so the whole platform replays from
//! its log.
//!
//! The [`sim`] module runs complete scenarios day by day against simulated
//! assessment and repair tooling.

pub mod agents;
pub mod domain;
pub mod log;
pub mod market;
pub mod platform;
pub mod runtime;
pub mod sim;
pub mod tooling;
pub mod twin;
