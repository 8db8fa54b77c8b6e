//! Provider-side risk of the fixed-price business model.
//!
//! Under a fixed price every unit pays the same, while the cost of each
//! repair depends on how badly the unit is damaged.

use serde::{Deserialize, Serialize};

use crate::domain::Money;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskSweep {
    /// `fixed_price - cost_i` in cents, in input order.
    pub profits: Vec<i64>,
    pub total: i64,
}

pub fn fixed_price_risk_sweep(fixed_price: Money, case_costs: &[Money]) -> RiskSweep {
    let profits: Vec<i64> = case_costs.iter().map(|c| fixed_price.signed_sub(*c)).collect();
    let total = profits.iter().sum();
    RiskSweep { profits, total }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixPoint {
    pub expensive_cases: usize,
    pub fraction_expensive: f64,
    pub total: i64,
}

/// Total profit over `cases` units as the share of expensive repairs grows
/// from none to all.
pub fn severity_mix_sweep(fixed_price: Money, cheap: Money, expensive: Money, cases: usize) -> Vec<MixPoint> {
    (0..=cases)
        .map(|k| {
            let costs: Vec<Money> =
                std::iter::repeat_n(expensive, k).chain(std::iter::repeat_n(cheap, cases - k)).collect();
            MixPoint {
                expensive_cases: k,
                fraction_expensive: if cases == 0 { 0.0 } else { k as f64 / cases as f64 },
                total: fixed_price_risk_sweep(fixed_price, &costs).total,
            }
        })
        .collect()
}
