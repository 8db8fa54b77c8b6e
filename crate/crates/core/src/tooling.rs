//! Simulated assessment and repair tools.
//!
//! A [`TrueState`] is the physical reality of a product. Tools only see the
//! damage codes they can detect and only fix the codes they can repair.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Money, ProductId, SimDay, StakeholderId, ToolId};
use crate::twin::{ConditionReport, DamageTaxonomy, Finding, RepairAction, RepairRecord, Severity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolProfile {
    pub tool_id: ToolId,
    pub owner: StakeholderId,
    #[serde(default)]
    pub detectable_codes: BTreeSet<String>,
    #[serde(default)]
    pub repairable_codes: BTreeSet<String>,
    #[serde(default)]
    pub assessment_days: u32,
    #[serde(default)]
    pub repair_days: u32,
    /// Cost of repairing one present damage, per code.
    #[serde(default)]
    pub repair_costs: BTreeMap<String, Money>,
    /// Per-code probability of overlooking a damage. Off unless configured.
    #[serde(default)]
    pub miss_probability: Option<f64>,
}

impl ToolProfile {
    pub fn validate(&self, taxonomy: &DamageTaxonomy) -> Result<(), ToolingError> {
        for code in self.detectable_codes.iter().chain(&self.repairable_codes) {
            if !taxonomy.contains(code) {
                return Err(ToolingError::UnknownCode { tool: self.tool_id.clone(), code: code.clone() });
            }
        }
        if let Some(p) = self.miss_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(ToolingError::InvalidMissProbability(self.tool_id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Damage {
    pub component_path: String,
    pub damage_code: String,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueState {
    pub product_id: ProductId,
    #[serde(default)]
    pub actual_damages: BTreeSet<Damage>,
}

impl TrueState {
    pub fn is_sound(&self) -> bool {
        self.actual_damages.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolingError {
    #[error("{holder} does not hold product {product}; tool owner is {owner}")]
    NoCustody { product: ProductId, owner: StakeholderId, holder: String },
    #[error("tool {tool} cannot repair {code}")]
    NotRepairableByTool { tool: ToolId, code: String },
    #[error("tool {tool} references unknown damage code {code}")]
    UnknownCode { tool: ToolId, code: String },
    #[error("tool {0} has a miss probability outside [0, 1]")]
    InvalidMissProbability(ToolId),
}

fn check_custody(tool: &ToolProfile, truth: &TrueState, holder: Option<&StakeholderId>) -> Result<(), ToolingError> {
    if holder == Some(&tool.owner) {
        Ok(())
    } else {
        Err(ToolingError::NoCustody {
            product: truth.product_id.clone(),
            owner: tool.owner.clone(),
            holder: holder.map_or_else(|| "nobody (in transit)".to_owned(), ToString::to_string),
        })
    }
}

fn finding(damage: &Damage) -> Finding {
    Finding {
        component_path: damage.component_path.clone(),
        damage_code: damage.damage_code.clone(),
        severity: damage.severity,
        measurements: Vec::new(),
    }
}

/// Reports exactly the true damages the tool can detect.
///
/// `holder` is whoever physically has the product right now.
pub fn assess(
    tool: &ToolProfile,
    truth: &TrueState,
    holder: Option<&StakeholderId>,
    day: SimDay,
) -> Result<ConditionReport, ToolingError> {
    check_custody(tool, truth, holder)?;
    Ok(ConditionReport {
        recorded_by: tool.tool_id.clone(),
        day: day.plus(tool.assessment_days),
        findings: truth
            .actual_damages
            .iter()
            .filter(|d| tool.detectable_codes.contains(&d.damage_code))
            .map(finding)
            .collect(),
    })
}

/// Like [`assess`], but each detectable damage is dropped with the tool's
/// miss probability. Without a configured probability this equals `assess`.
pub fn assess_noisy<R: Rng>(
    tool: &ToolProfile,
    truth: &TrueState,
    holder: Option<&StakeholderId>,
    day: SimDay,
    rng: &mut R,
) -> Result<ConditionReport, ToolingError> {
    let mut report = assess(tool, truth, holder, day)?;
    if let Some(p) = tool.miss_probability {
        report.findings.retain(|_| !rng.random_bool(p));
    }
    Ok(report)
}

/// Removes the targeted damages and describes what was done.
pub fn repair(
    tool: &ToolProfile,
    truth: &TrueState,
    target_codes: &BTreeSet<String>,
    holder: Option<&StakeholderId>,
    day: SimDay,
) -> Result<(TrueState, RepairRecord), ToolingError> {
    check_custody(tool, truth, holder)?;
    if let Some(code) = target_codes.iter().find(|c| !tool.repairable_codes.contains(*c)) {
        return Err(ToolingError::NotRepairableByTool { tool: tool.tool_id.clone(), code: code.clone() });
    }

    let mut actions = Vec::new();
    let mut cost = Money::ZERO;
    for code in target_codes {
        let present: Vec<&Damage> = truth.actual_damages.iter().filter(|d| &d.damage_code == code).collect();
        if present.is_empty() {
            actions.push(RepairAction { damage_code: code.clone(), component_path: None });
        }
        for damage in present {
            actions
                .push(RepairAction { damage_code: code.clone(), component_path: Some(damage.component_path.clone()) });
            let unit = tool.repair_costs.get(code).copied().unwrap_or(Money::ZERO);
            cost = cost.checked_add(unit).unwrap_or(Money::from_cents(u64::MAX));
        }
    }

    let repaired = TrueState {
        product_id: truth.product_id.clone(),
        actual_damages: truth
            .actual_damages
            .iter()
            .filter(|d| !target_codes.contains(&d.damage_code))
            .cloned()
            .collect(),
    };
    let record = RepairRecord {
        recorded_by: tool.tool_id.clone(),
        performed_by: tool.owner.clone(),
        day: day.plus(tool.repair_days),
        actions,
        cost,
    };
    Ok((repaired, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn codes(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn tool(owner: &str, detect: &[&str], repair: &[&str]) -> ToolProfile {
        ToolProfile {
            tool_id: format!("{owner}-tool").as_str().into(),
            owner: owner.into(),
            detectable_codes: codes(detect),
            repairable_codes: codes(repair),
            assessment_days: 0,
            repair_days: 1,
            repair_costs: BTreeMap::new(),
            miss_probability: None,
        }
    }

    fn damaged() -> TrueState {
        let d = |path: &str, code: &str, severity| Damage {
            component_path: path.into(),
            damage_code: code.into(),
            severity,
        };
        TrueState {
            product_id: "bb-claire".into(),
            actual_damages: [
                d("main_connection_plug", "plug_damaged", Severity::Major),
                d("cells", "cell_capacity_degraded", Severity::Major),
                d("bms", "bms_fault", Severity::Minor),
            ]
            .into(),
        }
    }

    #[test]
    fn phone_sees_only_the_plug() {
        let phone = tool("claire", &["plug_damaged"], &[]);
        let report = assess(&phone, &damaged(), Some(&"claire".into()), SimDay::ZERO).unwrap();
        assert_eq!(report.findings.len(), 1);
        assert_eq!(report.findings[0].damage_code, "plug_damaged");
    }

    #[test]
    fn bench_sees_everything() {
        let bench = tool("reese", &DEFAULT, &[]);
        let report = assess(&bench, &damaged(), Some(&"reese".into()), SimDay::new(5)).unwrap();
        assert_eq!(report.findings.len(), 3);
        assert_eq!(report.day, SimDay::new(5));
    }

    const DEFAULT: [&str; 3] = crate::twin::DEFAULT_DAMAGE_CODES;

    #[test]
    fn blind_tool_reports_nothing() {
        let blind = tool("claire", &[], &[]);
        assert!(assess(&blind, &damaged(), Some(&"claire".into()), SimDay::ZERO).unwrap().findings.is_empty());
    }

    #[test]
    fn custody_is_required() {
        let bench = tool("reese", &DEFAULT, &DEFAULT);
        assert!(matches!(
            assess(&bench, &damaged(), Some(&"claire".into()), SimDay::ZERO),
            Err(ToolingError::NoCustody { .. })
        ));
        assert!(matches!(
            repair(&bench, &damaged(), &codes(&["bms_fault"]), None, SimDay::ZERO),
            Err(ToolingError::NoCustody { .. })
        ));
    }

    #[test]
    fn full_repair_then_reassess_is_clean() {
        let mut bench = tool("reese", &DEFAULT, &DEFAULT);
        bench.repair_costs.insert("bms_fault".into(), Money::from_euros(60));
        bench.repair_costs.insert("plug_damaged".into(), Money::from_euros(15));
        let reese = StakeholderId::from("reese");
        let (fixed, record) = repair(&bench, &damaged(), &codes(&DEFAULT), Some(&reese), SimDay::new(6)).unwrap();
        assert!(fixed.is_sound());
        assert_eq!(record.day, SimDay::new(7));
        assert_eq!(record.actions.len(), 3);
        assert_eq!(record.cost, Money::from_euros(75));
        assert!(assess(&bench, &fixed, Some(&reese), SimDay::new(7)).unwrap().findings.is_empty());
    }

    #[test]
    fn repair_capability_gate() {
        let solder = tool("reese", &[], &["plug_damaged"]);
        assert!(matches!(
            repair(&solder, &damaged(), &codes(&["bms_fault"]), Some(&"reese".into()), SimDay::ZERO),
            Err(ToolingError::NotRepairableByTool { .. })
        ));
    }

    #[test]
    fn repairing_absent_code_is_recorded_noop() {
        let solder = tool("reese", &[], &["plug_damaged"]);
        let sound = TrueState { product_id: "x".into(), actual_damages: BTreeSet::new() };
        let (after, record) =
            repair(&solder, &sound, &codes(&["plug_damaged"]), Some(&"reese".into()), SimDay::ZERO).unwrap();
        assert_eq!(after, sound);
        assert_eq!(record.actions, vec![RepairAction { damage_code: "plug_damaged".into(), component_path: None }]);
    }

    #[test]
    fn noise_is_off_by_default_and_seeded_when_on() {
        let mut bench = tool("reese", &DEFAULT, &[]);
        let holder = StakeholderId::from("reese");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let clean = assess(&bench, &damaged(), Some(&holder), SimDay::ZERO).unwrap();
        assert_eq!(assess_noisy(&bench, &damaged(), Some(&holder), SimDay::ZERO, &mut rng).unwrap(), clean);

        bench.miss_probability = Some(1.0);
        assert!(assess_noisy(&bench, &damaged(), Some(&holder), SimDay::ZERO, &mut rng).unwrap().findings.is_empty());
        bench.miss_probability = Some(0.5);
        let a =
            assess_noisy(&bench, &damaged(), Some(&holder), SimDay::ZERO, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b =
            assess_noisy(&bench, &damaged(), Some(&holder), SimDay::ZERO, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profile_validation() {
        let tax = DamageTaxonomy::default();
        assert!(tool("r", &DEFAULT, &DEFAULT).validate(&tax).is_ok());
        assert!(tool("r", &["scratch"], &[]).validate(&tax).is_err());
        let mut t = tool("r", &[], &[]);
        t.miss_probability = Some(1.5);
        assert!(t.validate(&tax).is_err());
    }
}
