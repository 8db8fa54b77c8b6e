use std::collections::{BTreeMap, BTreeSet};

use lcw_core::domain::{Money, SimDay, StakeholderId};
use lcw_core::tooling::{assess, assess_noisy, repair, Damage, ToolProfile, ToolingError, TrueState};
use lcw_core::twin::{Severity, DEFAULT_DAMAGE_CODES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PATHS: [&str; 4] = ["main_connection_plug", "cells/block_1", "cells/block_2", "bms"];

fn code_set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(0..3usize, 0..=3)
        .prop_map(|s| s.into_iter().map(|i| DEFAULT_DAMAGE_CODES[i].to_owned()).collect())
}

fn truth() -> impl Strategy<Value = TrueState> {
    prop::collection::btree_set((0..4usize, 0..3usize, 1..4usize), 0..8).prop_map(|set| TrueState {
        product_id: "bb".into(),
        actual_damages: set
            .into_iter()
            .map(|(p, c, s)| Damage {
                component_path: PATHS[p].into(),
                damage_code: DEFAULT_DAMAGE_CODES[c].into(),
                severity: [Severity::None, Severity::Minor, Severity::Major, Severity::Unserviceable][s],
            })
            .collect(),
    })
}

fn tool(detect: BTreeSet<String>, repairable: BTreeSet<String>) -> ToolProfile {
    ToolProfile {
        tool_id: "bench".into(),
        owner: "reese".into(),
        detectable_codes: detect,
        repairable_codes: repairable,
        assessment_days: 1,
        repair_days: 2,
        repair_costs: DEFAULT_DAMAGE_CODES
            .iter()
            .zip([1500, 18000, 9000])
            .map(|(c, v)| (c.to_string(), Money::from_cents(v)))
            .collect::<BTreeMap<_, _>>(),
        miss_probability: None,
    }
}

fn reese() -> StakeholderId {
    "reese".into()
}

proptest! {
    #[test]
    fn findings_are_the_detectable_intersection(t in truth(), detect in code_set()) {
        let report = assess(&tool(detect.clone(), BTreeSet::new()), &t, Some(&reese()), SimDay::new(3)).unwrap();
        let found: BTreeSet<(String, String, Severity)> =
            report.findings.iter().map(|f| (f.component_path.clone(), f.damage_code.clone(), f.severity)).collect();
        let expected: BTreeSet<(String, String, Severity)> = t
            .actual_damages
            .iter()
            .filter(|d| detect.contains(&d.damage_code))
            .map(|d| (d.component_path.clone(), d.damage_code.clone(), d.severity))
            .collect();
        // soundness: nothing reported that is not there; completeness: nothing detectable missed
        prop_assert_eq!(found, expected);
        prop_assert_eq!(report.findings.len(), t.actual_damages.iter().filter(|d| detect.contains(&d.damage_code)).count());
        prop_assert_eq!(report.day, SimDay::new(4));
    }

    #[test]
    fn repair_round_trip_and_idempotence(t in truth(), targets in code_set()) {
        let all: BTreeSet<String> = DEFAULT_DAMAGE_CODES.iter().map(|c| c.to_string()).collect();
        let bench = tool(all.clone(), all);
        let (fixed, record) = repair(&bench, &t, &targets, Some(&reese()), SimDay::ZERO).unwrap();
        for d in &t.actual_damages {
            prop_assert_eq!(fixed.actual_damages.contains(d), !targets.contains(&d.damage_code));
        }
        prop_assert!(fixed.actual_damages.is_subset(&t.actual_damages));
        let expected_cost: u64 = t
            .actual_damages
            .iter()
            .filter(|d| targets.contains(&d.damage_code))
            .map(|d| bench.repair_costs[&d.damage_code].cents())
            .sum();
        prop_assert_eq!(record.cost.cents(), expected_cost);
        prop_assert_eq!(record.day, SimDay::new(2));

        let reassessed = assess(&bench, &fixed, Some(&reese()), SimDay::ZERO).unwrap();
        prop_assert!(reassessed.findings.iter().all(|f| !targets.contains(&f.damage_code)));

        let (again, second) = repair(&bench, &fixed, &targets, Some(&reese()), SimDay::ZERO).unwrap();
        prop_assert_eq!(&again, &fixed);
        prop_assert_eq!(second.cost, Money::ZERO);
    }

    #[test]
    fn noise_only_drops_findings(t in truth(), p in 0.0..=1.0f64, seed in any::<u64>()) {
        let all: BTreeSet<String> = DEFAULT_DAMAGE_CODES.iter().map(|c| c.to_string()).collect();
        let mut bench = tool(all, BTreeSet::new());
        bench.miss_probability = Some(p);
        let clean = assess(&bench, &t, Some(&reese()), SimDay::ZERO).unwrap();
        let noisy = assess_noisy(&bench, &t, Some(&reese()), SimDay::ZERO, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(noisy.findings.iter().all(|f| clean.findings.contains(f)));
        let rerun = assess_noisy(&bench, &t, Some(&reese()), SimDay::ZERO, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(noisy, rerun);
    }

    #[test]
    fn custody_and_capability_gates(t in truth(), repairable in code_set(), targets in code_set()) {
        let bench = tool(BTreeSet::new(), repairable.clone());
        for holder in [None, Some(StakeholderId::from("claire"))] {
            let blocked = matches!(assess(&bench, &t, holder.as_ref(), SimDay::ZERO), Err(ToolingError::NoCustody { .. }));
            prop_assert!(blocked);
            let blocked = matches!(repair(&bench, &t, &targets, holder.as_ref(), SimDay::ZERO), Err(ToolingError::NoCustody { .. }));
            prop_assert!(blocked);
        }
        let result = repair(&bench, &t, &targets, Some(&reese()), SimDay::ZERO);
        if targets.is_subset(&repairable) {
            prop_assert!(result.is_ok());
        } else {
            let refused = matches!(result, Err(ToolingError::NotRepairableByTool { .. }));
            prop_assert!(refused);
        }
    }
}

#[test]
fn miss_rate_tracks_probability() {
    let all: BTreeSet<String> = DEFAULT_DAMAGE_CODES.iter().map(|c| c.to_string()).collect();
    let mut bench = tool(all, BTreeSet::new());
    bench.miss_probability = Some(0.25);
    let t = TrueState {
        product_id: "bb".into(),
        actual_damages: PATHS
            .iter()
            .flat_map(|p| {
                DEFAULT_DAMAGE_CODES.iter().map(move |c| Damage {
                    component_path: p.to_string(),
                    damage_code: c.to_string(),
                    severity: Severity::Major,
                })
            })
            .collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let runs = 2000;
    let kept: usize = (0..runs)
        .map(|_| assess_noisy(&bench, &t, Some(&reese()), SimDay::ZERO, &mut rng).unwrap().findings.len())
        .sum();
    let rate = 1.0 - kept as f64 / (runs * t.actual_damages.len()) as f64;
    assert!((rate - 0.25).abs() < 0.01, "observed miss rate {rate}");
}
