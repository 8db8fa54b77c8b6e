//! The case state machine checked against a hand-written adjacency table.

use std::collections::{BTreeMap, BTreeSet};

use lcw_core::domain::{advance_case, BusinessModel, CaseError, CaseEvent, CaseState, FulfillmentStage as F};
use proptest::prelude::*;

use CaseEvent::*;
use CaseState::*;

/// Every legal (state, event) edge for one business model, Cancel excluded.
fn table(model: BusinessModel) -> BTreeMap<(CaseState, CaseEvent), CaseState> {
    let mut t = BTreeMap::from([
        ((Draft, AssessmentDone), Assessed),
        ((Assessed, RequestPosted), Requested),
        ((Requested, OfferReceived), OfferCollection),
        ((OfferCollection, OfferReceived), OfferCollection),
        ((OfferCollection, OfferAccepted), Decided),
        ((Requested, Timeout), NoFeasibleOffer),
        ((OfferCollection, Timeout), NoFeasibleOffer),
        ((NoFeasibleOffer, Close), Closed),
    ]);
    let fulfillment: &[(CaseState, CaseEvent, CaseState)] = if model == BusinessModel::Exchange {
        &[
            (Decided, Shipped, Fulfillment(F::ReplacementShipped)),
            (Fulfillment(F::ReplacementShipped), Received, Fulfillment(F::ReplacementReceived)),
            (Fulfillment(F::ReplacementReceived), Shipped, Fulfillment(F::OriginalShipped)),
            (Fulfillment(F::OriginalShipped), Received, Fulfillment(F::OriginalReceived)),
            (Fulfillment(F::OriginalReceived), AssessmentDone, Fulfillment(F::OriginalAssessed)),
            (Fulfillment(F::OriginalAssessed), RepairDone, Fulfillment(F::OriginalRepaired)),
            (Fulfillment(F::OriginalRepaired), Stored, Fulfillment(F::Stored)),
            (Fulfillment(F::Stored), Close, Closed),
        ]
    } else {
        &[
            (Decided, Shipped, Fulfillment(F::ProductShipped)),
            (Fulfillment(F::ProductShipped), Received, Fulfillment(F::ProductReceived)),
            (Fulfillment(F::ProductReceived), AssessmentDone, Fulfillment(F::Repairing)),
            (Fulfillment(F::Repairing), Returned, Fulfillment(F::Returned)),
            (Fulfillment(F::Returned), Close, Closed),
        ]
    };
    for (from, event, to) in fulfillment {
        t.insert((*from, *event), *to);
    }
    t
}

/// A fulfillment substate of another business model.
fn foreign(state: CaseState, model: BusinessModel) -> bool {
    matches!(state, Fulfillment(stage) if !stage.belongs_to(model))
}

fn oracle(state: CaseState, event: CaseEvent, model: BusinessModel) -> Option<CaseState> {
    if matches!(state, Closed | Cancelled) || foreign(state, model) {
        return None;
    }
    if event == Cancel {
        return Some(Cancelled);
    }
    table(model).get(&(state, event)).copied()
}

#[test]
fn exhaustive_table_agreement() {
    for model in BusinessModel::ALL {
        for state in CaseState::all() {
            for event in CaseEvent::ALL {
                let got = advance_case(state, event, model).ok();
                assert_eq!(got, oracle(state, event, model), "{state} + {event:?} under {model:?}");
            }
        }
    }
}

#[test]
fn every_state_and_event_is_enumerated() {
    assert_eq!(CaseState::all().len(), 19);
    assert_eq!(CaseState::all().into_iter().collect::<BTreeSet<_>>().len(), 19);
    assert_eq!(CaseEvent::ALL.len(), 12);
}

#[test]
fn no_dead_non_terminal_states() {
    for model in BusinessModel::ALL {
        for state in CaseState::all().into_iter().filter(|s| !s.is_terminal() && !foreign(*s, model)) {
            let accepted = CaseEvent::ALL.iter().filter(|e| advance_case(state, **e, model).is_ok()).count();
            assert!(accepted >= 1, "{state} is dead under {model:?}");
            // something other than Cancel moves every reachable state on
            let progress = CaseEvent::ALL
                .iter()
                .filter(|e| **e != Cancel)
                .filter(|e| advance_case(state, **e, model).is_ok())
                .count();
            assert!(progress >= 1, "{state} only cancels under {model:?}");
        }
    }
}

#[test]
fn no_duplicate_successors() {
    // a table built from all calls has at most one entry per key
    for model in BusinessModel::ALL {
        let mut seen: BTreeMap<(CaseState, CaseEvent), BTreeSet<CaseState>> = BTreeMap::new();
        for _ in 0..2 {
            for state in CaseState::all() {
                for event in CaseEvent::ALL {
                    if let Ok(to) = advance_case(state, event, model) {
                        seen.entry((state, event)).or_default().insert(to);
                    }
                }
            }
        }
        assert!(seen.values().all(|s| s.len() == 1));
    }
}

#[test]
fn terminal_states_reject_everything() {
    for model in BusinessModel::ALL {
        for event in CaseEvent::ALL {
            for state in [Closed, Cancelled] {
                assert!(matches!(advance_case(state, event, model), Err(CaseError::IllegalTransition { .. })));
            }
        }
    }
}

#[test]
fn foreign_substates_are_model_mismatches() {
    assert!(matches!(
        advance_case(Fulfillment(F::ProductShipped), Received, BusinessModel::Exchange),
        Err(CaseError::ModelMismatch { .. })
    ));
    assert!(matches!(
        advance_case(Fulfillment(F::Stored), Close, BusinessModel::FixedPrice),
        Err(CaseError::ModelMismatch { .. })
    ));
}

/// All event paths from Draft to Closed, with self-loops taken at most once.
fn paths_to_closed(model: BusinessModel) -> Vec<Vec<CaseState>> {
    fn walk(model: BusinessModel, path: &mut Vec<CaseState>, out: &mut Vec<Vec<CaseState>>) {
        let state = *path.last().unwrap();
        if state == Closed {
            out.push(path.clone());
            return;
        }
        for event in CaseEvent::ALL {
            if let Ok(next) = advance_case(state, event, model) {
                if path.iter().filter(|s| **s == next).count() < 2 {
                    path.push(next);
                    walk(model, path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(model, &mut vec![Draft], &mut out);
    out
}

#[test]
fn exchange_returns_replacement_before_original() {
    let paths = paths_to_closed(BusinessModel::Exchange);
    let through_fulfillment: Vec<_> = paths.iter().filter(|p| p.contains(&Decided)).collect();
    assert!(!through_fulfillment.is_empty());
    for path in through_fulfillment {
        let replacement = path.iter().position(|s| *s == Fulfillment(F::ReplacementReceived)).unwrap();
        let original = path.iter().position(|s| *s == Fulfillment(F::OriginalReceived)).unwrap();
        assert!(replacement < original);
    }
}

#[test]
fn send_in_has_a_single_fulfillment_path() {
    for model in [BusinessModel::SendInRepair, BusinessModel::FixedPrice] {
        let tails: BTreeSet<Vec<CaseState>> = paths_to_closed(model)
            .into_iter()
            .filter_map(|p| p.iter().position(|s| *s == Decided).map(|i| p[i..].to_vec()))
            .collect();
        assert_eq!(
            tails.into_iter().collect::<Vec<_>>(),
            vec![vec![
                Decided,
                Fulfillment(F::ProductShipped),
                Fulfillment(F::ProductReceived),
                Fulfillment(F::Repairing),
                Fulfillment(F::Returned),
                Closed
            ]]
        );
    }
}

#[test]
fn decided_plus_shipped_starts_the_exchange() {
    assert_eq!(advance_case(Decided, Shipped, BusinessModel::Exchange).unwrap(), Fulfillment(F::ReplacementShipped));
}

proptest! {
    #[test]
    fn random_walks_stay_on_declared_edges(
        model in prop::sample::select(BusinessModel::ALL.to_vec()),
        events in prop::collection::vec(prop::sample::select(CaseEvent::ALL.to_vec()), 0..40),
    ) {
        let mut state = Draft;
        for event in events {
            let expected = oracle(state, event, model);
            match advance_case(state, event, model) {
                Ok(next) => {
                    prop_assert_eq!(Some(next), expected);
                    state = next;
                }
                Err(_) => prop_assert_eq!(expected, None),
            }
        }
    }
}
