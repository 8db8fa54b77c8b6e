//! Walks an exchange case through the state machine and prints who holds
//! each battery at every step.

use lcw_core::domain::{advance_case, custody, BusinessModel, CaseEvent, CaseState, Unit};

pub fn run() -> Result<Vec<CaseState>, Box<dyn std::error::Error>> {
    use CaseEvent::*;
    let model = BusinessModel::Exchange;
    let events = [
        AssessmentDone,
        RequestPosted,
        OfferReceived,
        OfferAccepted,
        Shipped,
        Received,
        Shipped,
        Received,
        AssessmentDone,
        RepairDone,
        Stored,
        Close,
    ];
    let mut state = CaseState::Draft;
    let mut path = vec![state];
    for event in events {
        state = advance_case(state, event, model)?;
        path.push(state);
        println!(
            "{:<15} -> {:<36} original: {:<22} replacement: {:?}",
            format!("{event:?}"),
            state.to_string(),
            format!("{:?}", custody(state, model, Unit::Original)),
            custody(state, model, Unit::Replacement),
        );
    }
    // nothing moves a closed case
    assert!(advance_case(state, Cancel, model).is_err());
    Ok(path)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
