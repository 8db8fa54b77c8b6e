//! Claire's agent picks among three offers for her battery.

use lcw_core::agents::{is_feasible, select_offer, Decision, RequestConstraints, ServiceOffer};
use lcw_core::domain::{BusinessModel, Money, SimDay};

fn offer(id: &str, provider: &str, euros: u64, days: u32, model: BusinessModel) -> ServiceOffer {
    ServiceOffer {
        offer_id: id.into(),
        request_id: "req-0001".into(),
        provider_id: provider.into(),
        price: Money::from_euros(euros),
        promised_duration_days: days,
        model,
        submitted_day: SimDay::ZERO,
    }
}

pub fn run() -> Result<Decision, Box<dyn std::error::Error>> {
    let constraints = RequestConstraints { max_cost: Money::from_euros(400), max_duration_days: 6 };
    let offers = [
        offer("offer-rebecca", "rebecca", 350, 14, BusinessModel::SendInRepair),
        offer("offer-robert", "robert", 450, 5, BusinessModel::SendInRepair),
        offer("offer-reese", "reese", 400, 4, BusinessModel::Exchange),
    ];
    for o in &offers {
        println!(
            "{:<8} {:>12} {:>3} days  feasible: {}",
            o.provider_id,
            o.price,
            o.promised_duration_days,
            is_feasible(&constraints, o)
        );
    }
    let decision = select_offer(&constraints, &offers)?;
    println!("decision: {decision:?}");
    Ok(decision)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
