//! What a fixed-price repair service earns as more of the incoming units
//! turn out to be badly damaged.

use lcw_core::domain::Money;
use lcw_core::sim::{fixed_price_risk_sweep, severity_mix_sweep, MixPoint};

pub fn run() -> Vec<MixPoint> {
    let fixed = Money::from_euros(300);
    let week = [100, 200, 500, 150, 320].map(Money::from_euros);
    let sweep = fixed_price_risk_sweep(fixed, &week);
    println!("per-unit profit (cents): {:?}, total {}", sweep.profits, sweep.total);

    let points = severity_mix_sweep(fixed, Money::from_euros(120), Money::from_euros(480), 20);
    for p in points.iter().step_by(4) {
        println!("{:>5.0}% severe: {:>10.2} EUR", p.fraction_expensive * 100.0, p.total as f64 / 100.0);
    }
    let break_even = points.iter().find(|p| p.total < 0).map(|p| p.fraction_expensive);
    println!("first loss at {:?} severe", break_even);
    points
}

fn main() {
    run();
}
