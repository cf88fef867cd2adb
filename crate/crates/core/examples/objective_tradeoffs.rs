//! Welfare, volume and opportunity cost under each objective.
//!
//! Pass an instance file to use it instead of the toy market:
//! `cargo run --example objective_tradeoffs -- instance.toml`

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};
use pcr_clearing::fixtures::toy_market;
use pcr_clearing::instance_io::parse;

fn main() {
    let market = match std::env::args().nth(1) {
        Some(path) => parse(&path).expect("readable instance"),
        None => toy_market(),
    };
    println!("{:<8} {:>12} {:>12} {:>12}", "target", "welfare", "volume", "opp. cost");
    for objective in ObjectiveKind::ALL {
        let sol = clear(&market, &ClearingRequest::new(objective, MarketRules::Pcr))
            .expect("market clears");
        println!(
            "{:<8} {:>12.3} {:>12.3} {:>12.3}",
            objective.label(),
            sol.welfare,
            sol.traded_volume,
            sol.total_opportunity_cost
        );
    }
}
