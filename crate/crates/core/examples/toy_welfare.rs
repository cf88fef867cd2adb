//! Clears the two-block toy market for welfare and verifies the result.

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};
use pcr_clearing::fixtures::toy_market;
use pcr_clearing::verifier::{verify_equilibrium, Tolerances};

fn main() {
    let market = toy_market();
    let sol = clear(&market, &ClearingRequest::new(ObjectiveKind::Welfare, MarketRules::Pcr))
        .expect("toy market clears");

    println!("price L1/T1 = {}", sol.prices[0][0]);
    for (bid, x) in market.hourly_bids.iter().zip(&sol.hourly_acceptance) {
        println!("hourly {:>2}: {x:.3}", bid.id);
    }
    for (bid, y) in market.block_bids.iter().zip(&sol.block_acceptance) {
        println!("block  {:>2}: {y:.0}", bid.id);
    }
    println!(
        "welfare {} volume {} opportunity cost {}",
        sol.welfare, sol.traded_volume, sol.total_opportunity_cost
    );

    let report = verify_equilibrium(&market, &sol, &Tolerances::default());
    println!("{report}");
}
