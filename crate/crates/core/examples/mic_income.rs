//! A MIC producer is accepted only while its fixed cost stays covered.

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};
use pcr_clearing::fixtures::mic_market;
use pcr_clearing::verifier::verify_mic_income;

fn main() {
    for fixed_cost in [0.0, 100.0, 300.0, 1000.0] {
        let market = mic_market(fixed_cost);
        let sol = clear(&market, &ClearingRequest::new(ObjectiveKind::Welfare, MarketRules::Pcr))
            .expect("mic market clears");
        let mic = &market.mic_bids[0];
        let income: f64 = mic
            .suborders
            .iter()
            .zip(&sol.suborder_acceptance[0])
            .map(|(s, x)| -s.power * x * sol.prices[s.location][s.period])
            .sum::<f64>()
            + 0.0;
        let check = verify_mic_income(&market, &sol, 1e-5);
        println!(
            "F={fixed_cost:>6}: accepted={} prices={:?} income={income:.2} welfare={:.2} income check {}",
            sol.mic_accepted(0),
            sol.prices[0],
            sol.welfare,
            if check.passed { "ok" } else { "violated" }
        );
    }
}
