//! Cross-checks the MILP against exhaustive enumeration of block and MIC
//! selections on a few generated instances.

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};
use pcr_clearing::instance_io::{generate, GeneratorConfig};
use pcr_clearing::oracle::{compare, enumerate};

fn main() {
    for seed in 1..=5 {
        let market = generate(&GeneratorConfig::small_random(seed));
        let result = enumerate(&market, MarketRules::Pcr).expect("oracle runs");
        print!(
            "seed {seed}: {} blocks, {} MIC, {}/{} admissible selections",
            market.block_bids.len(),
            market.mic_bids.len(),
            result.admissible.len(),
            result.evaluated
        );
        for objective in ObjectiveKind::ALL {
            let sol = clear(&market, &ClearingRequest::new(objective, MarketRules::Pcr))
                .expect("market clears");
            let cmp = compare(&result, objective, &sol);
            print!(
                " | {} {:.3} {}",
                objective.label(),
                cmp.oracle_value,
                if cmp.passed { "agrees" } else { "DIFFERS" }
            );
        }
        println!();
    }
}
