//! Welfare lost by forbidding paradoxically accepted blocks.

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{compare_pab_models, ClearingRequest};
use pcr_clearing::fixtures::pab_market;

fn main() {
    let market = pab_market();
    let cmp = compare_pab_models(&market, &ClearingRequest::new(ObjectiveKind::Welfare, MarketRules::Pcr))
        .expect("both rule sets clear");
    for (name, sol, residual) in [
        ("pcr", &cmp.pcr, cmp.pcr_residual),
        ("umfs", &cmp.umfs, cmp.umfs_residual),
    ] {
        println!(
            "{name:<5} block accepted={} price={} welfare={} loss bound={} residual={residual:.1e}",
            sol.block_accepted(0),
            sol.prices[0][0],
            sol.welfare,
            sol.block_loss_bound[0]
        );
    }
    println!("welfare gain from paradoxical acceptance: {}", cmp.welfare_gain());
}
