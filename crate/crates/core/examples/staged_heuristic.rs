//! Runs the staged MIC/block heuristic on a mid-sized generated market.

use std::time::Duration;

use pcr_clearing::engine::{staged, ClearingRequest};
use pcr_clearing::instance_io::{generate, GeneratorConfig};
use pcr_clearing::solver_backend::SolveOptions;

fn main() {
    let cfg = GeneratorConfig {
        seed: 3,
        locations: 3,
        periods: 12,
        hourly_bids: 600,
        block_bids: 20,
        mic_bids: 6,
        ..GeneratorConfig::default()
    };
    let market = generate(&cfg);
    let request = ClearingRequest::default()
        .with_options(SolveOptions::default().with_time_limit(Duration::from_secs(60)))
        .with_stage_budgets([Duration::from_secs(15); 3]);
    let sol = staged(&market, &request).expect("staged clearing runs");
    for st in &sol.diagnostics.stages {
        println!(
            "{:<17} objective {:>14.3} bound {:>14.3} {:<12} {:.2}s",
            st.name, st.objective, st.best_bound, st.status, st.wall_time_secs
        );
    }
    println!("final welfare {:.3}, gap {:.5}", sol.welfare, sol.solver_gap);
}
