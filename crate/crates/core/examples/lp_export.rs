//! Prints the PCR welfare model of the toy market in LP format.

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::fixtures::toy_market;
use pcr_clearing::milp_builder::{build_market_model, to_lp_string};

fn main() {
    let model = build_market_model(&toy_market(), MarketRules::Pcr, ObjectiveKind::Welfare)
        .expect("toy model builds");
    println!(
        "\\ {} columns, {} rows, {} binaries",
        model.columns.len(),
        model.rows.len(),
        model.num_binaries()
    );
    print!("{}", to_lp_string(&model));
}
