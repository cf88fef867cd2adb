use serde::{Deserialize, Serialize};

use crate::core_model::{ClearingSolution, Instance};
use crate::verifier::VerificationReport;

use super::format::FORMAT_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rules: String,
    pub objective: String,
    pub status: String,
    pub welfare: f64,
    pub traded_volume: f64,
    pub total_opportunity_cost: f64,
    pub solver_gap: f64,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidAcceptance {
    pub id: String,
    pub kind: String,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceEntry {
    pub location: String,
    pub period: String,
    pub price: f64,
}

/// Human-readable header followed by the full solution vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub summary: Summary,
    pub prices: Vec<PriceEntry>,
    pub acceptance: Vec<BidAcceptance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    pub solution: ClearingSolution,
}

impl SolutionFile {
    pub fn new(
        instance: &Instance,
        solution: &ClearingSolution,
        verification: Option<&VerificationReport>,
    ) -> Self {
        let net = &instance.network;
        let mut prices = Vec::new();
        for (l, row) in solution.prices.iter().enumerate() {
            for (t, p) in row.iter().enumerate() {
                prices.push(PriceEntry {
                    location: net.locations[l].clone(),
                    period: net.periods[t].clone(),
                    price: *p,
                });
            }
        }
        let mut acceptance = Vec::new();
        let mut push = |id: &str, kind: &str, a: f64| {
            acceptance.push(BidAcceptance {
                id: id.to_owned(),
                kind: kind.to_owned(),
                acceptance: a,
            })
        };
        for (b, x) in instance.hourly_bids.iter().zip(&solution.hourly_acceptance) {
            push(&b.id, "hourly", *x);
        }
        for (b, y) in instance.block_bids.iter().zip(&solution.block_acceptance) {
            push(&b.id, "block", *y);
        }
        for (c, u) in instance.mic_bids.iter().zip(&solution.mic_acceptance) {
            push(&c.id, "mic", *u);
        }
        SolutionFile {
            format_version: FORMAT_VERSION,
            summary: Summary {
                rules: solution.rules.to_string(),
                objective: solution.objective.to_string(),
                status: solution.diagnostics.status.clone(),
                welfare: solution.welfare,
                traded_volume: solution.traded_volume,
                total_opportunity_cost: solution.total_opportunity_cost,
                solver_gap: solution.solver_gap,
                wall_time_secs: solution.diagnostics.wall_time_secs,
            },
            prices,
            acceptance,
            verification: verification.cloned(),
            solution: solution.clone(),
        }
    }
}

/// Prices rounded to nine decimals, one `location,period,price` row each.
pub fn prices_csv(instance: &Instance, solution: &ClearingSolution) -> String {
    let net = &instance.network;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["location", "period", "price"]).expect("in-memory write");
    for (l, row) in solution.prices.iter().enumerate() {
        for (t, p) in row.iter().enumerate() {
            let rounded = (p * 1e9).round() / 1e9;
            // Avoid printing "-0.0".
            let rounded = if rounded == 0.0 { 0.0 } else { rounded };
            w.write_record([
                net.locations[l].as_str(),
                net.periods[t].as_str(),
                &format!("{rounded:?}"),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
