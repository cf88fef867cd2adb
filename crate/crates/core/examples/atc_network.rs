//! Two zones joined by a congested interconnector split into two prices.

use pcr_clearing::core_model::{AtcLine, HourlyBid, Instance, MarketRules, Network, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};

fn bid(id: &str, location: usize, power: f64, limit_price: f64) -> HourlyBid {
    HourlyBid {
        id: id.into(),
        location,
        period: 0,
        power,
        limit_price,
    }
}

fn main() {
    for capacity in [0.0, 5.0, 50.0] {
        let network = Network::from_atc(
            vec!["North".into(), "South".into()],
            vec!["H1".into()],
            vec![AtcLine {
                from: 0,
                to: 1,
                capacity: vec![capacity],
                reverse_capacity: vec![capacity],
            }],
        );
        let market = Instance::new(
            vec![
                bid("hydro", 0, -40.0, 15.0),
                bid("north load", 0, 10.0, 80.0),
                bid("gas", 1, -40.0, 60.0),
                bid("south load", 1, 30.0, 90.0),
            ],
            vec![],
            vec![],
            network,
            500.0,
        )
        .expect("valid market");
        let sol = clear(&market, &ClearingRequest::new(ObjectiveKind::Welfare, MarketRules::Pcr))
            .expect("market clears");
        let imports = market.network.net_imports(&sol.flows);
        println!(
            "ATC {capacity:>4}: North {:>5.1}  South {:>5.1}  South imports {:>5.1}  welfare {:.1}",
            sol.prices[0][0], sol.prices[1][0], imports[1][0], sol.welfare
        );
    }
}
