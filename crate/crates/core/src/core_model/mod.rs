//! Bids, network, instances and cleared solutions.
//!
//! Sign convention: positive power buys, negative power sells. Welfare is
//! `sum lambda * P * x` over all executed orders.

mod aggregates;
mod bids;
mod instance;
mod network;
mod solution;

pub use aggregates::{
    block_surplus_terms, dual_objective, total_opportunity_cost, traded_volume,
    traded_volume_half_abs, welfare, BlockSurplusTerms,
};
pub(crate) use aggregates::{traded_volume_unchecked, welfare_unchecked};
pub use bids::{BlockBid, HourlyBid, MicBid, MicSuborder};
pub use instance::{Instance, ModelError};
pub use network::{AtcLine, ExportTerm, Network, NetworkRow};
pub use solution::{
    ClearingSolution, MarketRules, ObjectiveKind, SolveDiagnostics, StageRecord,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_market;

    fn one_cell() -> Network {
        Network::isolated(vec!["L1".into()], vec!["T1".into()])
    }

    #[test]
    fn mixed_sign_block_is_rejected() {
        let net = Network::isolated(vec!["L1".into()], vec!["T1".into(), "T2".into()]);
        let err = Instance::new(
            vec![],
            vec![BlockBid {
                id: "mixed".into(),
                location: 0,
                powers: vec![5.0, -5.0],
                limit_price: 10.0,
            }],
            vec![],
            net,
            100.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("mixed"), "{err}");
    }

    #[test]
    fn buy_suborder_is_rejected() {
        let err = Instance::new(
            vec![],
            vec![],
            vec![MicBid {
                id: "m".into(),
                fixed_cost: 0.0,
                variable_cost: 0.0,
                suborders: vec![MicSuborder {
                    location: 0,
                    period: 0,
                    power: 3.0,
                    limit_price: 1.0,
                }],
            }],
            one_cell(),
            100.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("suborder 0"), "{err}");
    }

    #[test]
    fn limit_price_above_cap_is_rejected() {
        let err = Instance::new(
            vec![HourlyBid {
                id: "h".into(),
                location: 0,
                period: 0,
                power: 1.0,
                limit_price: 101.0,
            }],
            vec![],
            vec![],
            one_cell(),
            100.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn negative_capacity_breaks_zero_trade() {
        let mut net = one_cell();
        net.basis.push("n".into());
        net.rows.push(NetworkRow {
            name: "r".into(),
            coeffs: vec![(0, 1.0)],
            capacity: -1.0,
        });
        assert!(Instance::new(vec![], vec![], vec![], net, 10.0).is_err());
    }

    #[test]
    fn toy_fixture_is_valid() {
        let toy = toy_market();
        toy.validate().unwrap();
        assert_eq!(toy.num_binaries(), 2);
    }
}
