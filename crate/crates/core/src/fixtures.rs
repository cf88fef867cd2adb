//! Small hand-built markets used by tests, examples and docs.

use crate::core_model::{BlockBid, HourlyBid, Instance, MicBid, MicSuborder, Network};

fn single_cell() -> Network {
    Network::isolated(vec!["L1".into()], vec!["T1".into()])
}

fn hourly(id: &str, power: f64, limit_price: f64) -> HourlyBid {
    HourlyBid {
        id: id.into(),
        location: 0,
        period: 0,
        power,
        limit_price,
    }
}

/// Two demand steps and two indivisible sell blocks in one location and
/// period, price cap 500.
///
/// | bid | side | MW | limit |
/// |-----|------|----|-------|
/// | A   | buy  | 11 | 50    |
/// | B   | buy  | 14 | 10    |
/// | C   | sell block | 10 | 5  |
/// | D   | sell block | 20 | 10 |
///
/// Matching C clears at 50 with welfare 450, volume 10 and an opportunity
/// cost of 800 on D; matching D clears at 10 with welfare 440, volume 20 and
/// an opportunity cost of 50 on C.
pub fn toy_market() -> Instance {
    Instance::new(
        vec![hourly("A", 11.0, 50.0), hourly("B", 14.0, 10.0)],
        vec![
            BlockBid {
                id: "C".into(),
                location: 0,
                powers: vec![-10.0],
                limit_price: 5.0,
            },
            BlockBid {
                id: "D".into(),
                location: 0,
                powers: vec![-20.0],
                limit_price: 10.0,
            },
        ],
        vec![],
        single_cell(),
        500.0,
    )
    .expect("toy market is valid")
}

/// One buyer (10 MW at 30) and one seller (10 MW at 20): a convex market
/// whose equilibrium price is any value in `[20, 30]`.
pub fn crossing_pair() -> Instance {
    Instance::new(
        vec![hourly("buy", 10.0, 30.0), hourly("sell", -10.0, 20.0)],
        vec![],
        vec![],
        single_cell(),
        100.0,
    )
    .expect("crossing pair is valid")
}

/// A market where the welfare optimum needs a paradoxically accepted block:
/// a 10 MW sell block at 20 can only be matched against a buyer at 30 if a
/// cheap 5 MW hourly seller at 10 sets the price below the block's limit.
pub fn pab_market() -> Instance {
    Instance::new(
        vec![
            hourly("buyer", 12.0, 30.0),
            hourly("cheap", -5.0, 10.0),
        ],
        vec![BlockBid {
            id: "blk".into(),
            location: 0,
            powers: vec![-10.0],
            limit_price: 20.0,
        }],
        vec![],
        single_cell(),
        100.0,
    )
    .expect("pab market is valid")
}

/// A two-period market with one MIC producer whose fixed cost can only be
/// recovered if the price in both periods stays high.
pub fn mic_market(fixed_cost: f64) -> Instance {
    let net = Network::isolated(vec!["L1".into()], vec!["T1".into(), "T2".into()]);
    let hb = |id: &str, period: usize, power: f64, limit_price: f64| HourlyBid {
        id: id.into(),
        location: 0,
        period,
        power,
        limit_price,
    };
    Instance::new(
        vec![
            hb("d1", 0, 20.0, 60.0),
            hb("d2", 1, 20.0, 55.0),
            hb("s1", 0, -15.0, 40.0),
            hb("s2", 1, -15.0, 45.0),
        ],
        vec![],
        vec![MicBid {
            id: "mic".into(),
            fixed_cost,
            variable_cost: 5.0,
            suborders: vec![
                MicSuborder {
                    location: 0,
                    period: 0,
                    power: -10.0,
                    limit_price: 20.0,
                },
                MicSuborder {
                    location: 0,
                    period: 1,
                    power: -10.0,
                    limit_price: 25.0,
                },
            ],
        }],
        net,
        200.0,
    )
    .expect("mic market is valid")
}
