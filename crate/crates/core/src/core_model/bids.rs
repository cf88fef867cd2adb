use serde::{Deserialize, Serialize};

/// A divisible single-period order. Positive power buys, negative power sells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyBid {
    pub id: String,
    pub location: usize,
    pub period: usize,
    /// MW, signed.
    pub power: f64,
    /// Currency per MW.
    pub limit_price: f64,
}

impl HourlyBid {
    pub fn is_buy(&self) -> bool {
        self.power > 0.0
    }
}

/// An indivisible multi-period order, executed fully or not at all.
///
/// `powers` is indexed by period and holds zeros for periods the block does
/// not cover. All nonzero entries share one sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockBid {
    pub id: String,
    pub location: usize,
    pub powers: Vec<f64>,
    pub limit_price: f64,
}

impl BlockBid {
    pub fn is_buy(&self) -> bool {
        self.powers.iter().any(|p| *p > 0.0)
    }

    /// Sum over periods of `|P^t|`.
    pub fn total_abs_power(&self) -> f64 {
        self.powers.iter().map(|p| p.abs()).sum()
    }

    /// Sum over periods of `P^t`.
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Nonzero `(period, power)` pairs.
    pub fn active_periods(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.powers
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| *p != 0.0)
    }
}

/// One hourly sell order belonging to a minimum-income bid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicSuborder {
    pub location: usize,
    pub period: usize,
    /// MW, strictly negative.
    pub power: f64,
    pub limit_price: f64,
}

/// A complex sell order: its suborders clear like hourly bids, but only if the
/// resulting income covers `fixed_cost + variable_cost * executed volume`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicBid {
    pub id: String,
    pub fixed_cost: f64,
    pub variable_cost: f64,
    pub suborders: Vec<MicSuborder>,
}
