use serde::{Deserialize, Serialize};

use crate::core_model::{BlockBid, Instance, MicBid};

use super::BuildError;

/// Big-M constants of one instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BigMSet {
    /// `M_j`: cap on the opportunity cost `d^r_j` of a rejected block.
    pub block: Vec<f64>,
    /// Cap on the loss `d^a_j` of an accepted block.
    pub block_loss: Vec<f64>,
    /// `M_c`: cap on `sum_h s_hc` of a rejected MIC bid.
    pub mic: Vec<f64>,
    /// `M̄_c = F_c`: deactivates the income row of a rejected MIC bid.
    pub mic_income: Vec<f64>,
}

impl BigMSet {
    pub fn for_instance(instance: &Instance) -> Result<Self, BuildError> {
        let cap = instance.price_cap;
        let mut set = BigMSet::default();
        for b in &instance.block_bids {
            set.block.push(compute_big_m_block(b, cap)?);
            set.block_loss.push(compute_loss_cap_block(b, cap)?);
        }
        for c in &instance.mic_bids {
            set.mic.push(compute_big_m_mic(c, cap));
            set.mic_income.push(c.fixed_cost);
        }
        Ok(set)
    }
}

fn check_limit(block: &BlockBid, price_cap: f64) -> Result<(), BuildError> {
    if block.limit_price.abs() > price_cap {
        return Err(BuildError::LimitOutsideRange {
            id: block.id.clone(),
            limit: block.limit_price,
            cap: price_cap,
        });
    }
    Ok(())
}

/// Largest opportunity cost a block can carry for prices in `[-cap, cap]`.
///
/// Sell: `(cap - lambda) * sum |P|`. Buy: `(lambda + cap) * sum |P|`.
pub fn compute_big_m_block(block: &BlockBid, price_cap: f64) -> Result<f64, BuildError> {
    check_limit(block, price_cap)?;
    let k = if block.is_buy() {
        block.limit_price + price_cap
    } else {
        price_cap - block.limit_price
    };
    Ok(k * block.total_abs_power())
}

/// Largest loss an accepted block can make for prices in `[-cap, cap]`.
///
/// Sell: `(lambda + cap) * sum |P|`. Buy: `(cap - lambda) * sum |P|`.
pub fn compute_loss_cap_block(block: &BlockBid, price_cap: f64) -> Result<f64, BuildError> {
    check_limit(block, price_cap)?;
    let k = if block.is_buy() {
        price_cap - block.limit_price
    } else {
        block.limit_price + price_cap
    };
    Ok(k * block.total_abs_power())
}

/// Upper bound on `sum_h s_hc` at any dual point with prices in `[-cap, cap]`.
pub fn compute_big_m_mic(mic: &MicBid, price_cap: f64) -> f64 {
    mic.suborders
        .iter()
        .map(|s| s.power.abs() * (price_cap + s.limit_price.abs()))
        .sum()
}
