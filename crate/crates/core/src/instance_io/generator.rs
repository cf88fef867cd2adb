//! Seeded synthetic markets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core_model::{AtcLine, BlockBid, HourlyBid, Instance, MicBid, MicSuborder, Network};

/// Inclusive `[lo, hi]` range.
pub type Range = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub locations: usize,
    pub periods: usize,
    pub hourly_bids: usize,
    pub block_bids: usize,
    pub mic_bids: usize,
    pub price_cap: f64,
    /// Fraction of hourly bids on the demand side. Each `(location, period)`
    /// cell receives an equal share of steps on each side.
    pub demand_share: f64,
    pub demand_price: Range,
    /// Fraction of demand steps bid at the price cap, as price-taking load
    /// is bid in real order books.
    pub price_taking_share: f64,
    pub supply_price: Range,
    /// MW per hourly step.
    pub step_power: Range,
    pub block_price: Range,
    /// MW per covered period.
    pub block_power: Range,
    /// Number of consecutive periods a block covers.
    pub block_span: (usize, usize),
    /// Fraction of blocks that buy.
    pub block_buy_share: f64,
    pub mic_fixed_cost: Range,
    pub mic_variable_cost: Range,
    pub mic_price: Range,
    pub mic_power: Range,
    pub mic_suborders: (usize, usize),
    /// Per-period ATC capacity of each chain line, both directions.
    pub atc_capacity: Range,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 1,
            locations: 2,
            periods: 2,
            hourly_bids: 16,
            block_bids: 4,
            mic_bids: 2,
            price_cap: 3000.0,
            demand_share: 0.5,
            demand_price: (10.0, 120.0),
            price_taking_share: 0.0,
            supply_price: (0.0, 100.0),
            step_power: (1.0, 50.0),
            block_price: (10.0, 90.0),
            block_power: (5.0, 60.0),
            block_span: (1, 2),
            block_buy_share: 0.2,
            mic_fixed_cost: (0.0, 500.0),
            mic_variable_cost: (0.0, 40.0),
            mic_price: (0.0, 90.0),
            mic_power: (5.0, 40.0),
            mic_suborders: (1, 4),
            atc_capacity: (0.0, 40.0),
        }
    }
}

impl GeneratorConfig {
    /// Bid counts drawn from the seed: up to 20 hourly, 6 block and 2 MIC
    /// bids on two locations and two periods joined by one ATC line.
    pub fn small_random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_c0u64);
        GeneratorConfig {
            seed,
            hourly_bids: rng.gen_range(4..=20),
            block_bids: rng.gen_range(0..=6),
            mic_bids: rng.gen_range(0..=2),
            ..GeneratorConfig::default()
        }
    }

    /// 5000 hourly, 50 block and 20 MIC bids on four locations and 24
    /// periods, with a tenth of the demand steps price-taking.
    pub fn scale(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            locations: 4,
            periods: 24,
            hourly_bids: 5000,
            block_bids: 50,
            mic_bids: 20,
            block_span: (2, 8),
            mic_suborders: (4, 24),
            atc_capacity: (100.0, 1000.0),
            mic_fixed_cost: (0.0, 5000.0),
            price_taking_share: 0.1,
            ..GeneratorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let cap = self.price_cap;
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(format!("price_cap must be positive, got {cap}"));
        }
        let ranges = [
            ("demand_price", self.demand_price, true),
            ("supply_price", self.supply_price, true),
            ("block_price", self.block_price, true),
            ("mic_price", self.mic_price, true),
            ("mic_variable_cost", self.mic_variable_cost, true),
            ("step_power", self.step_power, false),
            ("block_power", self.block_power, false),
            ("mic_power", self.mic_power, false),
            ("mic_fixed_cost", self.mic_fixed_cost, false),
            ("atc_capacity", self.atc_capacity, false),
        ];
        for (name, (lo, hi), is_price) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(format!("{name}: invalid range [{lo}, {hi}]"));
            }
            if is_price && (lo < -cap || hi > cap) {
                return Err(format!("{name}: range [{lo}, {hi}] exceeds the price cap {cap}"));
            }
            if !is_price && lo < 0.0 {
                return Err(format!("{name}: must be nonnegative"));
            }
        }
        for (name, lo) in [
            ("step_power", self.step_power.0),
            ("block_power", self.block_power.0),
            ("mic_power", self.mic_power.0),
        ] {
            if lo <= 0.0 {
                return Err(format!("{name}: lower bound must be positive"));
            }
        }
        if self.locations == 0 || self.periods == 0 {
            return Err("need at least one location and one period".into());
        }
        let (a, b) = self.block_span;
        if a == 0 || a > b {
            return Err(format!("block_span: invalid range [{a}, {b}]"));
        }
        let (a, b) = self.mic_suborders;
        if a == 0 || a > b {
            return Err(format!("mic_suborders: invalid range [{a}, {b}]"));
        }
        for (name, s) in [
            ("demand_share", self.demand_share),
            ("price_taking_share", self.price_taking_share),
            ("block_buy_share", self.block_buy_share),
        ] {
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): Range, decimals: i32) -> f64 {
    let v = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let k = 10f64.powi(decimals);
    ((v * k).round() / k).clamp(lo, hi)
}

/// Builds a market from `config`. Identical configs give identical instances.
///
/// # Panics
/// If [`GeneratorConfig::validate`] fails.
pub fn generate(config: &GeneratorConfig) -> Instance {
    if let Err(e) = config.validate() {
        panic!("invalid generator config: {e}");
    }
    let c = config;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let locations: Vec<String> = (1..=c.locations).map(|l| format!("L{l}")).collect();
    let periods: Vec<String> = (1..=c.periods).map(|t| format!("T{t}")).collect();
    let cells = c.locations * c.periods;

    // Hourly curves: steps are dealt round-robin over cells, then each side
    // of each cell is sorted so demand prices fall and supply prices rise
    // along the bid order.
    let n_demand = (c.hourly_bids as f64 * c.demand_share).round() as usize;
    let mut per_cell: Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = vec![Default::default(); cells];
    for k in 0..c.hourly_bids {
        let cell = k % cells;
        let price_range = if k < n_demand { c.demand_price } else { c.supply_price };
        let mut step = (draw(&mut rng, c.step_power, 1), draw(&mut rng, price_range, 2));
        if k < n_demand && c.price_taking_share > 0.0 && rng.gen_bool(c.price_taking_share) {
            step.1 = c.price_cap;
        }
        if k < n_demand {
            per_cell[cell].0.push(step);
        } else {
            per_cell[cell].1.push(step);
        }
    }
    let mut hourly = Vec::with_capacity(c.hourly_bids);
    for (cell, (demand, supply)) in per_cell.iter_mut().enumerate() {
        let (location, period) = (cell / c.periods, cell % c.periods);
        demand.sort_by(|a, b| b.1.total_cmp(&a.1));
        supply.sort_by(|a, b| a.1.total_cmp(&b.1));
        for &(p, price) in demand.iter() {
            hourly.push((location, period, p, price));
        }
        for &(p, price) in supply.iter() {
            hourly.push((location, period, -p, price));
        }
    }
    let hourly: Vec<HourlyBid> = hourly
        .into_iter()
        .enumerate()
        .map(|(i, (location, period, power, limit_price))| HourlyBid {
            id: format!("H{}", i + 1),
            location,
            period,
            power,
            limit_price,
        })
        .collect();

    let mut blocks = Vec::with_capacity(c.block_bids);
    for j in 0..c.block_bids {
        let location = rng.gen_range(0..c.locations);
        let span = rng.gen_range(c.block_span.0..=c.block_span.1).min(c.periods);
        let start = rng.gen_range(0..=c.periods - span);
        let sign = if rng.gen_bool(c.block_buy_share) { 1.0 } else { -1.0 };
        let mut powers = vec![0.0; c.periods];
        for p in &mut powers[start..start + span] {
            *p = sign * draw(&mut rng, c.block_power, 1);
        }
        blocks.push(BlockBid {
            id: format!("B{}", j + 1),
            location,
            powers,
            limit_price: draw(&mut rng, c.block_price, 2),
        });
    }

    let mut mics = Vec::with_capacity(c.mic_bids);
    for m in 0..c.mic_bids {
        let n = rng.gen_range(c.mic_suborders.0..=c.mic_suborders.1);
        let location = rng.gen_range(0..c.locations);
        let mut cells: Vec<usize> = (0..c.periods).collect();
        cells.shuffle(&mut rng);
        let mut suborders = Vec::with_capacity(n);
        for k in 0..n {
            suborders.push(MicSuborder {
                location,
                period: cells[k % c.periods],
                power: -draw(&mut rng, c.mic_power, 1),
                limit_price: draw(&mut rng, c.mic_price, 2),
            });
        }
        suborders.sort_by_key(|s| s.period);
        mics.push(MicBid {
            id: format!("M{}", m + 1),
            fixed_cost: draw(&mut rng, c.mic_fixed_cost, 0),
            variable_cost: draw(&mut rng, c.mic_variable_cost, 2),
            suborders,
        });
    }

    let network = if c.locations > 1 {
        let lines = (0..c.locations - 1)
            .map(|l| {
                let cap: Vec<f64> = (0..c.periods).map(|_| draw(&mut rng, c.atc_capacity, 0)).collect();
                AtcLine {
                    from: l,
                    to: l + 1,
                    reverse_capacity: cap.clone(),
                    capacity: cap,
                }
            })
            .collect();
        Network::from_atc(locations, periods, lines)
    } else {
        Network::isolated(locations, periods)
    };

    Instance::new(hourly, blocks, mics, network, c.price_cap).expect("generated instances are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance_io::serialize;

    #[test]
    fn deterministic_per_seed() {
        let c = GeneratorConfig::default();
        assert_eq!(serialize(&generate(&c)), serialize(&generate(&c)));
        let other = GeneratorConfig { seed: 2, ..c.clone() };
        assert_ne!(serialize(&generate(&c)), serialize(&generate(&other)));
    }

    #[test]
    fn empty_counts() {
        let c = GeneratorConfig {
            hourly_bids: 0,
            block_bids: 0,
            mic_bids: 0,
            ..Default::default()
        };
        let inst = generate(&c);
        assert!(inst.hourly_bids.is_empty() && inst.block_bids.is_empty() && inst.mic_bids.is_empty());
    }

    #[test]
    fn curves_are_monotone_and_mics_sell() {
        let inst = generate(&GeneratorConfig {
            hourly_bids: 60,
            mic_bids: 5,
            ..Default::default()
        });
        for l in 0..2 {
            for t in 0..2 {
                let cell: Vec<_> = inst
                    .hourly_bids
                    .iter()
                    .filter(|b| b.location == l && b.period == t)
                    .collect();
                let demand: Vec<f64> = cell.iter().filter(|b| b.is_buy()).map(|b| b.limit_price).collect();
                let supply: Vec<f64> = cell.iter().filter(|b| !b.is_buy()).map(|b| b.limit_price).collect();
                assert!(demand.windows(2).all(|w| w[0] >= w[1]));
                assert!(supply.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        assert!(inst.mic_bids.iter().flat_map(|c| &c.suborders).all(|s| s.power < 0.0));
    }

    #[test]
    fn out_of_cap_range_is_rejected() {
        let c = GeneratorConfig {
            demand_price: (0.0, 5000.0),
            ..Default::default()
        };
        assert!(c.validate().unwrap_err().contains("demand_price"));
    }
}
