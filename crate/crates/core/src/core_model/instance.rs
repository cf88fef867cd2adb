use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bids::{BlockBid, HourlyBid, MicBid};
use super::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("price cap must be strictly positive, got {0}")]
    PriceCap(f64),
    #[error("hourly bid {id}: {reason}")]
    HourlyBid { id: String, reason: String },
    #[error("block bid {id}: {reason}")]
    BlockBid { id: String, reason: String },
    #[error("MIC bid {id}: {reason}")]
    MicBid { id: String, reason: String },
    #[error("network: {0}")]
    Network(String),
    #[error("solution does not match instance: {0}")]
    DimensionMismatch(String),
    #[error("duplicate bid id {0}")]
    DuplicateId(String),
}

/// Bid population, network and price cap of one clearing problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub hourly_bids: Vec<HourlyBid>,
    pub block_bids: Vec<BlockBid>,
    pub mic_bids: Vec<MicBid>,
    pub network: Network,
    pub price_cap: f64,
}

impl Instance {
    /// Validates and wraps the parts.
    pub fn new(
        hourly_bids: Vec<HourlyBid>,
        block_bids: Vec<BlockBid>,
        mic_bids: Vec<MicBid>,
        network: Network,
        price_cap: f64,
    ) -> Result<Self, ModelError> {
        let inst = Instance {
            hourly_bids,
            block_bids,
            mic_bids,
            network,
            price_cap,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn empty(network: Network, price_cap: f64) -> Self {
        Instance {
            hourly_bids: Vec::new(),
            block_bids: Vec::new(),
            mic_bids: Vec::new(),
            network,
            price_cap,
        }
    }

    pub fn num_binaries(&self) -> usize {
        self.block_bids.len() + self.mic_bids.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let cap = self.price_cap;
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(ModelError::PriceCap(cap));
        }
        let nl = self.network.num_locations();
        let np = self.network.num_periods();
        let mut seen = std::collections::HashSet::new();
        let in_range = |price: f64| price.is_finite() && price.abs() <= cap;

        for b in &self.hourly_bids {
            let fail = |reason: &str| ModelError::HourlyBid {
                id: b.id.clone(),
                reason: reason.to_owned(),
            };
            if !seen.insert(b.id.clone()) {
                return Err(ModelError::DuplicateId(b.id.clone()));
            }
            if b.power == 0.0 || !b.power.is_finite() {
                return Err(fail("power must be nonzero and finite"));
            }
            if b.location >= nl || b.period >= np {
                return Err(fail("unknown location or period"));
            }
            if !in_range(b.limit_price) {
                return Err(fail("limit price outside [-price_cap, price_cap]"));
            }
        }
        for b in &self.block_bids {
            let fail = |reason: &str| ModelError::BlockBid {
                id: b.id.clone(),
                reason: reason.to_owned(),
            };
            if !seen.insert(b.id.clone()) {
                return Err(ModelError::DuplicateId(b.id.clone()));
            }
            if b.location >= nl {
                return Err(fail("unknown location"));
            }
            if b.powers.len() != np {
                return Err(fail("power profile length differs from period count"));
            }
            if b.powers.iter().any(|p| !p.is_finite()) {
                return Err(fail("non-finite power"));
            }
            let buys = b.powers.iter().any(|p| *p > 0.0);
            let sells = b.powers.iter().any(|p| *p < 0.0);
            if !buys && !sells {
                return Err(fail("all powers are zero"));
            }
            if buys && sells {
                return Err(fail("mixed-sign block (both buy and sell periods)"));
            }
            if !in_range(b.limit_price) {
                return Err(fail("limit price outside [-price_cap, price_cap]"));
            }
        }
        for c in &self.mic_bids {
            let fail = |reason: String| ModelError::MicBid {
                id: c.id.clone(),
                reason,
            };
            if !seen.insert(c.id.clone()) {
                return Err(ModelError::DuplicateId(c.id.clone()));
            }
            if c.suborders.is_empty() {
                return Err(fail("no suborders".into()));
            }
            if !(c.fixed_cost >= 0.0 && c.fixed_cost.is_finite()) {
                return Err(fail("fixed cost must be finite and >= 0".into()));
            }
            if !(c.variable_cost >= 0.0 && c.variable_cost.is_finite()) {
                return Err(fail("variable cost must be finite and >= 0".into()));
            }
            for (h, s) in c.suborders.iter().enumerate() {
                if !(s.power < 0.0 && s.power.is_finite()) {
                    return Err(fail(format!(
                        "suborder {h} must sell (power < 0), got {}",
                        s.power
                    )));
                }
                if s.location >= nl || s.period >= np {
                    return Err(fail(format!("suborder {h}: unknown location or period")));
                }
                if !in_range(s.limit_price) {
                    return Err(fail(format!(
                        "suborder {h}: limit price outside [-price_cap, price_cap]"
                    )));
                }
            }
        }
        self.validate_network()
    }

    fn validate_network(&self) -> Result<(), ModelError> {
        let net = &self.network;
        let k = net.basis_size();
        for e in &net.export_coeffs {
            if e.basis >= k || e.location >= net.num_locations() || e.period >= net.num_periods() {
                return Err(ModelError::Network(format!(
                    "export coefficient references unknown index (basis {}, location {}, period {})",
                    e.basis, e.location, e.period
                )));
            }
        }
        for row in &net.rows {
            if row.coeffs.iter().any(|(kk, a)| *kk >= k || !a.is_finite()) {
                return Err(ModelError::Network(format!("row {} is malformed", row.name)));
            }
            // n = 0 must stay feasible so that the all-rejected outcome exists.
            if !(row.capacity >= 0.0) {
                return Err(ModelError::Network(format!(
                    "row {} has negative capacity {}; zero trade would be infeasible",
                    row.name, row.capacity
                )));
            }
        }
        if let Some(lines) = &net.atc {
            for (i, l) in lines.iter().enumerate() {
                if l.from >= net.num_locations() || l.to >= net.num_locations() || l.from == l.to {
                    return Err(ModelError::Network(format!("ATC line {i} has bad endpoints")));
                }
                if l.capacity.len() != net.num_periods()
                    || l.reverse_capacity.len() != net.num_periods()
                {
                    return Err(ModelError::Network(format!(
                        "ATC line {i} capacity profile length differs from period count"
                    )));
                }
            }
        }
        Ok(())
    }
}
