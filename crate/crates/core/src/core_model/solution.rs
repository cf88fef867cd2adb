use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::instance::{Instance, ModelError};

/// Which deviations from a uniform-price equilibrium are tolerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketRules {
    /// Paradoxically rejected blocks allowed, paradoxically accepted blocks forbidden.
    Pcr,
    /// Paradoxically accepted blocks allowed and compensated through `d^a`.
    Umfs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Welfare,
    Volume,
    MinOpportunityCost,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::Welfare,
        ObjectiveKind::Volume,
        ObjectiveKind::MinOpportunityCost,
    ];

    pub fn maximizes(self) -> bool {
        !matches!(self, ObjectiveKind::MinOpportunityCost)
    }

    /// Short label used in summaries (`welfare`, `volume`, `oc`).
    pub fn label(self) -> &'static str {
        match self {
            ObjectiveKind::Welfare => "welfare",
            ObjectiveKind::Volume => "volume",
            ObjectiveKind::MinOpportunityCost => "oc",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Welfare => "welfare",
            ObjectiveKind::Volume => "volume",
            ObjectiveKind::MinOpportunityCost => "min-oc",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "welfare" => Ok(ObjectiveKind::Welfare),
            "volume" => Ok(ObjectiveKind::Volume),
            "min-oc" | "min_oc" | "oc" => Ok(ObjectiveKind::MinOpportunityCost),
            other => Err(format!("unknown objective {other:?}")),
        }
    }
}

impl fmt::Display for MarketRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarketRules::Pcr => "pcr",
            MarketRules::Umfs => "umfs",
        })
    }
}

impl FromStr for MarketRules {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcr" => Ok(MarketRules::Pcr),
            "umfs" => Ok(MarketRules::Umfs),
            other => Err(format!("unknown rules {other:?}")),
        }
    }
}

/// One stage of a staged pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub objective: f64,
    pub best_bound: f64,
    pub status: String,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub status: String,
    pub objective: f64,
    pub best_bound: f64,
    pub node_count: u64,
    pub wall_time_secs: f64,
    pub stages: Vec<StageRecord>,
}

/// Complete primal and dual state of a cleared market.
///
/// Per-bid vectors follow the instance's bid order. Binary decisions are
/// stored as reals so that tampered or relaxed points can be represented;
/// a value above one half counts as accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingSolution {
    pub rules: MarketRules,
    pub objective: ObjectiveKind,

    pub hourly_acceptance: Vec<f64>,
    pub suborder_acceptance: Vec<Vec<f64>>,
    pub block_acceptance: Vec<f64>,
    pub mic_acceptance: Vec<f64>,
    pub flows: Vec<f64>,

    /// `prices[location][period]`.
    pub prices: Vec<Vec<f64>>,
    pub network_duals: Vec<f64>,
    pub hourly_surplus: Vec<f64>,
    pub block_surplus: Vec<f64>,
    pub mic_surplus: Vec<f64>,
    pub suborder_surplus: Vec<Vec<f64>>,
    /// `d^a_j`, zero for rejected blocks.
    pub block_loss_bound: Vec<f64>,
    /// `d^r_j`, zero for accepted blocks.
    pub block_opportunity_bound: Vec<f64>,
    /// `du^r_c`, zero for accepted MIC bids. `du^a_c` is identically zero.
    pub mic_rejection_bound: Vec<f64>,

    pub welfare: f64,
    pub traded_volume: f64,
    pub total_opportunity_cost: f64,
    pub solver_gap: f64,
    pub diagnostics: SolveDiagnostics,
}

impl ClearingSolution {
    /// The all-rejected point with every price set to `price`.
    pub fn zeros(instance: &Instance, price: f64) -> Self {
        let net = &instance.network;
        let sub: Vec<Vec<f64>> = instance
            .mic_bids
            .iter()
            .map(|c| vec![0.0; c.suborders.len()])
            .collect();
        ClearingSolution {
            rules: MarketRules::Pcr,
            objective: ObjectiveKind::Welfare,
            hourly_acceptance: vec![0.0; instance.hourly_bids.len()],
            suborder_acceptance: sub.clone(),
            block_acceptance: vec![0.0; instance.block_bids.len()],
            mic_acceptance: vec![0.0; instance.mic_bids.len()],
            flows: vec![0.0; net.basis_size()],
            prices: vec![vec![price; net.num_periods()]; net.num_locations()],
            network_duals: vec![0.0; net.rows.len()],
            hourly_surplus: vec![0.0; instance.hourly_bids.len()],
            block_surplus: vec![0.0; instance.block_bids.len()],
            mic_surplus: vec![0.0; instance.mic_bids.len()],
            suborder_surplus: sub,
            block_loss_bound: vec![0.0; instance.block_bids.len()],
            block_opportunity_bound: vec![0.0; instance.block_bids.len()],
            mic_rejection_bound: vec![0.0; instance.mic_bids.len()],
            welfare: 0.0,
            traded_volume: 0.0,
            total_opportunity_cost: 0.0,
            solver_gap: 0.0,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    pub fn block_accepted(&self, j: usize) -> bool {
        self.block_acceptance[j] > 0.5
    }

    pub fn mic_accepted(&self, c: usize) -> bool {
        self.mic_acceptance[c] > 0.5
    }

    pub fn price(&self, location: usize, period: usize) -> f64 {
        self.prices[location][period]
    }

    /// Checks every vector length against the instance.
    pub fn check_dimensions(&self, instance: &Instance) -> Result<(), ModelError> {
        let net = &instance.network;
        let mismatch = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(ModelError::DimensionMismatch(format!(
                    "{what}: expected {want}, got {got}"
                )))
            }
        };
        let ni = instance.hourly_bids.len();
        let nj = instance.block_bids.len();
        let nc = instance.mic_bids.len();
        mismatch("hourly acceptance", self.hourly_acceptance.len(), ni)?;
        mismatch("hourly surplus", self.hourly_surplus.len(), ni)?;
        mismatch("block acceptance", self.block_acceptance.len(), nj)?;
        mismatch("block surplus", self.block_surplus.len(), nj)?;
        mismatch("block loss bound", self.block_loss_bound.len(), nj)?;
        mismatch("block opportunity bound", self.block_opportunity_bound.len(), nj)?;
        mismatch("mic acceptance", self.mic_acceptance.len(), nc)?;
        mismatch("mic surplus", self.mic_surplus.len(), nc)?;
        mismatch("mic rejection bound", self.mic_rejection_bound.len(), nc)?;
        mismatch("suborder acceptance", self.suborder_acceptance.len(), nc)?;
        mismatch("suborder surplus", self.suborder_surplus.len(), nc)?;
        for (c, mic) in instance.mic_bids.iter().enumerate() {
            mismatch("suborder acceptance", self.suborder_acceptance[c].len(), mic.suborders.len())?;
            mismatch("suborder surplus", self.suborder_surplus[c].len(), mic.suborders.len())?;
        }
        mismatch("flows", self.flows.len(), net.basis_size())?;
        mismatch("network duals", self.network_duals.len(), net.rows.len())?;
        mismatch("price locations", self.prices.len(), net.num_locations())?;
        for row in &self.prices {
            mismatch("price periods", row.len(), net.num_periods())?;
        }
        Ok(())
    }
}
