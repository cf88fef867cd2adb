//! Construction of the primal-dual clearing models.
//!
//! [`build_umfs`] produces the uniform market clearing feasible set: the
//! welfare problem's primal rows, the dual rows of its fixed-selection LP,
//! big-M dispatchers for `d^a`, `d^r`, `du^r`, and a single row forcing
//! primal welfare to be at least the dual objective. By weak duality that row
//! binds, which enforces every complementarity condition without auxiliary
//! binaries. [`add_mic_constraints`] adds the exact linear form of the
//! minimum income condition and [`restrict_to_pcr`] turns the set into
//! PCR-FS.

mod big_m;
mod lp_format;
mod model;
mod objective;
mod umfs;

use thiserror::Error;

use crate::core_model::{Instance, MarketRules, ModelError, ObjectiveKind};

pub use big_m::{compute_big_m_block, compute_big_m_mic, compute_loss_cap_block, BigMSet};
pub use lp_format::to_lp_string;
pub use model::{
    BranchDirection, BranchHint, ColId, Column, ColumnKind, ColumnRoles, MilpModel, ModelForm,
    Row, RowRoles, Sense,
};
pub use objective::set_objective;
pub use umfs::{
    add_mic_constraints, build_primal, build_umfs, forbid_paradoxical_acceptance, restrict_to_pcr,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("block {id}: limit price {limit} outside [-{cap}, {cap}]")]
    LimitOutsideRange { id: String, limit: f64, cap: f64 },
    #[error("opportunity-cost objective needs the d^r columns, which PCR-FS eliminates")]
    MinOcNeedsOpportunityColumns,
    #[error("wrong model form: {0}")]
    WrongForm(&'static str),
}

/// The model a clearing run solves for `rules` and `objective`.
///
/// PCR rules use PCR-FS, except for the opportunity-cost objective which
/// keeps the `d^r` columns and fixes `d^a = 0` instead.
pub fn build_market_model(
    instance: &Instance,
    rules: MarketRules,
    objective: ObjectiveKind,
) -> Result<MilpModel, BuildError> {
    let model = add_mic_constraints(build_umfs(instance)?, instance);
    let model = match (rules, objective) {
        (MarketRules::Umfs, _) => model,
        (MarketRules::Pcr, ObjectiveKind::MinOpportunityCost) => {
            forbid_paradoxical_acceptance(model)?
        }
        (MarketRules::Pcr, _) => restrict_to_pcr(model)?,
    };
    set_objective(model, instance, objective)
}
