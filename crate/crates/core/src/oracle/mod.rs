//! Exhaustive selection enumeration for small instances.
//!
//! Each block/MIC selection turns clearing into a pair of LPs. A selection is
//! admissible when some optimal primal point and some optimal dual point
//! satisfy the MIC income rows jointly (and, under PCR rules, carry no block
//! loss). The optimum of each objective is then an extreme over that joint
//! polytope, maximized or minimized over admissible selections.

mod lp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_model::{ClearingSolution, Instance, MarketRules, ModelError, ObjectiveKind};
use crate::solver_backend::SolverError;

/// Largest `|J| + |C|` accepted by [`enumerate`].
pub const ORACLE_GUARD: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{binaries} block and MIC bids exceed the enumeration guard of {guard}")]
    GuardExceeded { binaries: usize, guard: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub blocks: Vec<bool>,
    pub mics: Vec<bool>,
}

impl Selection {
    /// Bit `j` is block `j`; bits above `|J|` are MIC bids.
    pub fn from_index(index: u64, blocks: usize, mics: usize) -> Self {
        Selection {
            blocks: (0..blocks).map(|j| index >> j & 1 == 1).collect(),
            mics: (0..mics).map(|c| index >> (blocks + c) & 1 == 1).collect(),
        }
    }

    /// Ids of accepted blocks and MIC bids, in instance order.
    pub fn accepted_ids(&self, instance: &Instance) -> Vec<String> {
        let blocks = instance
            .block_bids
            .iter()
            .zip(&self.blocks)
            .filter(|(_, on)| **on)
            .map(|(b, _)| b.id.clone());
        let mics = instance
            .mic_bids
            .iter()
            .zip(&self.mics)
            .filter(|(_, on)| **on)
            .map(|(c, _)| c.id.clone());
        blocks.chain(mics).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub index: u64,
    pub selection: Selection,
    pub welfare: f64,
    pub max_volume: f64,
    pub min_opportunity_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptimum {
    pub objective: ObjectiveKind,
    pub value: f64,
    pub selection_index: u64,
    pub witness: ClearingSolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionOracleResult {
    pub rules: MarketRules,
    pub evaluated: u64,
    /// Sorted by selection index.
    pub admissible: Vec<SelectionRecord>,
    /// One entry per objective, in [`ObjectiveKind::ALL`] order.
    pub optima: Vec<OracleOptimum>,
}

impl SelectionOracleResult {
    pub fn optimum(&self, objective: ObjectiveKind) -> &OracleOptimum {
        self.optima
            .iter()
            .find(|o| o.objective == objective)
            .expect("every objective has an optimum")
    }

    pub fn is_admissible(&self, selection: &Selection) -> bool {
        self.admissible.iter().any(|r| &r.selection == selection)
    }
}

struct Evaluated {
    record: SelectionRecord,
    volume_witness: ClearingSolution,
    oc_witness: ClearingSolution,
}

fn evaluate(
    instance: &Instance,
    rules: MarketRules,
    index: u64,
) -> Result<Option<Evaluated>, SolverError> {
    let sel = Selection::from_index(index, instance.block_bids.len(), instance.mic_bids.len());
    let Some(w) = lp::fixed_welfare(instance, &sel)? else {
        return Ok(None);
    };
    let Some(vol) = lp::joint_extreme(instance, &sel, rules, w, ObjectiveKind::Volume)? else {
        return Ok(None);
    };
    let oc = if sel.blocks.iter().any(|b| !b) {
        match lp::joint_extreme(instance, &sel, rules, w, ObjectiveKind::MinOpportunityCost)? {
            Some(s) => s,
            // Same polytope as the volume LP; only numerical trouble lands here.
            None => vol.clone(),
        }
    } else {
        let mut s = vol.clone();
        s.objective = ObjectiveKind::MinOpportunityCost;
        s
    };
    Ok(Some(Evaluated {
        record: SelectionRecord {
            index,
            selection: sel,
            welfare: w,
            max_volume: vol.traded_volume,
            min_opportunity_cost: oc.total_opportunity_cost,
        },
        volume_witness: vol,
        oc_witness: oc,
    }))
}

/// Solves every selection and reports the admissible ones with each
/// objective's optimum and a witness solution.
pub fn enumerate(
    instance: &Instance,
    rules: MarketRules,
) -> Result<SelectionOracleResult, OracleError> {
    instance.validate()?;
    let binaries = instance.num_binaries();
    if binaries > ORACLE_GUARD {
        return Err(OracleError::GuardExceeded {
            binaries,
            guard: ORACLE_GUARD,
        });
    }
    let total = 1u64 << binaries;
    let evaluated: Vec<Evaluated> = (0..total)
        .into_par_iter()
        .map(|i| evaluate(instance, rules, i))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    if evaluated.is_empty() {
        return Err(OracleError::Solver(SolverError::Backend(
            "no admissible selection found; the all-rejected selection should always be".into(),
        )));
    }
    let best = |key: &dyn Fn(&SelectionRecord) -> f64, maximize: bool| -> &Evaluated {
        let mut best = &evaluated[0];
        for e in &evaluated[1..] {
            let (a, b) = (key(&e.record), key(&best.record));
            if (maximize && a > b) || (!maximize && a < b) {
                best = e;
            }
        }
        best
    };
    let w = best(&|r| r.welfare, true);
    let v = best(&|r| r.max_volume, true);
    let o = best(&|r| r.min_opportunity_cost, false);
    let mut welfare_witness = w.volume_witness.clone();
    welfare_witness.objective = ObjectiveKind::Welfare;
    let optima = vec![
        OracleOptimum {
            objective: ObjectiveKind::Welfare,
            value: w.record.welfare,
            selection_index: w.record.index,
            witness: welfare_witness,
        },
        OracleOptimum {
            objective: ObjectiveKind::Volume,
            value: v.record.max_volume,
            selection_index: v.record.index,
            witness: v.volume_witness.clone(),
        },
        OracleOptimum {
            objective: ObjectiveKind::MinOpportunityCost,
            value: o.record.min_opportunity_cost,
            selection_index: o.record.index,
            witness: o.oc_witness.clone(),
        },
    ];
    Ok(SelectionOracleResult {
        rules,
        evaluated: total,
        admissible: evaluated.into_iter().map(|e| e.record).collect(),
        optima,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub passed: bool,
    pub oracle_value: f64,
    pub milp_value: f64,
    pub tolerance: f64,
    pub details: String,
}

/// Value of `objective` at `solution`, as the oracle measures it.
pub fn objective_value(objective: ObjectiveKind, solution: &ClearingSolution) -> f64 {
    match objective {
        ObjectiveKind::Welfare => solution.welfare,
        ObjectiveKind::Volume => solution.traded_volume,
        ObjectiveKind::MinOpportunityCost => solution.total_opportunity_cost,
    }
}

/// Compares a MILP solution against the enumerated optimum within
/// `1e-6 * (1 + |optimum|)`.
pub fn cross_check(
    instance: &Instance,
    rules: MarketRules,
    objective: ObjectiveKind,
    milp_solution: &ClearingSolution,
) -> Result<CrossCheck, OracleError> {
    let result = enumerate(instance, rules)?;
    Ok(compare(&result, objective, milp_solution))
}

/// [`cross_check`] against an already enumerated result.
pub fn compare(
    result: &SelectionOracleResult,
    objective: ObjectiveKind,
    milp_solution: &ClearingSolution,
) -> CrossCheck {
    let opt = result.optimum(objective);
    let milp = objective_value(objective, milp_solution);
    let tolerance = 1e-6 * (1.0 + opt.value.abs());
    let passed = (milp - opt.value).abs() <= tolerance;
    CrossCheck {
        passed,
        oracle_value: opt.value,
        milp_value: milp,
        tolerance,
        details: format!(
            "{} under {}: oracle {} (selection #{}), milp {}",
            objective, result.rules, opt.value, opt.selection_index, milp
        ),
    }
}
