//! Clearing pipelines.
//!
//! Every pipeline solves a market model from
//! [`build_market_model`](crate::milp_builder::build_market_model), then fixes
//! the selection it found and re-solves the model as an LP so that prices and
//! surpluses come from an exact vertex rather than from the MIP search.

mod assemble;
mod staged;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_model::{
    dual_objective, welfare_unchecked, ClearingSolution, Instance, MarketRules, ObjectiveKind,
    StageRecord,
};
use crate::milp_builder::{build_market_model, BuildError, MilpModel, Sense};
use crate::solver_backend::{
    backend_from_name, binary_assignment, solve_mip_with, SolveOptions, SolveOutcome,
    SolveStatus, SolverBackend, SolverError,
};

pub use staged::{heuristic_mic_block, heuristic_min_oc, heuristic_volume, staged};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl EngineError {
    /// True when the solver ran out of time before finding any incumbent.
    pub fn is_time_limit(&self) -> bool {
        matches!(
            self,
            EngineError::Solver(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution))
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingRequest {
    pub objective: ObjectiveKind,
    pub rules: MarketRules,
    /// Time limits of the three heuristic stages.
    pub stage_budgets: [Duration; 3],
    pub options: SolveOptions,
    pub backend: String,
}

impl Default for ClearingRequest {
    fn default() -> Self {
        ClearingRequest {
            objective: ObjectiveKind::Welfare,
            rules: MarketRules::Pcr,
            stage_budgets: [
                Duration::from_secs(900),
                Duration::from_secs(900),
                Duration::from_secs(1200),
            ],
            options: SolveOptions::default(),
            backend: "highs".into(),
        }
    }
}

impl ClearingRequest {
    pub fn new(objective: ObjectiveKind, rules: MarketRules) -> Self {
        ClearingRequest {
            objective,
            rules,
            ..ClearingRequest::default()
        }
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_stage_budgets(mut self, budgets: [Duration; 3]) -> Self {
        self.stage_budgets = budgets;
        self
    }

    pub(crate) fn backend(&self) -> Result<Box<dyn SolverBackend>, SolverError> {
        backend_from_name(&self.backend)
    }
}

/// Builds, solves and prices one market model.
pub fn clear(instance: &Instance, request: &ClearingRequest) -> Result<ClearingSolution, EngineError> {
    let backend = request.backend()?;
    let model = build_market_model(instance, request.rules, request.objective)?;
    let started = Instant::now();
    let outcome = solve_mip_with(backend.as_ref(), &model, &request.options)?;
    let record = stage_record("single", &model, &outcome, started);
    finalize(backend.as_ref(), instance, &model, &outcome, request, vec![record])
}

pub(crate) fn stage_record(
    name: &str,
    target: &MilpModel,
    outcome: &SolveOutcome,
    started: Instant,
) -> StageRecord {
    StageRecord {
        name: name.to_owned(),
        objective: target.objective_value(&outcome.columns),
        best_bound: outcome.best_bound,
        status: outcome.status.to_string(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    }
}

/// Re-solves the selection in `outcome` as an LP and reads the solution.
pub(crate) fn finalize(
    backend: &dyn SolverBackend,
    instance: &Instance,
    model: &MilpModel,
    outcome: &SolveOutcome,
    request: &ClearingRequest,
    stages: Vec<StageRecord>,
) -> Result<ClearingSolution, EngineError> {
    let assignment = binary_assignment(model, &outcome.columns);
    let lp_options = SolveOptions {
        time_limit: None,
        warm_start: None,
        honor_branching_hints: false,
        ..request.options.clone()
    };
    let columns = match backend.resolve_duals(model, &assignment, &lp_options) {
        Ok(lp) => lp.columns,
        Err(e) => {
            log::warn!("fixed-selection LP failed ({e}); using MIP values");
            outcome.columns.clone()
        }
    };
    let mut sol = assemble::assemble(instance, model, &columns, request.rules, request.objective);
    let mut outcome = outcome.clone();
    let lp_obj = model.objective_value(&columns);
    let improved = match model.sense {
        Sense::Maximize => lp_obj > outcome.objective,
        Sense::Minimize => lp_obj < outcome.objective,
    };
    if improved {
        outcome.objective = lp_obj;
    }
    sol.solver_gap = outcome.relative_gap();
    sol.diagnostics = assemble::diagnostics(&outcome, stages);
    Ok(sol)
}

/// `W - (sum s_i + sum s_j + sum s_c + sum w v - sum d^a)`.
pub fn decomposition_residual(instance: &Instance, solution: &ClearingSolution) -> f64 {
    welfare_unchecked(instance, solution) - dual_objective(instance, solution)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PabComparison {
    pub pcr: ClearingSolution,
    pub umfs: ClearingSolution,
    pub pcr_residual: f64,
    pub umfs_residual: f64,
}

impl PabComparison {
    /// Welfare gained by allowing paradoxically accepted blocks.
    pub fn welfare_gain(&self) -> f64 {
        self.umfs.welfare - self.pcr.welfare
    }
}

/// Welfare clearing under both rule sets, with the surplus decomposition
/// residual of each.
pub fn compare_pab_models(
    instance: &Instance,
    request: &ClearingRequest,
) -> Result<PabComparison, EngineError> {
    let mut req = request.clone();
    req.objective = ObjectiveKind::Welfare;
    req.rules = MarketRules::Pcr;
    let pcr = clear(instance, &req)?;
    req.rules = MarketRules::Umfs;
    let umfs = clear(instance, &req)?;
    Ok(PabComparison {
        pcr_residual: decomposition_residual(instance, &pcr),
        umfs_residual: decomposition_residual(instance, &umfs),
        pcr,
        umfs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{crossing_pair, pab_market, toy_market};
    use crate::verifier::{verify_equilibrium, Tolerances};

    fn run(inst: &Instance, obj: ObjectiveKind, rules: MarketRules) -> ClearingSolution {
        let s = clear(inst, &ClearingRequest::new(obj, rules)).unwrap();
        let rep = verify_equilibrium(inst, &s, &Tolerances::default());
        assert!(rep.passed, "{obj} {rules}: {rep}");
        s
    }

    #[test]
    fn toy_welfare() {
        let s = run(&toy_market(), ObjectiveKind::Welfare, MarketRules::Pcr);
        assert!((s.welfare - 450.0).abs() < 1e-6);
        assert!((s.traded_volume - 10.0).abs() < 1e-6);
        assert!((s.prices[0][0] - 50.0).abs() < 1e-6);
        assert!((s.total_opportunity_cost - 800.0).abs() < 1e-6);
    }

    #[test]
    fn toy_volume() {
        let s = run(&toy_market(), ObjectiveKind::Volume, MarketRules::Pcr);
        assert!((s.traded_volume - 20.0).abs() < 1e-6);
        assert!((s.welfare - 440.0).abs() < 1e-6);
        assert!((s.prices[0][0] - 10.0).abs() < 1e-6);
        assert!((s.total_opportunity_cost - 50.0).abs() < 1e-6);
    }

    #[test]
    fn toy_min_oc() {
        let s = run(&toy_market(), ObjectiveKind::MinOpportunityCost, MarketRules::Pcr);
        assert!((s.total_opportunity_cost - 50.0).abs() < 1e-6);
    }

    #[test]
    fn crossing_pair_clears_fully() {
        let s = run(&crossing_pair(), ObjectiveKind::Welfare, MarketRules::Pcr);
        assert_eq!(s.hourly_acceptance, vec![1.0, 1.0]);
        assert!((s.welfare - 100.0).abs() < 1e-6);
        assert!((20.0 - 1e-6..=30.0 + 1e-6).contains(&s.prices[0][0]));
    }

    #[test]
    fn paradoxical_acceptance_raises_welfare() {
        let inst = pab_market();
        let cmp = compare_pab_models(&inst, &ClearingRequest::default()).unwrap();
        assert!((cmp.pcr.welfare - 100.0).abs() < 1e-6);
        assert!((cmp.umfs.welfare - 140.0).abs() < 1e-6);
        assert!(cmp.umfs.block_loss_bound[0] > 0.0);
        for r in [cmp.pcr_residual, cmp.umfs_residual] {
            assert!(r.abs() <= 1e-6 * (1.0 + cmp.umfs.welfare.abs()));
        }
    }

    #[test]
    fn zero_time_limit_without_incumbent_is_an_error() {
        let req = ClearingRequest::default()
            .with_options(SolveOptions::default().with_time_limit(Duration::ZERO));
        let err = clear(&toy_market(), &req).unwrap_err();
        assert!(err.is_time_limit());
    }
}
