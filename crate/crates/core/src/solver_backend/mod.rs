//! LP and MILP solving behind a backend trait.
//!
//! Row duals follow the "shadow price" convention: the derivative of the
//! optimal objective with respect to the row's active bound, in the model's
//! own sense.

mod highs;
mod options;

use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::milp_builder::{ColId, MilpModel, Sense};

pub use self::highs::HighsBackend;
pub(crate) use self::highs::is_feasible_point;
pub use options::{
    SolveOptions, BACKEND_ENV, GAP_ENV, HIGHS_OPTIONS_ENV, SOLVER_LOG_ENV, TIME_LIMIT_ENV,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
    Unbounded,
    TimeLimitNoSolution,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleGap => "feasible_gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimitNoSolution => "time_limit_no_solution",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub columns: Vec<f64>,
    /// Present for LP solves only.
    pub row_duals: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub node_count: u64,
    pub wall_time: Duration,
}

impl SolveOutcome {
    /// `|objective - bound| / max(1, |objective|)`.
    pub fn relative_gap(&self) -> f64 {
        if self.status == SolveStatus::Optimal && !self.best_bound.is_finite() {
            return 0.0;
        }
        let gap = (self.objective - self.best_bound).abs();
        if gap.is_nan() {
            return 0.0;
        }
        gap / self.objective.abs().max(1.0)
    }

    pub fn value(&self, col: ColId) -> f64 {
        self.columns[col.0]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no solution: {0}")]
    NoSolution(SolveStatus),
    #[error("column {0} is an unfixed binary; not an LP")]
    NotAnLp(String),
    #[error("binary assignment incomplete: {0}")]
    IncompleteAssignment(String),
    #[error("invalid options: {0}")]
    Options(String),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl SolverError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, SolverError::NoSolution(SolveStatus::Infeasible))
    }
}

/// One solver handle. Implementations must be cheap to share across threads.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve_lp(&self, model: &MilpModel, options: &SolveOptions)
        -> Result<SolveOutcome, SolverError>;

    fn solve_mip(
        &self,
        model: &MilpModel,
        options: &SolveOptions,
    ) -> Result<SolveOutcome, SolverError>;

    /// Fixes every binary to `integer_values` and solves the remaining LP.
    fn resolve_duals(
        &self,
        model: &MilpModel,
        integer_values: &[(ColId, f64)],
        options: &SolveOptions,
    ) -> Result<SolveOutcome, SolverError> {
        let fixed = fix_binaries(model, integer_values)?;
        self.solve_lp(&fixed, options)
    }
}

/// Looks a backend up by its configuration key.
pub fn backend_from_name(name: &str) -> Result<Box<dyn SolverBackend>, SolverError> {
    match name.to_ascii_lowercase().as_str() {
        "highs" | "" => Ok(Box::new(HighsBackend)),
        other => Err(SolverError::UnknownBackend(other.to_owned())),
    }
}

/// Backend named by `PCR_CLEAR_BACKEND`, HiGHS when unset.
pub fn backend_from_env() -> Result<Box<dyn SolverBackend>, SolverError> {
    backend_from_name(&std::env::var(BACKEND_ENV).unwrap_or_default())
}

/// Copy of `model` with each listed binary's bounds collapsed to its value.
pub fn fix_binaries(
    model: &MilpModel,
    integer_values: &[(ColId, f64)],
) -> Result<MilpModel, SolverError> {
    let mut fixed = model.clone();
    let mut assigned = vec![false; model.columns.len()];
    for (c, v) in integer_values {
        let col = fixed
            .columns
            .get_mut(c.0)
            .ok_or_else(|| SolverError::IncompleteAssignment(format!("no column {}", c.0)))?;
        let v = v.round().clamp(col.lower, col.upper);
        col.lower = v;
        col.upper = v;
        assigned[c.0] = true;
    }
    if let Some(c) = model.binaries().find(|c| !assigned[c.0]) {
        return Err(SolverError::IncompleteAssignment(
            model.columns[c.0].name.clone(),
        ));
    }
    Ok(fixed)
}

/// Rounded values of every binary column in `columns`.
pub fn binary_assignment(model: &MilpModel, columns: &[f64]) -> Vec<(ColId, f64)> {
    model.binaries().map(|c| (c, columns[c.0].round())).collect()
}

pub fn solve_lp(model: &MilpModel) -> Result<SolveOutcome, SolverError> {
    HighsBackend.solve_lp(model, &SolveOptions::default())
}

/// Solves a MILP, honoring warm starts and (optionally) branching hints.
///
/// A feasible warm start is never lost: if the search returns something
/// worse, the warm start is returned instead.
pub fn solve_mip(model: &MilpModel, options: &SolveOptions) -> Result<SolveOutcome, SolverError> {
    solve_mip_with(&HighsBackend, model, options)
}

pub fn solve_mip_with(
    backend: &dyn SolverBackend,
    model: &MilpModel,
    options: &SolveOptions,
) -> Result<SolveOutcome, SolverError> {
    let mut options = options.clone();
    if options.warm_start.is_none() && model.warm_start.is_none() && options.honor_branching_hints {
        options.warm_start = hinted_dive(backend, model, &options);
    }
    let warm = options
        .warm_start
        .clone()
        .or_else(|| model.warm_start.clone())
        .filter(|ws| is_feasible_point(model, ws, &options));
    let result = backend.solve_mip(model, &options);
    let Some(ws) = warm else {
        return result;
    };
    let ws_obj = model.objective_value(&ws);
    let better = |o: f64| match model.sense {
        Sense::Maximize => o >= ws_obj - 1e-9 * (1.0 + ws_obj.abs()),
        Sense::Minimize => o <= ws_obj + 1e-9 * (1.0 + ws_obj.abs()),
    };
    match result {
        Ok(out) if better(out.objective) => Ok(out),
        Ok(out) => Ok(SolveOutcome {
            status: SolveStatus::FeasibleGap,
            objective: ws_obj,
            columns: ws,
            row_duals: None,
            ..out
        }),
        Err(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution)) => Ok(SolveOutcome {
            status: SolveStatus::FeasibleGap,
            objective: ws_obj,
            columns: ws,
            row_duals: None,
            best_bound: match model.sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            },
            node_count: 0,
            wall_time: options.time_limit.unwrap_or_default(),
        }),
        Err(e) => Err(e),
    }
}

/// Incumbent obtained by fixing every hinted binary to its preferred side.
fn hinted_dive(
    backend: &dyn SolverBackend,
    model: &MilpModel,
    options: &SolveOptions,
) -> Option<Vec<f64>> {
    if model.hints.is_empty() {
        return None;
    }
    let mut dive = model.clone();
    for h in &model.hints {
        let v = match h.direction {
            crate::milp_builder::BranchDirection::Down => 0.0,
            crate::milp_builder::BranchDirection::Up => 1.0,
        };
        dive.columns[h.column.0].lower = v;
        dive.columns[h.column.0].upper = v;
    }
    let mut opts = options.clone();
    opts.honor_branching_hints = false;
    opts.time_limit = options.time_limit.map(|t| t / 10);
    backend.solve_mip(&dive, &opts).ok().map(|o| o.columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp_builder::{MilpModel, ModelForm};

    fn small_lp(rhs: f64) -> MilpModel {
        // max 3a + 2b s.t. a + b <= rhs, a <= 4, b <= 10
        let mut m = MilpModel::new(ModelForm::Primal);
        let a = m.add_column("a", 0.0, 4.0);
        let b = m.add_column("b", 0.0, 10.0);
        m.columns[a.0].cost = 3.0;
        m.columns[b.0].cost = 2.0;
        m.add_le("cap", vec![(a, 1.0), (b, 1.0)], rhs);
        m
    }

    #[test]
    fn row_dual_is_finite_difference_of_objective() {
        let base = solve_lp(&small_lp(6.0)).unwrap();
        let up = solve_lp(&small_lp(6.0 + 1e-3)).unwrap();
        let fd = (up.objective - base.objective) / 1e-3;
        let dual = base.row_duals.unwrap()[0];
        assert!((dual - fd).abs() < 1e-6, "dual {dual} vs fd {fd}");
        assert!((dual - 2.0).abs() < 1e-9);
    }

    #[test]
    fn row_dual_sign_for_minimization() {
        // min a s.t. a >= rhs
        let build = |rhs: f64| {
            let mut m = MilpModel::new(ModelForm::Primal);
            let a = m.add_column("a", 0.0, f64::INFINITY);
            m.columns[a.0].cost = 1.0;
            m.sense = Sense::Minimize;
            m.add_ge("floor", vec![(a, 1.0)], rhs);
            m
        };
        let base = solve_lp(&build(2.0)).unwrap();
        let up = solve_lp(&build(2.5)).unwrap();
        let fd = (up.objective - base.objective) / 0.5;
        assert!((base.row_duals.unwrap()[0] - fd).abs() < 1e-9);
    }

    #[test]
    fn empty_model_is_optimal_at_zero() {
        let out = solve_lp(&MilpModel::new(ModelForm::Primal)).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn infeasible_lp_is_an_error() {
        let mut m = small_lp(1.0);
        m.add_ge("impossible", vec![(ColId(0), 1.0)], 5.0);
        assert!(solve_lp(&m).unwrap_err().is_infeasible());
    }

    #[test]
    fn unfixed_binary_is_not_an_lp() {
        let mut m = small_lp(1.0);
        m.add_binary("y");
        assert!(matches!(solve_lp(&m), Err(SolverError::NotAnLp(_))));
    }

    #[test]
    fn zero_time_limit_without_incumbent() {
        let mut m = small_lp(1.0);
        m.add_binary("y");
        let opts = SolveOptions::default().with_time_limit(Duration::ZERO);
        assert_eq!(
            solve_mip(&m, &opts).unwrap_err(),
            SolverError::NoSolution(SolveStatus::TimeLimitNoSolution)
        );
    }

    #[test]
    fn unknown_backend_name() {
        assert!(backend_from_name("cplex").is_err());
        assert_eq!(backend_from_name("HiGHS").unwrap().name(), "highs");
    }

    #[test]
    fn fix_binaries_requires_full_assignment() {
        let mut m = small_lp(1.0);
        m.add_binary("y");
        assert!(matches!(
            fix_binaries(&m, &[]),
            Err(SolverError::IncompleteAssignment(_))
        ));
    }
}
