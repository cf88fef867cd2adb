use std::ffi::CString;
use std::time::{Duration, Instant};

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};

use crate::milp_builder::{ColumnKind, MilpModel, Sense};

use super::{SolveOptions, SolveOutcome, SolveStatus, SolverBackend, SolverError, HIGHS_OPTIONS_ENV, SOLVER_LOG_ENV};

/// HiGHS through the `highs` bindings.
#[derive(Clone, Copy, Debug, Default)]
pub struct HighsBackend;

impl SolverBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve_lp(
        &self,
        model: &MilpModel,
        options: &SolveOptions,
    ) -> Result<SolveOutcome, SolverError> {
        if let Some(c) = model
            .columns
            .iter()
            .find(|c| c.kind == ColumnKind::Binary && c.lower != c.upper)
        {
            return Err(SolverError::NotAnLp(c.name.clone()));
        }
        run(model, options, false)
    }

    fn solve_mip(
        &self,
        model: &MilpModel,
        options: &SolveOptions,
    ) -> Result<SolveOutcome, SolverError> {
        run(model, options, true)
    }
}

fn run(model: &MilpModel, options: &SolveOptions, mip: bool) -> Result<SolveOutcome, SolverError> {
    options.validate().map_err(SolverError::Options)?;
    let started = Instant::now();
    let has_integers = mip && model.num_binaries() > 0;

    if model.columns.is_empty() {
        let feasible = model.rows.iter().all(|r| r.lower <= 0.0 && 0.0 <= r.upper);
        if !feasible {
            return Err(SolverError::NoSolution(SolveStatus::Infeasible));
        }
        return Ok(SolveOutcome {
            status: SolveStatus::Optimal,
            columns: Vec::new(),
            row_duals: (!has_integers).then(|| vec![0.0; model.rows.len()]),
            objective: 0.0,
            best_bound: 0.0,
            node_count: 0,
            wall_time: started.elapsed(),
        });
    }

    if options.time_limit == Some(Duration::ZERO) {
        return match options.warm_start.as_ref().or(model.warm_start.as_ref()) {
            Some(ws) if is_feasible_point(model, ws, options) => Ok(SolveOutcome {
                status: SolveStatus::FeasibleGap,
                columns: ws.clone(),
                row_duals: None,
                objective: model.objective_value(ws),
                best_bound: if model.sense == Sense::Maximize {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                node_count: 0,
                wall_time: started.elapsed(),
            }),
            _ => Err(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution)),
        };
    }

    let outcome = solve_once(model, options, has_integers, true, started)?;
    match outcome {
        Attempt::Done(o) => Ok(o),
        // Presolve cannot always tell infeasible from unbounded; ask again without it.
        Attempt::Ambiguous => match solve_once(model, options, has_integers, false, started)? {
            Attempt::Done(o) => Ok(o),
            Attempt::Ambiguous => Err(SolverError::NoSolution(SolveStatus::Unbounded)),
        },
    }
}

enum Attempt {
    Done(SolveOutcome),
    Ambiguous,
}

pub(crate) fn is_feasible_point(model: &MilpModel, values: &[f64], options: &SolveOptions) -> bool {
    if values.len() != model.columns.len() {
        return false;
    }
    let integral = model
        .binaries()
        .all(|c| (values[c.0] - values[c.0].round()).abs() <= options.integer_feasibility_tol);
    integral && model.max_violation(values) <= 1e-6
}

fn solve_once(
    model: &MilpModel,
    options: &SolveOptions,
    has_integers: bool,
    presolve: bool,
    started: Instant,
) -> Result<Attempt, SolverError> {
    let mut problem = RowProblem::default();
    let cols: Vec<highs::Col> = model
        .columns
        .iter()
        .map(|c| {
            if has_integers && c.kind == ColumnKind::Binary {
                problem.add_integer_column(c.cost, c.lower..=c.upper)
            } else {
                problem.add_column(c.cost, c.lower..=c.upper)
            }
        })
        .collect();
    for r in &model.rows {
        let terms: Vec<(highs::Col, f64)> = r.terms.iter().map(|(c, a)| (cols[c.0], *a)).collect();
        problem.add_row(r.lower..=r.upper, terms);
    }
    let sense = match model.sense {
        Sense::Maximize => highs::Sense::Maximise,
        Sense::Minimize => highs::Sense::Minimise,
    };
    let mut hm = problem
        .try_optimise(sense)
        .map_err(|e| SolverError::Backend(format!("could not load model: {e:?}")))?;

    let set = |hm: &mut highs::Model, key: &str, v: f64| {
        hm.try_set_option(key, v)
            .map_err(|_| SolverError::Backend(format!("option {key} rejected")))
    };
    set(&mut hm, "primal_feasibility_tolerance", options.lp_feasibility_tol)?;
    set(&mut hm, "dual_feasibility_tolerance", options.lp_feasibility_tol)?;
    set(&mut hm, "mip_feasibility_tolerance", options.integer_feasibility_tol)?;
    set(&mut hm, "mip_rel_gap", options.relative_gap_target)?;
    set(&mut hm, "mip_abs_gap", options.absolute_gap_target)?;
    if let Some(limit) = options.time_limit {
        let remaining = limit.saturating_sub(started.elapsed()).as_secs_f64();
        set(&mut hm, "time_limit", remaining.max(1e-3))?;
    }
    if let Some(t) = options.thread_count {
        hm.try_set_option("threads", t as i32)
            .map_err(|_| SolverError::Backend("option threads rejected".into()))?;
    }
    if std::env::var_os(SOLVER_LOG_ENV).is_some() {
        for key in ["output_flag", "log_to_console"] {
            hm.try_set_option(key, true)
                .map_err(|_| SolverError::Backend(format!("option {key} rejected")))?;
        }
    }
    if let Ok(extra) = std::env::var(HIGHS_OPTIONS_ENV) {
        for kv in extra.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| SolverError::Options(format!("{HIGHS_OPTIONS_ENV}: expected key=value, got {kv:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let ok = if let Ok(b) = v.parse::<bool>() {
                hm.try_set_option(k, b).is_ok()
            } else if let Ok(i) = v.parse::<i32>() {
                hm.try_set_option(k, i).is_ok() || hm.try_set_option(k, i as f64).is_ok()
            } else if let Ok(f) = v.parse::<f64>() {
                hm.try_set_option(k, f).is_ok()
            } else {
                hm.try_set_option(k, v).is_ok()
            };
            if !ok {
                return Err(SolverError::Options(format!("{HIGHS_OPTIONS_ENV}: option {k}={v} rejected")));
            }
        }
    }
    if !presolve {
        hm.try_set_option("presolve", "off")
            .map_err(|_| SolverError::Backend("option presolve rejected".into()))?;
    }
    let warm = options.warm_start.as_ref().or(model.warm_start.as_ref());
    if has_integers {
        if let Some(ws) = warm {
            if ws.len() == model.columns.len() {
                hm.try_set_solution(Some(ws), None, None, None)
                    .map_err(|e| SolverError::Backend(format!("warm start rejected: {e:?}")))?;
            }
        }
    }

    let solved = hm
        .try_solve()
        .map_err(|e| SolverError::Backend(format!("HiGHS run failed: {e:?}")))?;
    let status = solved.status();
    let mapped = match status {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => {
            return Err(SolverError::NoSolution(SolveStatus::Infeasible))
        }
        HighsModelStatus::Unbounded => {
            return Err(SolverError::NoSolution(SolveStatus::Unbounded))
        }
        HighsModelStatus::UnboundedOrInfeasible => {
            if presolve {
                return Ok(Attempt::Ambiguous);
            }
            return Err(SolverError::NoSolution(SolveStatus::Unbounded));
        }
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedMemoryLimit => {
            if solved.primal_solution_status() == HighsSolutionStatus::Feasible {
                SolveStatus::FeasibleGap
            } else {
                return Err(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution));
            }
        }
        other => return Err(SolverError::Backend(format!("HiGHS status {other:?}"))),
    };
    let solution = solved.get_solution();
    let objective = solved.objective_value();
    let (best_bound, node_count) = if has_integers {
        let bound = solved.double_info_value(c"mip_dual_bound").unwrap_or(f64::NAN);
        (bound, node_count(&solved))
    } else {
        (objective, 0)
    };
    Ok(Attempt::Done(SolveOutcome {
        status: mapped,
        columns: solution.columns().to_vec(),
        row_duals: (!has_integers).then(|| solution.dual_rows().to_vec()),
        objective,
        best_bound,
        node_count,
        wall_time: started.elapsed(),
    }))
}

fn node_count(solved: &highs::SolvedModel) -> u64 {
    let key = CString::new("mip_node_count").expect("static key");
    let mut value: i64 = 0;
    // SAFETY: the pointer comes from a live SolvedModel and the key is a known int64 info.
    let status = unsafe {
        highs_sys::Highs_getInt64InfoValue(solved.as_ptr(), key.as_ptr(), &mut value)
    };
    if status == 0 {
        value.max(0) as u64
    } else {
        0
    }
}
