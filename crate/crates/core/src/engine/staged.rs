//! Multi-stage heuristics. All stages of one pipeline share a single column
//! layout, so any stage's incumbent is a valid warm start for the next.

use std::time::{Duration, Instant};

use crate::core_model::{ClearingSolution, Instance, ObjectiveKind, StageRecord};
use crate::milp_builder::{build_market_model, set_objective, ColId, MilpModel, Sense};
use crate::solver_backend::{
    binary_assignment, is_feasible_point, solve_mip_with, SolveOptions, SolveOutcome, SolveStatus,
    SolverBackend, SolverError,
};

use super::{finalize, stage_record, ClearingRequest, EngineError};

/// Dispatches to the staged heuristic matching `request.objective`.
pub fn staged(instance: &Instance, request: &ClearingRequest) -> Result<ClearingSolution, EngineError> {
    match request.objective {
        ObjectiveKind::Welfare => heuristic_mic_block(instance, request),
        ObjectiveKind::Volume => heuristic_volume(instance, request),
        ObjectiveKind::MinOpportunityCost => heuristic_min_oc(instance, request),
    }
}

fn stage_options(request: &ClearingRequest, stage: usize, started: Instant) -> SolveOptions {
    let mut limit = request.stage_budgets[stage];
    if let Some(total) = request.options.time_limit {
        limit = limit.min(total.saturating_sub(started.elapsed()));
    }
    SolveOptions {
        time_limit: Some(limit),
        warm_start: None,
        ..request.options.clone()
    }
}

fn fix(model: &mut MilpModel, cols: &[ColId], values: impl Fn(usize) -> f64) {
    for (i, c) in cols.iter().enumerate() {
        let v = values(i);
        model.columns[c.0].lower = v;
        model.columns[c.0].upper = v;
    }
}

/// Best incumbent seen so far, measured on the target model.
struct Incumbent {
    sense: Sense,
    best: Option<(f64, Vec<f64>)>,
}

impl Incumbent {
    fn new(target: &MilpModel) -> Self {
        Incumbent {
            sense: target.sense,
            best: None,
        }
    }

    fn offer(&mut self, objective: f64, columns: &[f64]) {
        let better = match (&self.best, self.sense) {
            (None, _) => true,
            (Some((b, _)), Sense::Maximize) => objective > *b,
            (Some((b, _)), Sense::Minimize) => objective < *b,
        };
        if better {
            self.best = Some((objective, columns.to_vec()));
        }
    }

    fn columns(&self) -> Option<Vec<f64>> {
        self.best.as_ref().map(|(_, c)| c.clone())
    }
}

/// Treats a time-out without incumbent as "no result" and passes other errors on.
fn tolerate_timeout(r: Result<SolveOutcome, SolverError>) -> Result<Option<SolveOutcome>, SolverError> {
    match r {
        Ok(o) => Ok(Some(o)),
        Err(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Final outcome: the best incumbent, with the bound of the last full-model solve.
fn conclude(
    target: &MilpModel,
    incumbent: &Incumbent,
    last: Option<SolveOutcome>,
) -> Result<SolveOutcome, EngineError> {
    let Some((objective, columns)) = incumbent.best.clone() else {
        return Err(SolverError::NoSolution(SolveStatus::TimeLimitNoSolution).into());
    };
    let mut out = last.unwrap_or(SolveOutcome {
        status: SolveStatus::FeasibleGap,
        columns: Vec::new(),
        row_duals: None,
        objective,
        best_bound: match target.sense {
            Sense::Maximize => f64::INFINITY,
            Sense::Minimize => f64::NEG_INFINITY,
        },
        node_count: 0,
        wall_time: Default::default(),
    });
    if out.columns != columns {
        out.status = SolveStatus::FeasibleGap;
        out.columns = columns;
        out.objective = objective;
    }
    Ok(out)
}

fn record(
    stages: &mut Vec<StageRecord>,
    incumbent: &mut Incumbent,
    name: &str,
    target: &MilpModel,
    outcome: &Option<SolveOutcome>,
    started: Instant,
) {
    match outcome {
        Some(o) => {
            let rec = stage_record(name, target, o, started);
            incumbent.offer(rec.objective, &o.columns);
            stages.push(rec);
        }
        None => stages.push(StageRecord {
            name: name.to_owned(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            status: SolveStatus::TimeLimitNoSolution.to_string(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        }),
    }
}

/// Clears `relaxed` (income rows off) with the MIC selection fixed to
/// `accepted`.
fn clear_with_mics(
    backend: &dyn SolverBackend,
    relaxed: &MilpModel,
    accepted: &[bool],
    options: &SolveOptions,
    deadline: Instant,
) -> Result<Option<Vec<f64>>, SolverError> {
    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return Ok(None);
    }
    let mut round = relaxed.clone();
    fix(&mut round, &relaxed.roles.mic_acceptance, |c| if accepted[c] { 1.0 } else { 0.0 });
    let free_binaries = round
        .binaries()
        .any(|c| round.columns[c.0].lower != round.columns[c.0].upper);
    let solved = if free_binaries {
        let mut o = options.clone();
        o.time_limit = Some(remaining);
        o.warm_start = None;
        solve_mip_with(backend, &round, &o)
    } else {
        let assignment: Vec<_> = round.binaries().map(|c| (c, round.columns[c.0].lower)).collect();
        let o = SolveOptions {
            time_limit: None,
            warm_start: None,
            ..options.clone()
        };
        backend.resolve_duals(&round, &assignment, &o)
    };
    match solved {
        Ok(o) => Ok(Some(o.columns)),
        Err(e) if e.is_infeasible() || matches!(e, SolverError::NoSolution(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Income shortfall of each accepted MIC bid relative to `1 + F_c`.
fn mic_deficits(instance: &Instance, model: &MilpModel, cols: &[f64], accepted: &[bool]) -> Vec<Option<f64>> {
    let roles = &model.roles;
    instance
        .mic_bids
        .iter()
        .enumerate()
        .map(|(c, mic)| {
            accepted[c].then(|| {
                let mut margin = -mic.fixed_cost;
                for (h, s) in mic.suborders.iter().enumerate() {
                    let x = cols[roles.suborder_acceptance[c][h].0];
                    let price = cols[roles.prices[s.location][s.period].0];
                    margin += -s.power * x * (price - mic.variable_cost);
                }
                -margin / (1.0 + mic.fixed_cost)
            })
        })
        .collect()
}

/// Admissible MIC selection for `model`.
///
/// Starting from every MIC bid the model allows, clear with the income rows
/// switched off and drop the accepted bid with the largest relative income
/// deficit until the point satisfies `model`. Then try to re-insert each
/// dropped bid, keeping insertions that stay admissible and raise the
/// objective. Block binaries left free in `model` are re-optimized in every
/// round. Gives up with `None` once `deadline` passes without a point.
fn mic_preselection(
    instance: &Instance,
    backend: &dyn SolverBackend,
    model: &MilpModel,
    options: &SolveOptions,
    deadline: Instant,
) -> Result<Option<Vec<f64>>, SolverError> {
    let mut relaxed = model.clone();
    for r in model.row_roles.mic_income.iter().flatten() {
        relaxed.rows[*r].lower = f64::NEG_INFINITY;
    }
    let mut accepted: Vec<bool> = model
        .roles
        .mic_acceptance
        .iter()
        .map(|c| model.columns[c.0].upper > 0.5)
        .collect();
    let mut dropped = Vec::new();
    let mut best = loop {
        let Some(cols) = clear_with_mics(backend, &relaxed, &accepted, options, deadline)? else {
            return Ok(None);
        };
        if is_feasible_point(model, &cols, options) {
            break cols;
        }
        let worst = mic_deficits(instance, model, &cols, &accepted)
            .into_iter()
            .enumerate()
            .filter_map(|(c, d)| d.map(|d| (c, d)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((c, _)) => {
                accepted[c] = false;
                dropped.push(c);
            }
            None => return Ok(None),
        }
    };
    let better = |a: f64, b: f64| match model.sense {
        Sense::Maximize => a > b + 1e-9 * (1.0 + b.abs()),
        Sense::Minimize => a < b - 1e-9 * (1.0 + b.abs()),
    };
    // Bids dropped last were closest to covering their costs.
    for c in dropped.into_iter().rev() {
        accepted[c] = true;
        match clear_with_mics(backend, &relaxed, &accepted, options, deadline)? {
            Some(cols)
                if is_feasible_point(model, &cols, options)
                    && better(model.objective_value(&cols), model.objective_value(&best)) =>
            {
                best = cols
            }
            _ => accepted[c] = false,
        }
    }
    Ok(Some(best))
}

/// MIC selection with blocks rejected, then block selection with that MIC
/// selection fixed, then the full model warm-started from the result.
///
/// Before the first stage, [`mic_preselection`] runs on the full model (its
/// result is recorded as stage `mic_preselection`) and on the block-free
/// model, whose result seeds the first stage. Both share the first budget.
pub fn heuristic_mic_block(
    instance: &Instance,
    request: &ClearingRequest,
) -> Result<ClearingSolution, EngineError> {
    let backend = request.backend()?;
    let backend: &dyn SolverBackend = backend.as_ref();
    let model = build_market_model(instance, request.rules, request.objective)?;
    let roles = model.roles.clone();
    let started = Instant::now();
    let mut stages = Vec::new();
    let mut incumbent = Incumbent::new(&model);

    let t = Instant::now();
    let mut o1 = stage_options(request, 0, started);
    let deadline = t + o1.time_limit.unwrap_or(Duration::MAX).min(Duration::from_secs(86_400));
    let mut m1 = model.clone();
    fix(&mut m1, &roles.block_acceptance, |_| 0.0);
    o1.warm_start = mic_preselection(instance, backend, &m1, &o1, deadline)?;
    let pre = mic_preselection(instance, backend, &model, &o1, deadline)?.map(|columns| SolveOutcome {
        status: SolveStatus::FeasibleGap,
        objective: model.objective_value(&columns),
        columns,
        row_duals: None,
        best_bound: f64::INFINITY,
        node_count: 0,
        wall_time: t.elapsed(),
    });
    record(&mut stages, &mut incumbent, "mic_preselection", &model, &pre, t);

    let t = Instant::now();
    o1.time_limit = Some(deadline.saturating_duration_since(t));
    let s1 = tolerate_timeout(solve_mip_with(backend, &m1, &o1))?;
    record(&mut stages, &mut incumbent, "mic_selection", &model, &s1, t);
    let u: Vec<f64> = match &s1 {
        Some(o) => roles.mic_acceptance.iter().map(|c| o.columns[c.0].round()).collect(),
        None => vec![0.0; roles.mic_acceptance.len()],
    };

    let t = Instant::now();
    let mut m2 = model.clone();
    fix(&mut m2, &roles.mic_acceptance, |c| u[c]);
    let mut o2 = stage_options(request, 1, started);
    // The best incumbent may use another MIC selection; stage 1's point
    // always fits this stage.
    o2.warm_start = s1.as_ref().map(|o| o.columns.clone());
    let s2 = tolerate_timeout(solve_mip_with(backend, &m2, &o2))?;
    record(&mut stages, &mut incumbent, "block_selection", &model, &s2, t);

    let t = Instant::now();
    let mut o3 = stage_options(request, 2, started);
    o3.warm_start = incumbent.columns();
    let s3 = tolerate_timeout(solve_mip_with(backend, &model, &o3))?;
    record(&mut stages, &mut incumbent, "full", &model, &s3, t);

    let out = conclude(&model, &incumbent, s3)?;
    finalize(backend, instance, &model, &out, request, stages)
}

/// Welfare optimum, then the best `target` value over its selection, then
/// the full `target` model warm-started from that point.
fn objective_staged(
    instance: &Instance,
    request: &ClearingRequest,
    target_kind: ObjectiveKind,
) -> Result<ClearingSolution, EngineError> {
    let mut request = request.clone();
    request.objective = target_kind;
    let backend = request.backend()?;
    let backend: &dyn SolverBackend = backend.as_ref();
    let target = build_market_model(instance, request.rules, target_kind)?;
    let welfare = set_objective(target.clone(), instance, ObjectiveKind::Welfare)?;
    let started = Instant::now();
    let mut stages = Vec::new();
    let mut incumbent = Incumbent::new(&target);

    let t = Instant::now();
    let sa = tolerate_timeout(solve_mip_with(backend, &welfare, &stage_options(&request, 0, started)))?;
    record(&mut stages, &mut incumbent, "welfare", &target, &sa, t);

    if let Some(a) = &sa {
        let t = Instant::now();
        let assignment = binary_assignment(&target, &a.columns);
        let mut lp_options = stage_options(&request, 1, started);
        lp_options.time_limit = None;
        let sb = match backend.resolve_duals(&target, &assignment, &lp_options) {
            Ok(o) => Some(o),
            Err(e) if e.is_infeasible() => None,
            Err(e) => return Err(e.into()),
        };
        record(&mut stages, &mut incumbent, "fixed_selection", &target, &sb, t);
    }

    let t = Instant::now();
    let mut oc = stage_options(&request, 2, started);
    oc.warm_start = incumbent.columns();
    let sc = tolerate_timeout(solve_mip_with(backend, &target, &oc))?;
    record(&mut stages, &mut incumbent, "full", &target, &sc, t);

    let out = conclude(&target, &incumbent, sc)?;
    finalize(backend, instance, &target, &out, &request, stages)
}

pub fn heuristic_volume(
    instance: &Instance,
    request: &ClearingRequest,
) -> Result<ClearingSolution, EngineError> {
    objective_staged(instance, request, ObjectiveKind::Volume)
}

pub fn heuristic_min_oc(
    instance: &Instance,
    request: &ClearingRequest,
) -> Result<ClearingSolution, EngineError> {
    objective_staged(instance, request, ObjectiveKind::MinOpportunityCost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::MarketRules;
    use crate::engine::clear;
    use crate::fixtures::{mic_market, toy_market};
    use crate::verifier::{verify_equilibrium, Tolerances};

    #[test]
    fn toy_volume_stages() {
        let inst = toy_market();
        let req = ClearingRequest::new(ObjectiveKind::Volume, MarketRules::Pcr);
        let s = heuristic_volume(&inst, &req).unwrap();
        let st = &s.diagnostics.stages;
        assert_eq!(st.len(), 3);
        assert!((st[0].objective - 10.0).abs() < 1e-6);
        assert!((s.traded_volume - 20.0).abs() < 1e-6);
        assert!(verify_equilibrium(&inst, &s, &Tolerances::default()).passed);
    }

    #[test]
    fn toy_min_oc_stages() {
        let inst = toy_market();
        let req = ClearingRequest::new(ObjectiveKind::MinOpportunityCost, MarketRules::Pcr);
        let s = heuristic_min_oc(&inst, &req).unwrap();
        assert!((s.diagnostics.stages[0].objective - 800.0).abs() < 1e-6);
        assert!((s.total_opportunity_cost - 50.0).abs() < 1e-6);
    }

    #[test]
    fn mic_block_matches_single_shot_without_blocks() {
        let inst = mic_market(100.0);
        let req = ClearingRequest::default();
        let a = heuristic_mic_block(&inst, &req).unwrap();
        let b = clear(&inst, &req).unwrap();
        assert!((a.welfare - b.welfare).abs() < 1e-6);
        assert_eq!(a.mic_acceptance, b.mic_acceptance);
    }

    #[test]
    fn stages_are_monotone() {
        let inst = toy_market();
        let s = heuristic_mic_block(&inst, &ClearingRequest::default()).unwrap();
        let names: Vec<&str> = s.diagnostics.stages.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["mic_preselection", "mic_selection", "block_selection", "full"]);
        let st = &s.diagnostics.stages;
        assert!(st[3].objective >= st[2].objective - 1e-9);
        assert!((s.welfare - 450.0).abs() < 1e-6);
    }
}
