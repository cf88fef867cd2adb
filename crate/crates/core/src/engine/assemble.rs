use crate::core_model::{
    total_opportunity_cost, traded_volume_unchecked, welfare_unchecked, ClearingSolution,
    Instance, MarketRules, ObjectiveKind, SolveDiagnostics, StageRecord,
};
use crate::milp_builder::MilpModel;
use crate::solver_backend::SolveOutcome;

fn nonneg(v: f64) -> f64 {
    v.max(0.0)
}

/// Reads a [`ClearingSolution`] off the columns of a market model.
///
/// Quantities with no column in the model's form, or with slack the model
/// leaves undetermined, are set to their tightest valid values: loss and
/// opportunity bounds of blocks, suborder surpluses and rejection bounds of
/// rejected MIC bids.
pub(crate) fn assemble(
    instance: &Instance,
    model: &MilpModel,
    columns: &[f64],
    rules: MarketRules,
    objective: ObjectiveKind,
) -> ClearingSolution {
    let r = &model.roles;
    let v = |c: &crate::milp_builder::ColId| columns[c.0];
    let mut sol = ClearingSolution::zeros(instance, 0.0);
    sol.rules = rules;
    sol.objective = objective;
    sol.hourly_acceptance = r.hourly_acceptance.iter().map(|c| v(c).clamp(0.0, 1.0)).collect();
    sol.block_acceptance = r.block_acceptance.iter().map(|c| v(c).round()).collect();
    sol.mic_acceptance = r.mic_acceptance.iter().map(|c| v(c).round()).collect();
    sol.suborder_acceptance = r
        .suborder_acceptance
        .iter()
        .zip(&sol.mic_acceptance)
        .map(|(cs, u)| cs.iter().map(|c| v(c).clamp(0.0, *u)).collect())
        .collect();
    sol.flows = r.flows.iter().map(v).collect();
    sol.prices = r.prices.iter().map(|row| row.iter().map(v).collect()).collect();
    sol.network_duals = r.network_duals.iter().map(|c| nonneg(v(c))).collect();
    sol.hourly_surplus = r.hourly_surplus.iter().map(|c| nonneg(v(c))).collect();
    sol.mic_surplus = r.mic_surplus.iter().map(|c| nonneg(v(c))).collect();
    sol.suborder_surplus = r
        .suborder_surplus
        .iter()
        .map(|cs| cs.iter().map(|c| nonneg(v(c))).collect())
        .collect();

    for (j, b) in instance.block_bids.iter().enumerate() {
        let s = v(&r.block_surplus[j]);
        let d_a = r.block_loss_bound[j].map(|c| columns[c.0]).unwrap_or(0.0);
        if sol.block_accepted(j) {
            // Only the difference s_j - d^a_j is determined.
            let net = s - d_a;
            sol.block_surplus[j] = nonneg(net);
            sol.block_loss_bound[j] = nonneg(-net);
        } else {
            let s = nonneg(s);
            let gain: f64 = b
                .active_periods()
                .map(|(t, p)| p * (b.limit_price - sol.prices[b.location][t]))
                .sum();
            sol.block_surplus[j] = s;
            sol.block_opportunity_bound[j] = nonneg(gain - s);
        }
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        if sol.mic_accepted(c) {
            continue;
        }
        sol.suborder_surplus[c] = mic
            .suborders
            .iter()
            .map(|s| nonneg(s.power * (s.limit_price - sol.prices[s.location][s.period])))
            .collect();
        let sub: f64 = sol.suborder_surplus[c].iter().sum();
        sol.mic_rejection_bound[c] = nonneg(sub - sol.mic_surplus[c]);
    }

    sol.welfare = welfare_unchecked(instance, &sol);
    sol.traded_volume = traded_volume_unchecked(instance, &sol);
    sol.total_opportunity_cost = total_opportunity_cost(instance, &sol);
    sol
}

pub(crate) fn diagnostics(outcome: &SolveOutcome, stages: Vec<StageRecord>) -> SolveDiagnostics {
    SolveDiagnostics {
        status: outcome.status.to_string(),
        objective: outcome.objective,
        best_bound: outcome.best_bound,
        node_count: outcome.node_count,
        wall_time_secs: outcome.wall_time.as_secs_f64(),
        stages,
    }
}
