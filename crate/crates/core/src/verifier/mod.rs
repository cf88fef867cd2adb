//! Model-free equilibrium checks.
//!
//! Everything here reads only an [`Instance`] and a [`ClearingSolution`];
//! no model built by the MILP builder is consulted. Each residual is divided
//! by one plus the magnitude of the terms involved.

mod report;

use serde::{Deserialize, Serialize};

use crate::core_model::{
    block_surplus_terms, dual_objective, welfare_unchecked, ClearingSolution, Instance,
    MarketRules,
};

pub use report::{Family, FamilyResult, VerificationReport, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub complementarity: f64,
    /// Applied to `|W - D| / (1 + |W|)`.
    pub objective: f64,
    pub integrality: f64,
    /// Applied to residuals divided by `1 + F_c`.
    pub mic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-6,
            complementarity: 1e-5,
            objective: 1e-5,
            integrality: 1e-6,
            mic: 1e-5,
        }
    }
}

fn below(v: f64) -> f64 {
    (-v).max(0.0)
}

/// `|a * b|` relative to both factors' scales.
fn product(a: f64, b: f64, b_scale: f64) -> f64 {
    (a * b).abs() / ((1.0 + a.abs()) * (1.0 + b_scale))
}

fn cell(instance: &Instance, l: usize, t: usize) -> String {
    let net = &instance.network;
    format!("{}@{}", net.locations[l], net.periods[t])
}

/// Checks every primal, dual and complementarity condition literally, plus
/// the price range, the primal/dual objective gap, the no-loss rule when the
/// solution claims PCR rules, and the nonlinear minimum income condition.
pub fn verify_equilibrium(
    instance: &Instance,
    solution: &ClearingSolution,
    tolerances: &Tolerances,
) -> VerificationReport {
    let mut primal = FamilyResult::new(Family::Primal, tolerances.feasibility);
    if let Err(e) = solution.check_dimensions(instance) {
        primal.record("dimensions", || e.to_string(), f64::INFINITY);
        return VerificationReport::from_families(vec![primal]);
    }
    check_primal(instance, solution, tolerances, &mut primal);
    let mut dual = FamilyResult::new(Family::Dual, tolerances.feasibility);
    check_dual(instance, solution, &mut dual);
    let mut cc = FamilyResult::new(Family::Complementarity, tolerances.complementarity);
    check_complementarity(instance, solution, &mut cc);

    let mut range = FamilyResult::new(Family::PriceRange, tolerances.feasibility);
    for (l, row) in solution.prices.iter().enumerate() {
        for (t, p) in row.iter().enumerate() {
            let excess = (p.abs() - instance.price_cap).max(0.0) / (1.0 + instance.price_cap);
            range.record("price_cap", || cell(instance, l, t), excess);
        }
    }

    let mut obj = FamilyResult::new(Family::ObjectiveEquality, tolerances.objective);
    let w = welfare_unchecked(instance, solution);
    let d = dual_objective(instance, solution);
    obj.record(
        "primal_equals_dual",
        || format!("welfare={w} dual={d}"),
        (w - d).abs() / (1.0 + w.abs()),
    );

    let mut families = vec![primal, dual, cc, range, obj];
    if solution.rules == MarketRules::Pcr {
        let mut pcr = FamilyResult::new(Family::PcrNoLoss, tolerances.feasibility);
        for (j, b) in instance.block_bids.iter().enumerate() {
            if !solution.block_accepted(j) {
                continue;
            }
            let terms = block_surplus_terms(instance, solution, j);
            let scale = 1.0 + (b.total_power() * b.limit_price).abs();
            pcr.record("accepted_block_loss", || b.id.clone(), terms.loss / scale);
            pcr.record(
                "loss_bound_zero",
                || b.id.clone(),
                solution.block_loss_bound[j].abs() / scale,
            );
        }
        families.push(pcr);
    }
    families.push(verify_mic_income(instance, solution, tolerances.mic));
    VerificationReport::from_families(families)
}

fn check_primal(
    instance: &Instance,
    sol: &ClearingSolution,
    tol: &Tolerances,
    out: &mut FamilyResult,
) {
    let net = &instance.network;
    let int_scale = tol.feasibility / tol.integrality;
    for (b, x) in instance.hourly_bids.iter().zip(&sol.hourly_acceptance) {
        out.record("hourly_bounds", || b.id.clone(), below(*x).max(x - 1.0));
    }
    for (b, y) in instance.block_bids.iter().zip(&sol.block_acceptance) {
        out.record("block_bounds", || b.id.clone(), below(*y).max(y - 1.0));
        out.record(
            "block_integrality",
            || b.id.clone(),
            (y - y.round()).abs() * int_scale,
        );
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        let u = sol.mic_acceptance[c];
        out.record("mic_bounds", || mic.id.clone(), below(u).max(u - 1.0));
        out.record(
            "mic_integrality",
            || mic.id.clone(),
            (u - u.round()).abs() * int_scale,
        );
        for (h, x) in sol.suborder_acceptance[c].iter().enumerate() {
            out.record(
                "suborder_link",
                || format!("{}#{h}", mic.id),
                below(*x).max(x - u),
            );
        }
    }

    let mut lhs = vec![vec![0.0; net.num_periods()]; net.num_locations()];
    let mut scale = vec![vec![0.0; net.num_periods()]; net.num_locations()];
    let mut add = |l: usize, t: usize, v: f64| {
        lhs[l][t] += v;
        scale[l][t] += v.abs();
    };
    for (b, x) in instance.hourly_bids.iter().zip(&sol.hourly_acceptance) {
        add(b.location, b.period, b.power * x);
    }
    for (b, y) in instance.block_bids.iter().zip(&sol.block_acceptance) {
        for (t, p) in b.active_periods() {
            add(b.location, t, p * y);
        }
    }
    for (mic, xs) in instance.mic_bids.iter().zip(&sol.suborder_acceptance) {
        for (s, x) in mic.suborders.iter().zip(xs) {
            add(s.location, s.period, s.power * x);
        }
    }
    for e in &net.export_coeffs {
        add(e.location, e.period, -e.coeff * sol.flows[e.basis]);
    }
    for l in 0..net.num_locations() {
        for t in 0..net.num_periods() {
            out.record(
                "balance",
                || cell(instance, l, t),
                lhs[l][t].abs() / (1.0 + scale[l][t]),
            );
        }
    }
    for row in &net.rows {
        let act: f64 = row.coeffs.iter().map(|(k, a)| a * sol.flows[*k]).sum();
        let sc: f64 = row.coeffs.iter().map(|(k, a)| (a * sol.flows[*k]).abs()).sum();
        out.record(
            "network_capacity",
            || row.name.clone(),
            (act - row.capacity).max(0.0) / (1.0 + sc + row.capacity.abs()),
        );
    }
}

/// Slack of the dual row of block `j` for its selection state, with scale.
fn block_dual_slack(instance: &Instance, sol: &ClearingSolution, j: usize) -> (f64, f64) {
    let b = &instance.block_bids[j];
    let mut lhs = sol.block_surplus[j];
    let mut scale = lhs.abs();
    if sol.block_accepted(j) {
        lhs -= sol.block_loss_bound[j];
        scale += sol.block_loss_bound[j].abs();
    } else {
        lhs += sol.block_opportunity_bound[j];
        scale += sol.block_opportunity_bound[j].abs();
    }
    for (t, p) in b.active_periods() {
        let v = p * sol.price(b.location, t);
        lhs += v;
        scale += v.abs();
    }
    let rhs = b.total_power() * b.limit_price;
    (lhs - rhs, scale + rhs.abs())
}

fn mic_dual_slack(sol: &ClearingSolution, c: usize) -> (f64, f64) {
    let sub: f64 = sol.suborder_surplus[c].iter().sum();
    let sub_scale: f64 = sol.suborder_surplus[c].iter().map(|s| s.abs()).sum();
    let mut lhs = sol.mic_surplus[c];
    let mut scale = lhs.abs() + sub_scale;
    if !sol.mic_accepted(c) {
        lhs += sol.mic_rejection_bound[c];
        scale += sol.mic_rejection_bound[c].abs();
    }
    (lhs - sub, scale)
}

fn check_dual(instance: &Instance, sol: &ClearingSolution, out: &mut FamilyResult) {
    let net = &instance.network;
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let s = sol.hourly_surplus[i];
        out.record("surplus_nonneg", || b.id.clone(), below(s));
        let pp = b.power * sol.price(b.location, b.period);
        let pl = b.power * b.limit_price;
        out.record(
            "hourly_dual",
            || b.id.clone(),
            below(s + pp - pl) / (1.0 + s.abs() + pp.abs() + pl.abs()),
        );
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        for (h, sub) in mic.suborders.iter().enumerate() {
            let s = sol.suborder_surplus[c][h];
            let id = || format!("{}#{h}", mic.id);
            out.record("surplus_nonneg", id, below(s));
            let pp = sub.power * sol.price(sub.location, sub.period);
            let pl = sub.power * sub.limit_price;
            out.record(
                "suborder_dual",
                id,
                below(s + pp - pl) / (1.0 + s.abs() + pp.abs() + pl.abs()),
            );
        }
        out.record("surplus_nonneg", || mic.id.clone(), below(sol.mic_surplus[c]));
        out.record(
            "rejection_bound_nonneg",
            || mic.id.clone(),
            below(sol.mic_rejection_bound[c]),
        );
        let (slack, scale) = mic_dual_slack(sol, c);
        out.record("mic_dual", || mic.id.clone(), below(slack) / (1.0 + scale));
    }
    for (j, b) in instance.block_bids.iter().enumerate() {
        out.record("surplus_nonneg", || b.id.clone(), below(sol.block_surplus[j]));
        out.record("loss_bound_nonneg", || b.id.clone(), below(sol.block_loss_bound[j]));
        out.record(
            "opportunity_bound_nonneg",
            || b.id.clone(),
            below(sol.block_opportunity_bound[j]),
        );
        let (slack, scale) = block_dual_slack(instance, sol, j);
        out.record("block_dual", || b.id.clone(), below(slack) / (1.0 + scale));
    }
    for (m, row) in net.rows.iter().enumerate() {
        out.record(
            "network_dual_nonneg",
            || row.name.clone(),
            below(sol.network_duals[m]),
        );
    }
    for k in 0..net.basis_size() {
        let mut lhs = 0.0;
        let mut scale = 0.0;
        for (m, a) in net.constraint_column(k) {
            lhs += a * sol.network_duals[m];
            scale += (a * sol.network_duals[m]).abs();
        }
        for (l, t, e) in net.basis_column(k) {
            lhs -= e * sol.price(l, t);
            scale += (e * sol.price(l, t)).abs();
        }
        out.record("flow_dual", || net.basis[k].clone(), lhs.abs() / (1.0 + scale));
    }
}

fn check_complementarity(instance: &Instance, sol: &ClearingSolution, out: &mut FamilyResult) {
    let net = &instance.network;
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        let x = sol.hourly_acceptance[i];
        let s = sol.hourly_surplus[i];
        out.record("hourly_upper", || b.id.clone(), product(s, 1.0 - x, 1.0 + x.abs()));
        let pp = b.power * sol.price(b.location, b.period);
        let pl = b.power * b.limit_price;
        out.record(
            "hourly_dual",
            || b.id.clone(),
            product(x, s + pp - pl, s.abs() + pp.abs() + pl.abs()),
        );
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        let u = sol.mic_acceptance[c];
        for (h, sub) in mic.suborders.iter().enumerate() {
            let x = sol.suborder_acceptance[c][h];
            let s = sol.suborder_surplus[c][h];
            let id = || format!("{}#{h}", mic.id);
            out.record("suborder_link", id, product(s, u - x, u.abs() + x.abs()));
            let pp = sub.power * sol.price(sub.location, sub.period);
            let pl = sub.power * sub.limit_price;
            out.record(
                "suborder_dual",
                id,
                product(x, s + pp - pl, s.abs() + pp.abs() + pl.abs()),
            );
        }
        let s_c = sol.mic_surplus[c];
        out.record("mic_upper", || mic.id.clone(), product(s_c, 1.0 - u, 1.0 + u.abs()));
        out.record(
            "rejection_bound",
            || mic.id.clone(),
            product(sol.mic_rejection_bound[c], u, u.abs()),
        );
        let (slack, scale) = mic_dual_slack(sol, c);
        out.record("mic_dual", || mic.id.clone(), product(u, slack, scale));
    }
    for (j, b) in instance.block_bids.iter().enumerate() {
        let y = sol.block_acceptance[j];
        let s = sol.block_surplus[j];
        out.record("block_upper", || b.id.clone(), product(s, 1.0 - y, 1.0 + y.abs()));
        out.record(
            "loss_bound",
            || b.id.clone(),
            product(sol.block_loss_bound[j], 1.0 - y, 1.0 + y.abs()),
        );
        out.record(
            "opportunity_bound",
            || b.id.clone(),
            product(sol.block_opportunity_bound[j], y, y.abs()),
        );
        let (slack, scale) = block_dual_slack(instance, sol, j);
        out.record("block_dual", || b.id.clone(), product(y, slack, scale));
    }
    for (m, row) in net.rows.iter().enumerate() {
        let act: f64 = row.coeffs.iter().map(|(k, a)| a * sol.flows[*k]).sum();
        let sc: f64 = row.coeffs.iter().map(|(k, a)| (a * sol.flows[*k]).abs()).sum();
        out.record(
            "network_capacity",
            || row.name.clone(),
            product(sol.network_duals[m], act - row.capacity, sc + row.capacity.abs()),
        );
    }
}

/// Nonlinear minimum income condition of every accepted MIC bid, plus the
/// identity linking its income to `s_c`.
pub fn verify_mic_income(instance: &Instance, solution: &ClearingSolution, tol: f64) -> FamilyResult {
    let mut out = FamilyResult::new(Family::MicIncome, tol);
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        if !solution.mic_accepted(c) {
            continue;
        }
        let xs = &solution.suborder_acceptance[c];
        let mut income = 0.0;
        let mut executed = 0.0;
        let mut welfare = 0.0;
        for (s, x) in mic.suborders.iter().zip(xs) {
            let sold = -s.power * x;
            income += sold * solution.price(s.location, s.period);
            executed += sold;
            welfare += s.power * s.limit_price * x;
        }
        let scale = 1.0 + mic.fixed_cost;
        let cost = mic.fixed_cost + executed * mic.variable_cost;
        out.record("income_covers_cost", || mic.id.clone(), (cost - income).max(0.0) / scale);
        out.record(
            "income_identity",
            || mic.id.clone(),
            (-income - welfare + solution.mic_surplus[c]).abs() / scale,
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpportunityCostSummary {
    pub block_opportunity_cost: Vec<f64>,
    pub total_opportunity_cost: f64,
    pub block_loss: Vec<f64>,
    /// Per MIC bid: largest surplus its suborders could have made, zero if accepted.
    pub mic_missed_surplus: Vec<f64>,
    /// Blocks and MIC bids whose reported bounds fall below the true value.
    pub bound_violations: Vec<String>,
}

pub fn opportunity_cost_summary(
    instance: &Instance,
    solution: &ClearingSolution,
) -> OpportunityCostSummary {
    const TOL: f64 = 1e-6;
    let mut bound_violations = Vec::new();
    let mut oc = Vec::new();
    let mut loss = Vec::new();
    for (j, b) in instance.block_bids.iter().enumerate() {
        let t = block_surplus_terms(instance, solution, j);
        let slack = TOL * (1.0 + t.gain.abs());
        if solution.block_accepted(j) && t.loss > solution.block_loss_bound[j] + slack {
            bound_violations.push(b.id.clone());
        }
        if !solution.block_accepted(j)
            && t.opportunity_cost > solution.block_opportunity_bound[j] + slack
        {
            bound_violations.push(b.id.clone());
        }
        oc.push(t.opportunity_cost);
        loss.push(t.loss);
    }
    let mut missed = Vec::new();
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        if solution.mic_accepted(c) {
            missed.push(0.0);
            continue;
        }
        let m: f64 = mic
            .suborders
            .iter()
            .map(|s| (s.power * (s.limit_price - solution.price(s.location, s.period))).max(0.0))
            .sum();
        if m > solution.mic_rejection_bound[c] + TOL * (1.0 + m) {
            bound_violations.push(mic.id.clone());
        }
        missed.push(m);
    }
    OpportunityCostSummary {
        total_opportunity_cost: oc.iter().sum(),
        block_opportunity_cost: oc,
        block_loss: loss,
        mic_missed_surplus: missed,
        bound_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{crossing_pair, toy_market};

    /// Toy case (i) filled in by hand: C accepted, A marginal at 50.
    fn toy_case_i() -> (Instance, ClearingSolution) {
        let inst = toy_market();
        let mut s = ClearingSolution::zeros(&inst, 50.0);
        s.hourly_acceptance = vec![10.0 / 11.0, 0.0];
        s.block_acceptance = vec![1.0, 0.0];
        // C sells 10 at 5 and earns 45 per MW.
        s.block_surplus = vec![450.0, 0.0];
        // D would have earned 20 * 40.
        s.block_opportunity_bound = vec![0.0, 800.0];
        (inst, s)
    }

    #[test]
    fn hand_built_toy_equilibrium_passes() {
        let (inst, s) = toy_case_i();
        let r = verify_equilibrium(&inst, &s, &Tolerances::default());
        assert!(r.passed, "{r}");
        let oc = opportunity_cost_summary(&inst, &s);
        assert_eq!(oc.total_opportunity_cost, 800.0);
        assert!(oc.bound_violations.is_empty());
    }

    #[test]
    fn toy_case_ii_opportunity_cost() {
        let inst = toy_market();
        let mut s = ClearingSolution::zeros(&inst, 10.0);
        s.hourly_acceptance = vec![1.0, 9.0 / 14.0];
        s.block_acceptance = vec![0.0, 1.0];
        assert_eq!(opportunity_cost_summary(&inst, &s).total_opportunity_cost, 50.0);
    }

    #[test]
    fn price_shift_breaks_marginal_hourly_bid() {
        let (inst, mut s) = toy_case_i();
        s.prices[0][0] += 1.0;
        let r = verify_equilibrium(&inst, &s, &Tolerances::default());
        let cc = r.family(Family::Complementarity).unwrap();
        assert!(!cc.passed);
        assert!(cc.violations.iter().any(|v| v.subject == "A" && v.condition == "hourly_dual"));
    }

    #[test]
    fn zero_price_all_rejected_crossing_pair_fails_dual() {
        let inst = crossing_pair();
        let s = ClearingSolution::zeros(&inst, 0.0);
        let r = verify_equilibrium(&inst, &s, &Tolerances::default());
        assert!(!r.family(Family::Dual).unwrap().passed);
        assert!(r.family(Family::Primal).unwrap().passed);
    }

    #[test]
    fn unaccepted_mic_passes_vacuously() {
        let inst = crate::fixtures::mic_market(1e6);
        let s = ClearingSolution::zeros(&inst, 0.0);
        let f = verify_mic_income(&inst, &s, 1e-5);
        assert!(f.passed);
        assert_eq!(f.checked, 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (inst, mut s) = toy_case_i();
        s.hourly_acceptance.pop();
        let r = verify_equilibrium(&inst, &s, &Tolerances::default());
        assert!(!r.passed);
        assert_eq!(r.failed_families(), vec![Family::Primal]);
    }
}
