use crate::core_model::Instance;

use super::big_m::BigMSet;
use super::model::{BranchDirection, BranchHint, ColId, MilpModel, ModelForm};
use super::BuildError;

const INF: f64 = f64::INFINITY;

/// Columns shared by the primal-only and the primal-dual models.
fn add_primal_block(model: &mut MilpModel, instance: &Instance) {
    let net = &instance.network;
    let hourly: Vec<ColId> = instance
        .hourly_bids
        .iter()
        .map(|b| model.add_column(format!("x[{}]", b.id), 0.0, 1.0))
        .collect();
    let suborders: Vec<Vec<ColId>> = instance
        .mic_bids
        .iter()
        .map(|c| {
            (0..c.suborders.len())
                .map(|h| model.add_column(format!("x[{}#{h}]", c.id), 0.0, 1.0))
                .collect()
        })
        .collect();
    let blocks: Vec<ColId> = instance
        .block_bids
        .iter()
        .map(|b| model.add_binary(format!("y[{}]", b.id)))
        .collect();
    let mics: Vec<ColId> = instance
        .mic_bids
        .iter()
        .map(|c| model.add_binary(format!("u[{}]", c.id)))
        .collect();
    let flows: Vec<ColId> = net
        .basis
        .iter()
        .map(|k| model.add_column(format!("n[{k}]"), -INF, INF))
        .collect();

    // x_hc <= u_c
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        for h in 0..mic.suborders.len() {
            model.add_le(
                format!("link[{}#{h}]", mic.id),
                vec![(suborders[c][h], 1.0), (mics[c], -1.0)],
                0.0,
            );
        }
    }

    // Balance: sum P x - sum_k e n = 0
    let mut balance_terms = vec![vec![Vec::new(); net.num_periods()]; net.num_locations()];
    for (b, x) in instance.hourly_bids.iter().zip(&hourly) {
        balance_terms[b.location][b.period].push((*x, b.power));
    }
    for (b, y) in instance.block_bids.iter().zip(&blocks) {
        for (t, p) in b.active_periods() {
            balance_terms[b.location][t].push((*y, p));
        }
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        for (h, s) in mic.suborders.iter().enumerate() {
            balance_terms[s.location][s.period].push((suborders[c][h], s.power));
        }
    }
    for e in &net.export_coeffs {
        balance_terms[e.location][e.period].push((flows[e.basis], -e.coeff));
    }
    let mut balance_rows = vec![Vec::new(); net.num_locations()];
    for (l, per_loc) in balance_terms.into_iter().enumerate() {
        for (t, terms) in per_loc.into_iter().enumerate() {
            let name = format!("balance[{}@{}]", net.locations[l], net.periods[t]);
            balance_rows[l].push(model.add_eq(name, merge_terms(terms), 0.0));
        }
    }

    for row in &net.rows {
        let terms = row.coeffs.iter().map(|(k, a)| (flows[*k], *a)).collect();
        model.add_le(format!("net[{}]", row.name), merge_terms(terms), row.capacity);
    }

    model.roles.hourly_acceptance = hourly;
    model.roles.suborder_acceptance = suborders;
    model.roles.block_acceptance = blocks;
    model.roles.mic_acceptance = mics;
    model.roles.flows = flows;
    model.row_roles.balance = balance_rows;
}

/// Sums duplicate column entries so every row lists each column once.
fn merge_terms(mut terms: Vec<(ColId, f64)>) -> Vec<(ColId, f64)> {
    terms.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(ColId, f64)> = Vec::with_capacity(terms.len());
    for (c, a) in terms {
        match out.last_mut() {
            Some((lc, la)) if *lc == c => *la += a,
            _ => out.push((c, a)),
        }
    }
    out.retain(|(_, a)| *a != 0.0);
    out
}

/// Welfare-maximization feasible set without any equilibrium conditions.
///
/// Solving it with fixed binaries gives the fixed-selection LP whose row
/// duals on the balance rows are the market prices.
pub fn build_primal(instance: &Instance) -> Result<MilpModel, BuildError> {
    instance.validate()?;
    let mut model = MilpModel::new(ModelForm::Primal);
    model.big_m = BigMSet::for_instance(instance)?;
    add_primal_block(&mut model, instance);
    Ok(model)
}

/// Uniform market clearing feasible set: primal rows, dual rows, big-M
/// dispatchers and the objective-equality row, without an objective.
pub fn build_umfs(instance: &Instance) -> Result<MilpModel, BuildError> {
    instance.validate()?;
    let big_m = BigMSet::for_instance(instance)?;
    let net = &instance.network;
    let cap = instance.price_cap;
    let mut model = MilpModel::new(ModelForm::Umfs);
    add_primal_block(&mut model, instance);

    let prices: Vec<Vec<ColId>> = (0..net.num_locations())
        .map(|l| {
            (0..net.num_periods())
                .map(|t| {
                    model.add_column(
                        format!("pi[{}@{}]", net.locations[l], net.periods[t]),
                        -cap,
                        cap,
                    )
                })
                .collect()
        })
        .collect();
    let net_duals: Vec<ColId> = net
        .rows
        .iter()
        .map(|r| model.add_column(format!("v[{}]", r.name), 0.0, INF))
        .collect();
    let s_hourly: Vec<ColId> = instance
        .hourly_bids
        .iter()
        .map(|b| model.add_column(format!("s[{}]", b.id), 0.0, INF))
        .collect();
    let s_sub: Vec<Vec<ColId>> = instance
        .mic_bids
        .iter()
        .map(|c| {
            (0..c.suborders.len())
                .map(|h| model.add_column(format!("s[{}#{h}]", c.id), 0.0, INF))
                .collect()
        })
        .collect();
    let s_block: Vec<ColId> = instance
        .block_bids
        .iter()
        .map(|b| model.add_column(format!("s[{}]", b.id), 0.0, INF))
        .collect();
    let s_mic: Vec<ColId> = instance
        .mic_bids
        .iter()
        .map(|c| model.add_column(format!("s[{}]", c.id), 0.0, INF))
        .collect();
    let d_a: Vec<ColId> = instance
        .block_bids
        .iter()
        .map(|b| model.add_column(format!("da[{}]", b.id), 0.0, INF))
        .collect();
    let d_r: Vec<ColId> = instance
        .block_bids
        .iter()
        .map(|b| model.add_column(format!("dr[{}]", b.id), 0.0, INF))
        .collect();
    let du_r: Vec<ColId> = instance
        .mic_bids
        .iter()
        .map(|c| model.add_column(format!("dur[{}]", c.id), 0.0, INF))
        .collect();

    // s_i + P_i pi >= P_i lambda_i
    for (i, b) in instance.hourly_bids.iter().enumerate() {
        model.add_ge(
            format!("dual_x[{}]", b.id),
            vec![(s_hourly[i], 1.0), (prices[b.location][b.period], b.power)],
            b.power * b.limit_price,
        );
    }
    // s_hc + P_hc pi >= P_hc lambda_hc
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        for (h, s) in mic.suborders.iter().enumerate() {
            model.add_ge(
                format!("dual_x[{}#{h}]", mic.id),
                vec![(s_sub[c][h], 1.0), (prices[s.location][s.period], s.power)],
                s.power * s.limit_price,
            );
        }
    }
    // s_j + d^r_j - d^a_j + sum_t P^t pi_t >= P_j lambda_j
    let mut block_dual = Vec::new();
    for (j, b) in instance.block_bids.iter().enumerate() {
        let mut terms = vec![(s_block[j], 1.0), (d_r[j], 1.0), (d_a[j], -1.0)];
        terms.extend(b.active_periods().map(|(t, p)| (prices[b.location][t], p)));
        block_dual.push(model.add_ge(
            format!("dual_y[{}]", b.id),
            terms,
            b.total_power() * b.limit_price,
        ));
    }
    // s_c + du^r_c >= sum_h s_hc
    let mut mic_dual = Vec::new();
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        let mut terms = vec![(s_mic[c], 1.0), (du_r[c], 1.0)];
        terms.extend(s_sub[c].iter().map(|s| (*s, -1.0)));
        mic_dual.push(model.add_ge(format!("dual_u[{}]", mic.id), terms, 0.0));
    }
    // Dispatchers.
    let y = model.roles.block_acceptance.clone();
    let u = model.roles.mic_acceptance.clone();
    let mut opp_cap = Vec::new();
    let mut loss_cap = Vec::new();
    for (j, b) in instance.block_bids.iter().enumerate() {
        opp_cap.push(Some(model.add_le(
            format!("cap_dr[{}]", b.id),
            vec![(d_r[j], 1.0), (y[j], big_m.block[j])],
            big_m.block[j],
        )));
        loss_cap.push(Some(model.add_le(
            format!("cap_da[{}]", b.id),
            vec![(d_a[j], 1.0), (y[j], -big_m.block_loss[j])],
            0.0,
        )));
    }
    let mut rej_cap = Vec::new();
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        rej_cap.push(Some(model.add_le(
            format!("cap_dur[{}]", mic.id),
            vec![(du_r[c], 1.0), (u[c], big_m.mic[c])],
            big_m.mic[c],
        )));
    }
    // sum_m a_{m,k} v_m - sum_{l,t} e^k_{l,t} pi_{l,t} = 0
    for (k, name) in net.basis.iter().enumerate() {
        let mut terms: Vec<(ColId, f64)> = net
            .constraint_column(k)
            .map(|(m, a)| (net_duals[m], a))
            .collect();
        terms.extend(net.basis_column(k).map(|(l, t, e)| (prices[l][t], -e)));
        model.add_eq(format!("dual_n[{name}]"), merge_terms(terms), 0.0);
    }

    // welfare - (sum s + sum w v - sum d^a) >= 0
    let mut terms = welfare_terms(&model, instance);
    terms.extend(s_hourly.iter().map(|c| (*c, -1.0)));
    terms.extend(s_block.iter().map(|c| (*c, -1.0)));
    terms.extend(s_mic.iter().map(|c| (*c, -1.0)));
    terms.extend(d_a.iter().map(|c| (*c, 1.0)));
    terms.extend(
        net.rows
            .iter()
            .zip(&net_duals)
            .map(|(r, v)| (*v, -r.capacity)),
    );
    let obj_row = model.add_ge("objective_equality", terms, 0.0);

    model.roles.prices = prices;
    model.roles.network_duals = net_duals;
    model.roles.hourly_surplus = s_hourly;
    model.roles.suborder_surplus = s_sub;
    model.roles.block_surplus = s_block;
    model.roles.mic_surplus = s_mic;
    model.roles.block_loss_bound = d_a.into_iter().map(Some).collect();
    model.roles.block_opportunity_bound = d_r.into_iter().map(Some).collect();
    model.roles.mic_rejection_bound = du_r.into_iter().map(Some).collect();
    model.row_roles.block_dual = block_dual;
    model.row_roles.mic_dual = mic_dual;
    model.row_roles.opportunity_cap = opp_cap;
    model.row_roles.loss_cap = loss_cap;
    model.row_roles.rejection_cap = rej_cap;
    model.row_roles.mic_income = vec![None; instance.mic_bids.len()];
    model.row_roles.objective_equality = Some(obj_row);
    model.hints = model
        .roles
        .mic_acceptance
        .iter()
        .map(|c| BranchHint {
            column: *c,
            direction: BranchDirection::Down,
        })
        .collect();
    model.big_m = big_m;
    Ok(model)
}

/// Welfare coefficients on the acceptance columns of `model`.
pub(crate) fn welfare_terms(model: &MilpModel, instance: &Instance) -> Vec<(ColId, f64)> {
    let r = &model.roles;
    let mut terms = Vec::new();
    for (b, x) in instance.hourly_bids.iter().zip(&r.hourly_acceptance) {
        terms.push((*x, b.limit_price * b.power));
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        for (h, s) in mic.suborders.iter().enumerate() {
            terms.push((r.suborder_acceptance[c][h], s.limit_price * s.power));
        }
    }
    for (b, y) in instance.block_bids.iter().zip(&r.block_acceptance) {
        terms.push((*y, b.limit_price * b.total_power()));
    }
    terms
}

/// Buy-side volume coefficients on the acceptance columns of `model`.
pub(crate) fn volume_terms(model: &MilpModel, instance: &Instance) -> Vec<(ColId, f64)> {
    let r = &model.roles;
    let mut terms = Vec::new();
    for (b, x) in instance.hourly_bids.iter().zip(&r.hourly_acceptance) {
        if b.power > 0.0 {
            terms.push((*x, b.power));
        }
    }
    for (b, y) in instance.block_bids.iter().zip(&r.block_acceptance) {
        let buy: f64 = b.powers.iter().filter(|p| **p > 0.0).sum();
        if buy > 0.0 {
            terms.push((*y, buy));
        }
    }
    terms
}

/// Adds the linearized minimum income row of every MIC bid:
/// `s_c - sum_h P_hc lambda_hc x_hc + sum_h P_hc V_c x_hc - F_c u_c >= 0`.
pub fn add_mic_constraints(mut model: MilpModel, instance: &Instance) -> MilpModel {
    if model.form == ModelForm::Primal {
        return model;
    }
    for (c, mic) in instance.mic_bids.iter().enumerate() {
        if model.row_roles.mic_income[c].is_some() {
            continue;
        }
        let mut terms = vec![(model.roles.mic_surplus[c], 1.0)];
        for (h, s) in mic.suborders.iter().enumerate() {
            let coeff = -s.power * s.limit_price + s.power * mic.variable_cost;
            terms.push((model.roles.suborder_acceptance[c][h], coeff));
        }
        terms.push((model.roles.mic_acceptance[c], -model.big_m.mic_income[c]));
        let row = model.add_ge(format!("mic_income[{}]", mic.id), merge_terms(terms), 0.0);
        model.row_roles.mic_income[c] = Some(row);
    }
    model
}

/// Fixes every `d^a_j` to zero while keeping the columns, so that
/// `d^r` stays available as an objective.
pub fn forbid_paradoxical_acceptance(mut model: MilpModel) -> Result<MilpModel, BuildError> {
    match model.form {
        ModelForm::Umfs => {
            for c in model.roles.block_loss_bound.iter().flatten() {
                model.columns[c.0].lower = 0.0;
                model.columns[c.0].upper = 0.0;
            }
            model.form = ModelForm::UmfsNoPab;
            Ok(model)
        }
        ModelForm::UmfsNoPab | ModelForm::PcrFs => Ok(model),
        ModelForm::Primal => Err(BuildError::WrongForm("primal model has no dual rows")),
    }
}

/// PCR-FS: forbids paradoxical acceptance and eliminates `d^a`, `d^r`,
/// `du^r` by merging the dispatchers into the dual rows.
///
/// `s_j + M_j (1 - y_j) + sum_t P^t pi >= P lambda` and
/// `s_c + M_c (1 - u_c) >= sum_h s_hc`.
pub fn restrict_to_pcr(mut model: MilpModel) -> Result<MilpModel, BuildError> {
    match model.form {
        ModelForm::PcrFs => return Ok(model),
        ModelForm::Primal => return Err(BuildError::WrongForm("primal model has no dual rows")),
        ModelForm::Umfs | ModelForm::UmfsNoPab => {}
    }
    if model.objective == Some(crate::core_model::ObjectiveKind::MinOpportunityCost) {
        return Err(BuildError::MinOcNeedsOpportunityColumns);
    }
    let mut drop_cols = vec![false; model.columns.len()];
    let mut drop_rows = vec![false; model.rows.len()];
    let nj = model.roles.block_acceptance.len();
    for j in 0..nj {
        let m = model.big_m.block[j];
        let y = model.roles.block_acceptance[j];
        let row = &mut model.rows[model.row_roles.block_dual[j]];
        row.terms.push((y, -m));
        row.lower -= m;
        for c in [
            model.roles.block_loss_bound[j],
            model.roles.block_opportunity_bound[j],
        ]
        .into_iter()
        .flatten()
        {
            drop_cols[c.0] = true;
        }
        for r in [model.row_roles.opportunity_cap[j], model.row_roles.loss_cap[j]]
            .into_iter()
            .flatten()
        {
            drop_rows[r] = true;
        }
    }
    for c in 0..model.roles.mic_acceptance.len() {
        let m = model.big_m.mic[c];
        let u = model.roles.mic_acceptance[c];
        let row = &mut model.rows[model.row_roles.mic_dual[c]];
        row.terms.push((u, -m));
        row.lower -= m;
        if let Some(col) = model.roles.mic_rejection_bound[c] {
            drop_cols[col.0] = true;
        }
        if let Some(r) = model.row_roles.rejection_cap[c] {
            drop_rows[r] = true;
        }
    }
    model.remove(&drop_cols, &drop_rows);
    model.form = ModelForm::PcrFs;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::Network;
    use crate::fixtures::{mic_market, toy_market};
    use crate::milp_builder::ColumnKind;

    #[test]
    fn toy_model_shape() {
        let m = build_umfs(&toy_market()).unwrap();
        assert_eq!(m.num_binaries(), 2);
        assert_eq!(m.row_roles.balance.len(), 1);
        assert_eq!(m.row_roles.balance[0].len(), 1);
        assert!(m.objective.is_none());
        assert_eq!(m.form, ModelForm::Umfs);
    }

    #[test]
    fn empty_instance_builds() {
        let inst = crate::core_model::Instance::empty(
            Network::isolated(vec!["L".into()], vec!["T".into()]),
            10.0,
        );
        let m = build_umfs(&inst).unwrap();
        assert_eq!(m.num_binaries(), 0);
        // The all-zero point with a price in range is feasible.
        let mut v = vec![0.0; m.columns.len()];
        v[m.roles.prices[0][0].0] = 3.0;
        assert!(m.max_violation(&v) == 0.0);
    }

    #[test]
    fn mic_row_is_added_once_without_new_columns() {
        let inst = mic_market(100.0);
        let base = build_umfs(&inst).unwrap();
        let cols = base.columns.len();
        let m = add_mic_constraints(base, &inst);
        assert_eq!(m.columns.len(), cols);
        assert!(m.row_roles.mic_income[0].is_some());
        let rows = m.rows.len();
        let m = add_mic_constraints(m, &inst);
        assert_eq!(m.rows.len(), rows);
    }

    #[test]
    fn no_mic_bids_leaves_model_unchanged() {
        let inst = toy_market();
        let base = build_umfs(&inst).unwrap();
        assert_eq!(add_mic_constraints(base.clone(), &inst), base);
    }

    #[test]
    fn pcr_restriction_removes_auxiliaries_and_is_idempotent() {
        let inst = mic_market(100.0);
        let m = add_mic_constraints(build_umfs(&inst).unwrap(), &inst);
        let before = m.columns.len();
        let p = restrict_to_pcr(m).unwrap();
        // one d^a, one d^r per block, one du^r per MIC bid
        assert_eq!(before - p.columns.len(), inst.mic_bids.len());
        assert!(p.roles.mic_rejection_bound.iter().all(Option::is_none));
        assert!(p.columns.iter().all(|c| !c.name.starts_with("da[")
            && !c.name.starts_with("dr[")
            && !c.name.starts_with("dur[")));
        let again = restrict_to_pcr(p.clone()).unwrap();
        assert_eq!(again, p);
        assert_eq!(
            p.columns.iter().filter(|c| c.kind == ColumnKind::Binary).count(),
            inst.num_binaries()
        );
    }

    #[test]
    fn mic_bids_carry_down_branch_hints() {
        let inst = mic_market(100.0);
        let m = build_umfs(&inst).unwrap();
        assert_eq!(m.hints.len(), 1);
        assert_eq!(m.hints[0].direction, BranchDirection::Down);
        assert_eq!(m.hints[0].column, m.roles.mic_acceptance[0]);
    }

    #[test]
    fn objective_equality_row_is_an_inequality() {
        let m = build_umfs(&toy_market()).unwrap();
        let r = &m.rows[m.row_roles.objective_equality.unwrap()];
        assert_eq!(r.lower, 0.0);
        assert_eq!(r.upper, f64::INFINITY);
    }
}
