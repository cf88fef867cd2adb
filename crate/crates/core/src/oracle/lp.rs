//! Fixed-selection LPs written directly from LP duality, without the MILP
//! builder.

use crate::core_model::{
    total_opportunity_cost, traded_volume_unchecked, welfare_unchecked, ClearingSolution,
    Instance, MarketRules, ObjectiveKind,
};
use crate::milp_builder::{ColId, MilpModel, ModelForm, Sense};
use crate::solver_backend::{HighsBackend, SolveOptions, SolverBackend, SolverError};

use super::Selection;

const INF: f64 = f64::INFINITY;

struct PrimalCols {
    x: Vec<ColId>,
    /// `None` for suborders of rejected MIC bids.
    x_sub: Vec<Vec<Option<ColId>>>,
    n: Vec<ColId>,
}

struct DualCols {
    pi: Vec<Vec<ColId>>,
    v: Vec<ColId>,
    s: Vec<ColId>,
    s_sub: Vec<Vec<Option<ColId>>>,
    s_mic: Vec<Option<ColId>>,
    s_block: Vec<Option<ColId>>,
    d_a: Vec<Option<ColId>>,
    d_r: Vec<Option<ColId>>,
}

fn options() -> SolveOptions {
    SolveOptions {
        thread_count: Some(1),
        ..SolveOptions::default()
    }
}

fn add_primal(m: &mut MilpModel, inst: &Instance, sel: &Selection) -> (PrimalCols, Vec<(ColId, f64)>, f64) {
    let net = &inst.network;
    let x: Vec<ColId> = inst.hourly_bids.iter().map(|_| m.add_column("x", 0.0, 1.0)).collect();
    let x_sub: Vec<Vec<Option<ColId>>> = inst
        .mic_bids
        .iter()
        .zip(&sel.mics)
        .map(|(c, on)| {
            c.suborders
                .iter()
                .map(|_| on.then(|| m.add_column("xh", 0.0, 1.0)))
                .collect()
        })
        .collect();
    let n: Vec<ColId> = net.basis.iter().map(|_| m.add_column("n", -INF, INF)).collect();

    let mut rows = vec![vec![Vec::new(); net.num_periods()]; net.num_locations()];
    let mut rhs = vec![vec![0.0; net.num_periods()]; net.num_locations()];
    for (b, c) in inst.hourly_bids.iter().zip(&x) {
        rows[b.location][b.period].push((*c, b.power));
    }
    for (mic, cols) in inst.mic_bids.iter().zip(&x_sub) {
        for (s, c) in mic.suborders.iter().zip(cols) {
            if let Some(c) = c {
                rows[s.location][s.period].push((*c, s.power));
            }
        }
    }
    let mut constant = 0.0;
    for (b, on) in inst.block_bids.iter().zip(&sel.blocks) {
        if *on {
            constant += b.limit_price * b.total_power();
            for (t, p) in b.active_periods() {
                rhs[b.location][t] -= p;
            }
        }
    }
    for e in &net.export_coeffs {
        rows[e.location][e.period].push((n[e.basis], -e.coeff));
    }
    for (l, per) in rows.into_iter().enumerate() {
        for (t, terms) in per.into_iter().enumerate() {
            m.add_eq("bal", terms, rhs[l][t]);
        }
    }
    for row in &net.rows {
        m.add_le("net", row.coeffs.iter().map(|(k, a)| (n[*k], *a)).collect(), row.capacity);
    }

    let mut welfare: Vec<(ColId, f64)> = inst
        .hourly_bids
        .iter()
        .zip(&x)
        .map(|(b, c)| (*c, b.limit_price * b.power))
        .collect();
    for (mic, cols) in inst.mic_bids.iter().zip(&x_sub) {
        for (s, c) in mic.suborders.iter().zip(cols) {
            if let Some(c) = c {
                welfare.push((*c, s.limit_price * s.power));
            }
        }
    }
    (PrimalCols { x, x_sub, n }, welfare, constant)
}

fn add_dual(
    m: &mut MilpModel,
    inst: &Instance,
    sel: &Selection,
    rules: MarketRules,
) -> (DualCols, Vec<(ColId, f64)>) {
    let net = &inst.network;
    let cap = inst.price_cap;
    let pi: Vec<Vec<ColId>> = (0..net.num_locations())
        .map(|_| (0..net.num_periods()).map(|_| m.add_column("pi", -cap, cap)).collect())
        .collect();
    let v: Vec<ColId> = net.rows.iter().map(|_| m.add_column("v", 0.0, INF)).collect();
    let mut objective = Vec::new();

    let s: Vec<ColId> = inst.hourly_bids.iter().map(|_| m.add_column("s", 0.0, INF)).collect();
    for (b, c) in inst.hourly_bids.iter().zip(&s) {
        m.add_ge(
            "dx",
            vec![(*c, 1.0), (pi[b.location][b.period], b.power)],
            b.power * b.limit_price,
        );
        objective.push((*c, 1.0));
    }

    let mut s_sub = Vec::new();
    let mut s_mic = Vec::new();
    for (mic, on) in inst.mic_bids.iter().zip(&sel.mics) {
        if !*on {
            s_sub.push(vec![None; mic.suborders.len()]);
            s_mic.push(None);
            continue;
        }
        let subs: Vec<ColId> = mic.suborders.iter().map(|_| m.add_column("sh", 0.0, INF)).collect();
        for (sub, c) in mic.suborders.iter().zip(&subs) {
            m.add_ge(
                "dxh",
                vec![(*c, 1.0), (pi[sub.location][sub.period], sub.power)],
                sub.power * sub.limit_price,
            );
        }
        let sc = m.add_column("sc", 0.0, INF);
        let mut terms = vec![(sc, 1.0)];
        terms.extend(subs.iter().map(|c| (*c, -1.0)));
        m.add_ge("du", terms, 0.0);
        objective.push((sc, 1.0));
        s_sub.push(subs.into_iter().map(Some).collect());
        s_mic.push(Some(sc));
    }

    let mut s_block = Vec::new();
    let mut d_a = Vec::new();
    let mut d_r = Vec::new();
    for (b, on) in inst.block_bids.iter().zip(&sel.blocks) {
        let mut terms: Vec<(ColId, f64)> = b
            .active_periods()
            .map(|(t, p)| (pi[b.location][t], p))
            .collect();
        if *on {
            let sj = m.add_column("sj", 0.0, INF);
            let loss_cap = if rules == MarketRules::Pcr { 0.0 } else { INF };
            let da = m.add_column("da", 0.0, loss_cap);
            terms.push((sj, 1.0));
            terms.push((da, -1.0));
            objective.push((sj, 1.0));
            objective.push((da, -1.0));
            s_block.push(Some(sj));
            d_a.push(Some(da));
            d_r.push(None);
        } else {
            let dr = m.add_column("dr", 0.0, INF);
            terms.push((dr, 1.0));
            s_block.push(None);
            d_a.push(None);
            d_r.push(Some(dr));
        }
        m.add_ge("dy", terms, b.total_power() * b.limit_price);
    }

    for k in 0..net.basis_size() {
        let mut terms: Vec<(ColId, f64)> = net.constraint_column(k).map(|(r, a)| (v[r], a)).collect();
        terms.extend(net.basis_column(k).map(|(l, t, e)| (pi[l][t], -e)));
        m.add_eq("dn", terms, 0.0);
    }
    for (row, c) in net.rows.iter().zip(&v) {
        objective.push((*c, row.capacity));
    }
    (
        DualCols {
            pi,
            v,
            s,
            s_sub,
            s_mic,
            s_block,
            d_a,
            d_r,
        },
        objective,
    )
}

/// Welfare of the fixed selection, `None` if its primal LP is infeasible.
pub(crate) fn fixed_welfare(inst: &Instance, sel: &Selection) -> Result<Option<f64>, SolverError> {
    let mut m = MilpModel::new(ModelForm::Primal);
    let (_, welfare, constant) = add_primal(&mut m, inst, sel);
    for (c, a) in welfare {
        m.columns[c.0].cost += a;
    }
    m.sense = Sense::Maximize;
    match HighsBackend.solve_lp(&m, &options()) {
        Ok(out) => Ok(Some(out.objective + constant)),
        Err(e) if e.is_infeasible() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Optimal primal face times optimal dual face, with the linear income rows
/// of accepted MIC bids, optimized for `objective`.
pub(crate) fn joint_extreme(
    inst: &Instance,
    sel: &Selection,
    rules: MarketRules,
    welfare_star: f64,
    objective: ObjectiveKind,
) -> Result<Option<ClearingSolution>, SolverError> {
    // The face slack bounds how far the witness may trade welfare for the
    // secondary objective, so try a tight one first.
    for rel in [1e-12, 1e-9] {
        let eps = rel * (1.0 + welfare_star.abs());
        let m = joint_model(inst, sel, rules, welfare_star, eps, objective);
        match HighsBackend.solve_lp(&m.0, &options()) {
            Ok(out) => return Ok(Some(witness(inst, sel, rules, objective, &m.1, &m.2, &out.columns))),
            Err(e) if e.is_infeasible() => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn joint_model(
    inst: &Instance,
    sel: &Selection,
    rules: MarketRules,
    welfare_star: f64,
    eps: f64,
    objective: ObjectiveKind,
) -> (MilpModel, PrimalCols, DualCols) {
    let mut m = MilpModel::new(ModelForm::Primal);
    let (pc, welfare, constant) = add_primal(&mut m, inst, sel);
    let (dc, dual_obj) = add_dual(&mut m, inst, sel, rules);
    m.add_ge("primal_face", welfare, welfare_star - constant - eps);
    m.add_le("dual_face", dual_obj, welfare_star + eps);
    for (c, mic) in inst.mic_bids.iter().enumerate() {
        let Some(sc) = dc.s_mic[c] else { continue };
        let mut terms = vec![(sc, 1.0)];
        for (s, x) in mic.suborders.iter().zip(&pc.x_sub[c]) {
            let x = x.expect("accepted MIC has suborder columns");
            terms.push((x, -s.power * s.limit_price + s.power * mic.variable_cost));
        }
        m.add_ge("mic", terms, mic.fixed_cost);
    }
    match objective {
        ObjectiveKind::Welfare | ObjectiveKind::Volume => {
            for (b, x) in inst.hourly_bids.iter().zip(&pc.x) {
                if b.power > 0.0 {
                    m.columns[x.0].cost += b.power;
                }
            }
            m.sense = Sense::Maximize;
        }
        ObjectiveKind::MinOpportunityCost => {
            for c in dc.d_r.iter().flatten() {
                m.columns[c.0].cost += 1.0;
            }
            m.sense = Sense::Minimize;
        }
    }
    (m, pc, dc)
}

fn witness(
    inst: &Instance,
    sel: &Selection,
    rules: MarketRules,
    objective: ObjectiveKind,
    pc: &PrimalCols,
    dc: &DualCols,
    v: &[f64],
) -> ClearingSolution {
    let val = |c: &ColId| v[c.0];
    let opt = |c: &Option<ColId>| c.map(|c| v[c.0]).unwrap_or(0.0);
    let mut sol = ClearingSolution::zeros(inst, 0.0);
    sol.rules = rules;
    sol.objective = objective;
    sol.hourly_acceptance = pc.x.iter().map(val).collect();
    sol.suborder_acceptance = pc.x_sub.iter().map(|r| r.iter().map(opt).collect()).collect();
    sol.block_acceptance = sel.blocks.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
    sol.mic_acceptance = sel.mics.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
    sol.flows = pc.n.iter().map(val).collect();
    sol.prices = dc.pi.iter().map(|r| r.iter().map(val).collect()).collect();
    sol.network_duals = dc.v.iter().map(val).collect();
    sol.hourly_surplus = dc.s.iter().map(val).collect();
    sol.mic_surplus = dc.s_mic.iter().map(opt).collect();
    sol.block_surplus = dc.s_block.iter().map(opt).collect();
    sol.block_loss_bound = dc.d_a.iter().map(opt).collect();
    sol.block_opportunity_bound = dc.d_r.iter().map(opt).collect();
    for (c, mic) in inst.mic_bids.iter().enumerate() {
        if sel.mics[c] {
            sol.suborder_surplus[c] = dc.s_sub[c].iter().map(opt).collect();
        } else {
            sol.suborder_surplus[c] = mic
                .suborders
                .iter()
                .map(|s| (s.power * (s.limit_price - sol.prices[s.location][s.period])).max(0.0))
                .collect();
            sol.mic_rejection_bound[c] = sol.suborder_surplus[c].iter().sum();
        }
    }
    sol.welfare = welfare_unchecked(inst, &sol);
    sol.traded_volume = traded_volume_unchecked(inst, &sol);
    sol.total_opportunity_cost = total_opportunity_cost(inst, &sol);
    sol
}
