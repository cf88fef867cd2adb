//! Solver-agnostic MILP representation.

use serde::{Deserialize, Serialize};

use crate::core_model::ObjectiveKind;

use super::big_m::BigMSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

/// `lower <= sum coeff * col <= upper`; either side may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(ColId, f64)>,
    pub lower: f64,
    pub upper: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(c, a)| a * values[c.0]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchDirection {
    Down,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchHint {
    pub column: ColId,
    pub direction: BranchDirection,
}

/// Which feasible set a market model encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelForm {
    /// Unrestricted welfare problem without dual rows.
    Primal,
    /// Primal-dual set with `d^a`, `d^r`, `du^r` columns; PAB allowed.
    Umfs,
    /// UMFS with every `d^a_j` fixed to zero; columns retained.
    UmfsNoPab,
    /// Merged dispatcher rows, `d^a`, `d^r`, `du^r` eliminated.
    PcrFs,
}

/// Maps model columns back to market quantities.
///
/// `None` marks a quantity that has no column in the current form and must
/// be derived from the others.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub hourly_acceptance: Vec<ColId>,
    pub suborder_acceptance: Vec<Vec<ColId>>,
    pub block_acceptance: Vec<ColId>,
    pub mic_acceptance: Vec<ColId>,
    pub flows: Vec<ColId>,
    pub prices: Vec<Vec<ColId>>,
    pub network_duals: Vec<ColId>,
    pub hourly_surplus: Vec<ColId>,
    pub block_surplus: Vec<ColId>,
    pub mic_surplus: Vec<ColId>,
    pub suborder_surplus: Vec<Vec<ColId>>,
    pub block_loss_bound: Vec<Option<ColId>>,
    pub block_opportunity_bound: Vec<Option<ColId>>,
    pub mic_rejection_bound: Vec<Option<ColId>>,
}

impl ColumnRoles {
    fn remap(&mut self, map: &[Option<ColId>]) {
        let f = |c: &mut ColId| *c = map[c.0].expect("retained column");
        let g = |c: &mut Option<ColId>| *c = c.and_then(|x| map[x.0]);
        self.hourly_acceptance.iter_mut().for_each(f);
        self.suborder_acceptance.iter_mut().flatten().for_each(f);
        self.block_acceptance.iter_mut().for_each(f);
        self.mic_acceptance.iter_mut().for_each(f);
        self.flows.iter_mut().for_each(f);
        self.prices.iter_mut().flatten().for_each(f);
        self.network_duals.iter_mut().for_each(f);
        self.hourly_surplus.iter_mut().for_each(f);
        self.block_surplus.iter_mut().for_each(f);
        self.mic_surplus.iter_mut().for_each(f);
        self.suborder_surplus.iter_mut().flatten().for_each(f);
        self.block_loss_bound.iter_mut().for_each(g);
        self.block_opportunity_bound.iter_mut().for_each(g);
        self.mic_rejection_bound.iter_mut().for_each(g);
    }
}

/// Indices of the rows that later transformations need to find.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowRoles {
    pub balance: Vec<Vec<usize>>,
    pub block_dual: Vec<usize>,
    pub mic_dual: Vec<usize>,
    pub opportunity_cap: Vec<Option<usize>>,
    pub loss_cap: Vec<Option<usize>>,
    pub rejection_cap: Vec<Option<usize>>,
    pub mic_income: Vec<Option<usize>>,
    pub objective_equality: Option<usize>,
}

impl RowRoles {
    fn remap(&mut self, map: &[Option<usize>]) {
        let f = |r: &mut usize| *r = map[*r].expect("retained row");
        let g = |r: &mut Option<usize>| *r = r.and_then(|x| map[x]);
        self.balance.iter_mut().flatten().for_each(f);
        self.block_dual.iter_mut().for_each(f);
        self.mic_dual.iter_mut().for_each(f);
        self.opportunity_cap.iter_mut().for_each(g);
        self.loss_cap.iter_mut().for_each(g);
        self.rejection_cap.iter_mut().for_each(g);
        self.mic_income.iter_mut().for_each(g);
        g(&mut self.objective_equality);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub sense: Sense,
    pub objective: Option<ObjectiveKind>,
    pub form: ModelForm,
    pub roles: ColumnRoles,
    pub row_roles: RowRoles,
    pub big_m: BigMSet,
    pub hints: Vec<BranchHint>,
    pub warm_start: Option<Vec<f64>>,
}

impl MilpModel {
    pub fn new(form: ModelForm) -> Self {
        MilpModel {
            columns: Vec::new(),
            rows: Vec::new(),
            sense: Sense::Maximize,
            objective: None,
            form,
            roles: ColumnRoles::default(),
            row_roles: RowRoles::default(),
            big_m: BigMSet::default(),
            hints: Vec::new(),
            warm_start: None,
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> ColId {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Continuous,
            lower,
            upper,
            cost: 0.0,
        });
        ColId(self.columns.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> ColId {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Binary,
            lower: 0.0,
            upper: 1.0,
            cost: 0.0,
        });
        ColId(self.columns.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(ColId, f64)>,
        lower: f64,
        upper: f64,
    ) -> usize {
        let terms = terms.into_iter().filter(|(_, a)| *a != 0.0).collect();
        self.rows.push(Row {
            name: name.into(),
            terms,
            lower,
            upper,
        });
        self.rows.len() - 1
    }

    pub fn add_ge(&mut self, name: impl Into<String>, terms: Vec<(ColId, f64)>, rhs: f64) -> usize {
        self.add_row(name, terms, rhs, f64::INFINITY)
    }

    pub fn add_le(&mut self, name: impl Into<String>, terms: Vec<(ColId, f64)>, rhs: f64) -> usize {
        self.add_row(name, terms, f64::NEG_INFINITY, rhs)
    }

    pub fn add_eq(&mut self, name: impl Into<String>, terms: Vec<(ColId, f64)>, rhs: f64) -> usize {
        self.add_row(name, terms, rhs, rhs)
    }

    pub fn binaries(&self) -> impl Iterator<Item = ColId> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Binary)
            .map(|(i, _)| ColId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.cost * v).sum()
    }

    pub fn clear_objective(&mut self) {
        for c in &mut self.columns {
            c.cost = 0.0;
        }
        self.objective = None;
        self.sense = Sense::Maximize;
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let cols = self
            .columns
            .iter()
            .zip(values)
            .map(|(c, v)| (c.lower - v).max(v - c.upper).max(0.0));
        let rows = self.rows.iter().map(|r| {
            let a = r.activity(values);
            (r.lower - a).max(a - r.upper).max(0.0)
        });
        cols.chain(rows).fold(0.0, f64::max)
    }

    /// Drops the marked columns and rows, renumbering everything else.
    pub(crate) fn remove(&mut self, drop_cols: &[bool], drop_rows: &[bool]) {
        let mut col_map = Vec::with_capacity(self.columns.len());
        let mut next = 0;
        for d in drop_cols {
            if *d {
                col_map.push(None);
            } else {
                col_map.push(Some(ColId(next)));
                next += 1;
            }
        }
        let mut row_map = Vec::with_capacity(self.rows.len());
        let mut next = 0;
        for d in drop_rows {
            if *d {
                row_map.push(None);
            } else {
                row_map.push(Some(next));
                next += 1;
            }
        }
        let columns = std::mem::take(&mut self.columns);
        self.columns = columns
            .into_iter()
            .zip(drop_cols)
            .filter(|(_, d)| !**d)
            .map(|(c, _)| c)
            .collect();
        let rows = std::mem::take(&mut self.rows);
        self.rows = rows
            .into_iter()
            .zip(drop_rows)
            .filter(|(_, d)| !**d)
            .map(|(mut r, _)| {
                r.terms.retain(|(c, _)| col_map[c.0].is_some());
                for t in &mut r.terms {
                    t.0 = col_map[t.0 .0].unwrap();
                }
                r
            })
            .collect();
        self.roles.remap(&col_map);
        self.row_roles.remap(&row_map);
        self.hints.retain_mut(|h| match col_map[h.column.0] {
            Some(c) => {
                h.column = c;
                true
            }
            None => false,
        });
        if let Some(ws) = self.warm_start.take() {
            self.warm_start = Some(
                ws.into_iter()
                    .zip(drop_cols)
                    .filter(|(_, d)| !**d)
                    .map(|(v, _)| v)
                    .collect(),
            );
        }
    }
}
