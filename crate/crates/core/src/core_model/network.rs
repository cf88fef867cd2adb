use serde::{Deserialize, Serialize};

/// Coefficient `e^k_{l,t}` of basis element `k` in the balance row of `(l, t)`.
///
/// The balance row reads `sum of P x at (l,t) = sum_k e^k_{l,t} n_k`, so a
/// positive coefficient is a net import into the location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportTerm {
    pub basis: usize,
    pub location: usize,
    pub period: usize,
    pub coeff: f64,
}

/// One network constraint `sum_k a_{m,k} n_k <= w_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub capacity: f64,
}

/// An available-transfer-capacity interconnection between two locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtcLine {
    pub from: usize,
    pub to: usize,
    /// Per-period limit on flow `from -> to`.
    pub capacity: Vec<f64>,
    /// Per-period limit on flow `to -> from`.
    pub reverse_capacity: Vec<f64>,
}

/// Abstract linear transmission model. Free variables `n_k` enter the
/// balance rows through `export_coeffs` and are bounded by `rows`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub locations: Vec<String>,
    pub periods: Vec<String>,
    pub basis: Vec<String>,
    pub export_coeffs: Vec<ExportTerm>,
    pub rows: Vec<NetworkRow>,
    /// Set when the abstract data was expanded from ATC lines.
    pub atc: Option<Vec<AtcLine>>,
}

impl Network {
    /// A network with no transmission: every `(l, t)` balances locally.
    pub fn isolated(locations: Vec<String>, periods: Vec<String>) -> Self {
        Network {
            locations,
            periods,
            ..Default::default()
        }
    }

    /// Expands ATC lines into the abstract form.
    ///
    /// One free flow variable per line and period (positive means `from -> to`),
    /// with a forward and a backward capacity row.
    pub fn from_atc(locations: Vec<String>, periods: Vec<String>, lines: Vec<AtcLine>) -> Self {
        let mut basis = Vec::new();
        let mut export_coeffs = Vec::new();
        let mut rows = Vec::new();
        for (li, line) in lines.iter().enumerate() {
            let name = format!("{}-{}", locations[line.from], locations[line.to]);
            for (t, period) in periods.iter().enumerate() {
                let k = basis.len();
                basis.push(format!("flow[{li}:{name}@{period}]"));
                export_coeffs.push(ExportTerm {
                    basis: k,
                    location: line.from,
                    period: t,
                    coeff: -1.0,
                });
                export_coeffs.push(ExportTerm {
                    basis: k,
                    location: line.to,
                    period: t,
                    coeff: 1.0,
                });
                rows.push(NetworkRow {
                    name: format!("atc_fwd[{li}:{name}@{period}]"),
                    coeffs: vec![(k, 1.0)],
                    capacity: line.capacity[t],
                });
                rows.push(NetworkRow {
                    name: format!("atc_bwd[{li}:{name}@{period}]"),
                    coeffs: vec![(k, -1.0)],
                    capacity: line.reverse_capacity[t],
                });
            }
        }
        Network {
            locations,
            periods,
            basis,
            export_coeffs,
            rows,
            atc: Some(lines),
        }
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn basis_size(&self) -> usize {
        self.basis.len()
    }

    /// Column `k` of the export matrix as `(location, period, coeff)` triples.
    pub fn basis_column(&self, k: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.export_coeffs
            .iter()
            .filter(move |e| e.basis == k)
            .map(|e| (e.location, e.period, e.coeff))
    }

    /// Column `k` of the constraint matrix as `(row, a_{m,k})` pairs.
    pub fn constraint_column(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(m, row)| {
            row.coeffs
                .iter()
                .filter(move |(kk, _)| *kk == k)
                .map(move |(_, a)| (m, *a))
        })
    }

    /// Net import `sum_k e^k_{l,t} n_k` into every `(l, t)`.
    pub fn net_imports(&self, flows: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.num_periods()]; self.num_locations()];
        for e in &self.export_coeffs {
            out[e.location][e.period] += e.coeff * flows[e.basis];
        }
        out
    }
}
