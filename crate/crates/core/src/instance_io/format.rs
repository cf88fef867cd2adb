use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::core_model::{
    AtcLine, BlockBid, ExportTerm, HourlyBid, Instance, MicBid, MicSuborder, Network, NetworkRow,
};

use super::IoError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub meta: Meta,
    pub network: NetworkSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hourly_bids: Vec<HourlyEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_bids: Vec<BlockEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mic_bids: Vec<MicEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub price_cap: f64,
    #[serde(default = "default_currency")]
    pub currency: String,
}

fn default_currency() -> String {
    "EUR".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub locations: Vec<String>,
    pub periods: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atc: Option<AtcSection>,
    #[serde(default, rename = "abstract", skip_serializing_if = "Option::is_none")]
    pub abstract_form: Option<AbstractSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtcSection {
    pub lines: Vec<AtcEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtcEntry {
    pub from: String,
    pub to: String,
    pub capacity: Vec<f64>,
    /// Defaults to `capacity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_capacity: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractSection {
    pub basis: Vec<String>,
    #[serde(default)]
    pub export_coeffs: Vec<ExportEntry>,
    #[serde(default)]
    pub rows: Vec<RowEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportEntry {
    pub basis: String,
    pub location: String,
    pub period: String,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowEntry {
    pub name: String,
    pub coeffs: Vec<RowCoeff>,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowCoeff {
    pub basis: String,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HourlyEntry {
    pub id: String,
    pub location: String,
    pub period: String,
    pub power: f64,
    pub limit_price: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub id: String,
    pub location: String,
    /// One entry per period, in network period order.
    pub powers: Vec<f64>,
    pub limit_price: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicEntry {
    pub id: String,
    pub fixed_cost: f64,
    #[serde(default)]
    pub variable_cost: f64,
    pub suborders: Vec<SuborderEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuborderEntry {
    pub location: String,
    pub period: String,
    pub power: f64,
    pub limit_price: f64,
}

struct Names<'a> {
    what: &'static str,
    index: HashMap<&'a str, usize>,
}

impl<'a> Names<'a> {
    fn new(what: &'static str, names: &'a [String]) -> Result<Self, IoError> {
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.as_str(), i).is_some() {
                return Err(IoError::Schema(format!("duplicate {what} name {n:?}")));
            }
        }
        Ok(Names { what, index })
    }

    fn get(&self, name: &str, context: impl FnOnce() -> String) -> Result<usize, IoError> {
        self.index.get(name).copied().ok_or_else(|| {
            IoError::Schema(format!("{}: unknown {} {name:?}", context(), self.what))
        })
    }
}

impl InstanceFile {
    /// Converts to a validated [`Instance`], expanding ATC lines.
    pub fn to_instance(&self) -> Result<Instance, IoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(IoError::UnsupportedVersion(self.format_version));
        }
        let net = &self.network;
        let locs = Names::new("location", &net.locations)?;
        let pers = Names::new("period", &net.periods)?;
        let network = match (&net.atc, &net.abstract_form) {
            (Some(_), Some(_)) => {
                return Err(IoError::Schema(
                    "network: give either [network.atc] or [network.abstract], not both".into(),
                ))
            }
            (Some(atc), None) => {
                let mut lines = Vec::new();
                for (k, l) in atc.lines.iter().enumerate() {
                    let ctx = || format!("network.atc.lines[{k}]");
                    lines.push(AtcLine {
                        from: locs.get(&l.from, ctx)?,
                        to: locs.get(&l.to, ctx)?,
                        capacity: l.capacity.clone(),
                        reverse_capacity: l.reverse_capacity.clone().unwrap_or_else(|| l.capacity.clone()),
                    });
                }
                Network::from_atc(net.locations.clone(), net.periods.clone(), lines)
            }
            (None, Some(abs)) => {
                let basis = Names::new("basis", &abs.basis)?;
                let mut export_coeffs = Vec::new();
                for (k, e) in abs.export_coeffs.iter().enumerate() {
                    let ctx = || format!("network.abstract.export_coeffs[{k}]");
                    export_coeffs.push(ExportTerm {
                        basis: basis.get(&e.basis, ctx)?,
                        location: locs.get(&e.location, ctx)?,
                        period: pers.get(&e.period, ctx)?,
                        coeff: e.coeff,
                    });
                }
                let mut rows = Vec::new();
                for r in &abs.rows {
                    let mut coeffs = Vec::new();
                    for c in &r.coeffs {
                        coeffs.push((basis.get(&c.basis, || format!("network row {}", r.name))?, c.coeff));
                    }
                    rows.push(NetworkRow {
                        name: r.name.clone(),
                        coeffs,
                        capacity: r.capacity,
                    });
                }
                Network {
                    locations: net.locations.clone(),
                    periods: net.periods.clone(),
                    basis: abs.basis.clone(),
                    export_coeffs,
                    rows,
                    atc: None,
                }
            }
            (None, None) => Network::isolated(net.locations.clone(), net.periods.clone()),
        };

        let mut hourly = Vec::new();
        for b in &self.hourly_bids {
            let ctx = || format!("hourly bid {}", b.id);
            hourly.push(HourlyBid {
                id: b.id.clone(),
                location: locs.get(&b.location, ctx)?,
                period: pers.get(&b.period, ctx)?,
                power: b.power,
                limit_price: b.limit_price,
            });
        }
        let mut blocks = Vec::new();
        for b in &self.block_bids {
            blocks.push(BlockBid {
                id: b.id.clone(),
                location: locs.get(&b.location, || format!("block bid {}", b.id))?,
                powers: b.powers.clone(),
                limit_price: b.limit_price,
            });
        }
        let mut mics = Vec::new();
        for c in &self.mic_bids {
            let mut suborders = Vec::new();
            for (h, s) in c.suborders.iter().enumerate() {
                let ctx = || format!("MIC bid {} suborder {h}", c.id);
                suborders.push(MicSuborder {
                    location: locs.get(&s.location, ctx)?,
                    period: pers.get(&s.period, ctx)?,
                    power: s.power,
                    limit_price: s.limit_price,
                });
            }
            mics.push(MicBid {
                id: c.id.clone(),
                fixed_cost: c.fixed_cost,
                variable_cost: c.variable_cost,
                suborders,
            });
        }
        Ok(Instance::new(hourly, blocks, mics, network, self.meta.price_cap)?)
    }

    pub fn from_instance(instance: &Instance, currency: &str) -> Self {
        let net = &instance.network;
        let loc = |l: usize| net.locations[l].clone();
        let per = |t: usize| net.periods[t].clone();
        let (atc, abstract_form) = match &net.atc {
            Some(lines) => (
                Some(AtcSection {
                    lines: lines
                        .iter()
                        .map(|l| AtcEntry {
                            from: loc(l.from),
                            to: loc(l.to),
                            capacity: l.capacity.clone(),
                            reverse_capacity: (l.reverse_capacity != l.capacity)
                                .then(|| l.reverse_capacity.clone()),
                        })
                        .collect(),
                }),
                None,
            ),
            None if net.basis.is_empty() && net.rows.is_empty() => (None, None),
            None => (
                None,
                Some(AbstractSection {
                    basis: net.basis.clone(),
                    export_coeffs: net
                        .export_coeffs
                        .iter()
                        .map(|e| ExportEntry {
                            basis: net.basis[e.basis].clone(),
                            location: loc(e.location),
                            period: per(e.period),
                            coeff: e.coeff,
                        })
                        .collect(),
                    rows: net
                        .rows
                        .iter()
                        .map(|r| RowEntry {
                            name: r.name.clone(),
                            coeffs: r
                                .coeffs
                                .iter()
                                .map(|(k, a)| RowCoeff {
                                    basis: net.basis[*k].clone(),
                                    coeff: *a,
                                })
                                .collect(),
                            capacity: r.capacity,
                        })
                        .collect(),
                }),
            ),
        };
        InstanceFile {
            format_version: FORMAT_VERSION,
            meta: Meta {
                price_cap: instance.price_cap,
                currency: currency.to_owned(),
            },
            network: NetworkSection {
                locations: net.locations.clone(),
                periods: net.periods.clone(),
                atc,
                abstract_form,
            },
            hourly_bids: instance
                .hourly_bids
                .iter()
                .map(|b| HourlyEntry {
                    id: b.id.clone(),
                    location: loc(b.location),
                    period: per(b.period),
                    power: b.power,
                    limit_price: b.limit_price,
                })
                .collect(),
            block_bids: instance
                .block_bids
                .iter()
                .map(|b| BlockEntry {
                    id: b.id.clone(),
                    location: loc(b.location),
                    powers: b.powers.clone(),
                    limit_price: b.limit_price,
                })
                .collect(),
            mic_bids: instance
                .mic_bids
                .iter()
                .map(|c| MicEntry {
                    id: c.id.clone(),
                    fixed_cost: c.fixed_cost,
                    variable_cost: c.variable_cost,
                    suborders: c
                        .suborders
                        .iter()
                        .map(|s| SuborderEntry {
                            location: loc(s.location),
                            period: per(s.period),
                            power: s.power,
                            limit_price: s.limit_price,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
