use std::fmt;

use serde::{Deserialize, Serialize};

/// Groups of equilibrium conditions checked independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Primal,
    Dual,
    Complementarity,
    PriceRange,
    ObjectiveEquality,
    PcrNoLoss,
    MicIncome,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Primal,
        Family::Dual,
        Family::Complementarity,
        Family::PriceRange,
        Family::ObjectiveEquality,
        Family::PcrNoLoss,
        Family::MicIncome,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::Primal => "primal",
            Family::Dual => "dual",
            Family::Complementarity => "complementarity",
            Family::PriceRange => "price-range",
            Family::ObjectiveEquality => "objective-equality",
            Family::PcrNoLoss => "pcr-no-loss",
            Family::MicIncome => "mic-income",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One condition that exceeded its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: Family,
    /// Short condition name, e.g. `balance` or `hourly_dual`.
    pub condition: String,
    /// Bid id, row name or `(location, period)` label.
    pub subject: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: Family,
    pub tolerance: f64,
    pub max_residual: f64,
    pub checked: usize,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl FamilyResult {
    pub(crate) fn new(family: Family, tolerance: f64) -> Self {
        FamilyResult {
            family,
            tolerance,
            max_residual: 0.0,
            checked: 0,
            passed: true,
            violations: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, condition: &str, subject: impl FnOnce() -> String, residual: f64) {
        self.checked += 1;
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.max_residual = self.max_residual.max(residual);
        if residual > self.tolerance {
            self.passed = false;
            self.violations.push(Violation {
                family: self.family,
                condition: condition.to_owned(),
                subject: subject(),
                residual,
            });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub families: Vec<FamilyResult>,
    pub passed: bool,
}

impl VerificationReport {
    pub(crate) fn from_families(families: Vec<FamilyResult>) -> Self {
        let passed = families.iter().all(|f| f.passed);
        VerificationReport { families, passed }
    }

    pub fn family(&self, family: Family) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.family == family)
    }

    /// Families with at least one violation, in canonical order.
    pub fn failed_families(&self) -> Vec<Family> {
        self.families
            .iter()
            .filter(|f| !f.passed)
            .map(|f| f.family)
            .collect()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.families.iter().flat_map(|f| f.violations.iter())
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fam in &self.families {
            writeln!(
                f,
                "{:<20} {} max={:.3e} tol={:.1e} checked={}",
                fam.family.id(),
                if fam.passed { "pass" } else { "FAIL" },
                fam.max_residual,
                fam.tolerance,
                fam.checked
            )?;
            for v in &fam.violations {
                writeln!(f, "  {} {} residual={:.3e}", v.condition, v.subject, v.residual)?;
            }
        }
        write!(f, "overall {}", if self.passed { "pass" } else { "FAIL" })
    }
}
