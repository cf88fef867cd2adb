use crate::core_model::{Instance, ObjectiveKind};

use super::model::{MilpModel, ModelForm, Sense};
use super::umfs::{volume_terms, welfare_terms};
use super::BuildError;

/// Replaces the objective of `model`.
///
/// Welfare and volume are maximized; opportunity cost `sum_j d^r_j` is
/// minimized and needs the `d^r` columns, so it is refused on PCR-FS.
pub fn set_objective(
    mut model: MilpModel,
    instance: &Instance,
    kind: ObjectiveKind,
) -> Result<MilpModel, BuildError> {
    let terms = match kind {
        ObjectiveKind::Welfare => welfare_terms(&model, instance),
        ObjectiveKind::Volume => volume_terms(&model, instance),
        ObjectiveKind::MinOpportunityCost => {
            if matches!(model.form, ModelForm::PcrFs | ModelForm::Primal) {
                return Err(BuildError::MinOcNeedsOpportunityColumns);
            }
            model
                .roles
                .block_opportunity_bound
                .iter()
                .map(|c| (c.expect("UMFS keeps d^r"), 1.0))
                .collect()
        }
    };
    model.clear_objective();
    for (c, a) in terms {
        model.columns[c.0].cost += a;
    }
    model.sense = if kind.maximizes() {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    model.objective = Some(kind);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_market;
    use crate::milp_builder::{build_umfs, restrict_to_pcr};

    #[test]
    fn min_oc_refused_on_pcr_fs() {
        let inst = toy_market();
        let m = restrict_to_pcr(build_umfs(&inst).unwrap()).unwrap();
        assert!(matches!(
            set_objective(m, &inst, ObjectiveKind::MinOpportunityCost),
            Err(BuildError::MinOcNeedsOpportunityColumns)
        ));
    }

    #[test]
    fn senses() {
        let inst = toy_market();
        let m = build_umfs(&inst).unwrap();
        let w = set_objective(m.clone(), &inst, ObjectiveKind::Welfare).unwrap();
        assert_eq!(w.sense, Sense::Maximize);
        let oc = set_objective(m, &inst, ObjectiveKind::MinOpportunityCost).unwrap();
        assert_eq!(oc.sense, Sense::Minimize);
        assert_eq!(oc.columns.iter().filter(|c| c.cost != 0.0).count(), 2);
    }
}
