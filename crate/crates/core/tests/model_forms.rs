//! The merged PCR-FS dispatcher rows and the explicit `d^r`/`du^r` columns
//! with `d^a = 0` describe the same feasible selections.

use pcr_clearing::core_model::{Instance, ObjectiveKind};
use pcr_clearing::fixtures::{mic_market, pab_market, toy_market};
use pcr_clearing::instance_io::{generate, GeneratorConfig};
use pcr_clearing::milp_builder::{
    add_mic_constraints, build_umfs, forbid_paradoxical_acceptance, restrict_to_pcr, set_objective,
};
use pcr_clearing::solver_backend::{backend_from_name, solve_mip_with, SolveOptions, SolveStatus};

fn optimum(instance: &Instance, merged: bool, objective: ObjectiveKind) -> f64 {
    let base = add_mic_constraints(build_umfs(instance).unwrap(), instance);
    let model = if merged {
        restrict_to_pcr(base).unwrap()
    } else {
        forbid_paradoxical_acceptance(base).unwrap()
    };
    let model = set_objective(model, instance, objective).unwrap();
    let backend = backend_from_name("highs").unwrap();
    let out = solve_mip_with(backend.as_ref(), &model, &SolveOptions::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    out.objective
}

fn assert_same(instance: &Instance, label: &str) {
    for objective in [ObjectiveKind::Welfare, ObjectiveKind::Volume] {
        let merged = optimum(instance, true, objective);
        let explicit = optimum(instance, false, objective);
        assert!(
            (merged - explicit).abs() <= 1e-6 * (1.0 + merged.abs()),
            "{label} {objective}: merged {merged} explicit {explicit}"
        );
    }
}

#[test]
fn fixtures_agree() {
    assert_same(&toy_market(), "toy");
    assert_same(&pab_market(), "pab");
    for f in [0.0, 150.0, 400.0, 5000.0] {
        assert_same(&mic_market(f), &format!("mic F={f}"));
    }
}

#[test]
fn generated_instances_agree() {
    for seed in 1..=25 {
        assert_same(&generate(&GeneratorConfig::small_random(seed)), &format!("seed {seed}"));
    }
}
