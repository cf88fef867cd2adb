use pcr_clearing::core_model::{ClearingSolution, Instance};
use pcr_clearing::fixtures::toy_market;
use pcr_clearing::instance_io::{
    generate, parse, parse_str, prices_csv, read_solution, report_string, serialize,
    write_solution, GeneratorConfig, IoError,
};
use pcr_clearing::verifier::{verify_equilibrium, Tolerances};
use proptest::prelude::*;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn shipped_toy_fixture_matches_builtin() {
    let inst = parse(fixture("toy.toml")).unwrap();
    assert_eq!(inst.hourly_bids.len(), 2);
    assert_eq!(inst.block_bids.len(), 2);
    assert_eq!(inst.network.num_locations(), 1);
    assert_eq!(inst.network.num_periods(), 1);
    assert_eq!(inst, toy_market());
}

#[test]
fn buy_suborder_is_named() {
    let text = r#"
format_version = 1
[meta]
price_cap = 100.0
[network]
locations = ["L1"]
periods = ["T1"]
[[mic_bids]]
id = "plant"
fixed_cost = 10.0
suborders = [
  { location = "L1", period = "T1", power = -5.0, limit_price = 1.0 },
  { location = "L1", period = "T1", power = 5.0, limit_price = 2.0 },
]
"#;
    let err = parse_str(text).unwrap_err();
    assert!(matches!(err, IoError::Invalid(_)));
    let msg = err.to_string();
    assert!(msg.contains("plant") && msg.contains("suborder 1"), "{msg}");
}

#[test]
fn missing_field_reports_the_field() {
    let text = serialize(&toy_market()).replace("price_cap = 500.0\n", "");
    let msg = parse_str(&text).unwrap_err().to_string();
    assert!(msg.contains("price_cap"), "{msg}");
}

#[test]
fn empty_instance_solution_has_zero_aggregates() {
    let cfg = GeneratorConfig {
        hourly_bids: 0,
        block_bids: 0,
        mic_bids: 0,
        ..Default::default()
    };
    let inst = generate(&cfg);
    let sol = ClearingSolution::zeros(&inst, 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.toml");
    write_solution(&inst, &sol, None, &path).unwrap();
    let back = read_solution(&path).unwrap();
    assert_eq!(back.summary.welfare, 0.0);
    assert_eq!(back.summary.traded_volume, 0.0);
    assert_eq!(back.summary.total_opportunity_cost, 0.0);
    assert_eq!(back.solution, sol);
    let csv = std::fs::read_to_string(dir.path().join("sol.prices.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn failing_report_lists_residual_under_family() {
    let inst = toy_market();
    // All-rejected point priced above the cap.
    let sol = ClearingSolution::zeros(&inst, 600.0);
    let report = verify_equilibrium(&inst, &sol, &Tolerances::default());
    assert!(!report.passed);
    let text = report_string(&report);
    let table: toml::Table = toml::from_str(&text).unwrap();
    let families = table["families"].as_array().unwrap();
    let price = families
        .iter()
        .find(|f| f["family"].as_str() == Some("price-range"))
        .unwrap();
    assert_eq!(price["passed"].as_bool(), Some(false));
    assert!(price["max_residual"].as_float().unwrap() > 0.0);
}

#[test]
fn toy_price_row() {
    let inst = toy_market();
    let sol = ClearingSolution::zeros(&inst, 50.0);
    assert!(prices_csv(&inst, &sol).lines().any(|l| l == "L1,T1,50.0"));
}

fn small_config() -> impl Strategy<Value = GeneratorConfig> {
    (any::<u64>(), 0usize..12, 0usize..4, 0usize..3, 1usize..4, 1usize..4).prop_map(
        |(seed, h, b, m, l, t)| GeneratorConfig {
            seed,
            hourly_bids: h,
            block_bids: b,
            mic_bids: m,
            locations: l,
            periods: t,
            ..GeneratorConfig::default()
        },
    )
}

fn abstract_form(mut inst: Instance) -> Instance {
    inst.network.atc = None;
    inst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_serialize_round_trip(cfg in small_config(), as_abstract in any::<bool>(), jitter in -1.0f64..1.0) {
        let mut inst = generate(&cfg);
        if as_abstract {
            inst = abstract_form(inst);
        }
        // Full-precision floats must survive as well.
        if let Some(b) = inst.hourly_bids.first_mut() {
            b.limit_price = (b.limit_price + jitter / 3.0).clamp(-inst.price_cap, inst.price_cap);
        }
        let text = serialize(&inst);
        let back = parse_str(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn generated_instances_are_valid(cfg in small_config()) {
        let inst = generate(&cfg);
        prop_assert!(inst.validate().is_ok());
        let sol = ClearingSolution::zeros(&inst, 0.0);
        let report = verify_equilibrium(&inst, &sol, &Tolerances::default());
        prop_assert!(report.family(pcr_clearing::verifier::Family::Primal).unwrap().passed);
    }
}
