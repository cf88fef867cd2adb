//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Exits nonzero when any
//! criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use pcr_clearing::cli::run_with;
use pcr_clearing::core_model::{ClearingSolution, Instance, MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, decomposition_residual, staged, ClearingRequest};
use pcr_clearing::fixtures::toy_market;
use pcr_clearing::instance_io::{generate, read_solution, GeneratorConfig};
use pcr_clearing::milp_builder::build_market_model;
use pcr_clearing::oracle::{compare, enumerate, SelectionOracleResult};
use pcr_clearing::solver_backend::SolveOptions;
use pcr_clearing::verifier::{verify_equilibrium, verify_mic_income, Family, Tolerances};

const SUITE_SIZE: u64 = 100;
const RULES: [MarketRules; 2] = [MarketRules::Pcr, MarketRules::Umfs];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6
}

/// One oracle-suite instance with its MILP solutions, indexed by
/// `[rules][objective]` in `RULES` and `ObjectiveKind::ALL` order.
struct SuiteCase {
    seed: u64,
    instance: Instance,
    oracle: Vec<SelectionOracleResult>,
    solutions: Vec<Vec<ClearingSolution>>,
}

impl SuiteCase {
    fn solution(&self, rules: MarketRules, objective: ObjectiveKind) -> &ClearingSolution {
        let r = RULES.iter().position(|x| *x == rules).unwrap();
        let o = ObjectiveKind::ALL.iter().position(|x| *x == objective).unwrap();
        &self.solutions[r][o]
    }
}

// ---------------------------------------------------------------- 1

fn toy_reproduction() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("toy.toml");
    let mut details = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for (objective, expect) in [
        ("welfare", [Some(450.0), Some(10.0), Some(50.0), Some(800.0)]),
        ("volume", [Some(440.0), Some(20.0), Some(10.0), Some(50.0)]),
        ("min-oc", [None, None, None, Some(50.0)]),
    ] {
        let out_dir = dir.path().join(objective);
        let argv = [
            "pcr-clear",
            "clear",
            "--objective",
            objective,
            "--rules",
            "pcr",
            toy.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ];
        let mut out = Vec::new();
        let mut err = Vec::new();
        let started = Instant::now();
        let code = run_with(argv, &mut out, &mut err);
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        if code != 0 {
            ok = false;
            details.push(format!("{objective}: exit {code}: {}", String::from_utf8_lossy(&err)));
            continue;
        }
        let file = read_solution(out_dir.join("solution.toml")).expect("solution file");
        let s = &file.solution;
        let got = [s.welfare, s.traded_volume, s.prices[0][0], s.total_opportunity_cost];
        let matches = expect
            .iter()
            .zip(got)
            .all(|(e, g)| e.map_or(true, |e| close(e, g)));
        ok &= matches && elapsed < Duration::from_secs(1);
        details.push(format!(
            "{objective}: W={} V={} price={} OC={} ({:.0} ms)",
            got[0],
            got[1],
            got[2],
            got[3],
            elapsed.as_secs_f64() * 1e3
        ));
    }
    details.push(format!("slowest run {:.0} ms", slowest.as_secs_f64() * 1e3));
    verdict(ok, details.join("; "))
}

// ---------------------------------------------------------------- 2

fn build_suite() -> Result<(Vec<SuiteCase>, Duration), String> {
    let started = Instant::now();
    let mut cases = Vec::new();
    for seed in 1..=SUITE_SIZE {
        let cfg = GeneratorConfig::small_random(seed);
        let instance = generate(&cfg);
        let net = &instance.network;
        if instance.hourly_bids.len() > 20
            || instance.block_bids.len() > 6
            || instance.mic_bids.len() > 2
            || net.num_locations() != 2
            || net.num_periods() != 2
            || net.atc.is_none()
        {
            return Err(format!("seed {seed}: instance outside the suite envelope"));
        }
        let mut oracle = Vec::new();
        let mut solutions = Vec::new();
        for rules in RULES {
            oracle.push(enumerate(&instance, rules).map_err(|e| format!("seed {seed}: oracle: {e}"))?);
            let mut per_rule = Vec::new();
            for objective in ObjectiveKind::ALL {
                let sol = clear(&instance, &ClearingRequest::new(objective, rules))
                    .map_err(|e| format!("seed {seed} {rules} {objective}: {e}"))?;
                per_rule.push(sol);
            }
            solutions.push(per_rule);
        }
        cases.push(SuiteCase {
            seed,
            instance,
            oracle,
            solutions,
        });
    }
    Ok((cases, started.elapsed()))
}

fn oracle_equivalence(suite: &[SuiteCase], elapsed: Duration) -> Verdict {
    let mut mismatches = Vec::new();
    let mut checks = 0;
    for case in suite {
        for (r, rules) in RULES.iter().enumerate() {
            for objective in ObjectiveKind::ALL {
                checks += 1;
                let cc = compare(&case.oracle[r], objective, case.solution(*rules, objective));
                if !cc.passed {
                    mismatches.push(format!(
                        "seed {} {rules} {objective}: oracle {} milp {}",
                        case.seed, cc.oracle_value, cc.milp_value
                    ));
                }
            }
        }
    }
    let within_time = elapsed < Duration::from_secs(600);
    let mut detail = format!(
        "{checks} comparisons, {} mismatches, {:.1} s",
        mismatches.len(),
        elapsed.as_secs_f64()
    );
    if let Some(m) = mismatches.first() {
        detail.push_str(&format!("; first: {m}"));
    }
    verdict(mismatches.is_empty() && within_time, detail)
}

// ---------------------------------------------------------------- 3

fn mic_exactness(suite: &[SuiteCase]) -> Verdict {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in suite {
        for per_rule in &case.solutions {
            for sol in per_rule {
                if !sol.mic_acceptance.iter().any(|u| *u > 0.5) {
                    continue;
                }
                checked += 1;
                // Residuals are already divided by 1 + F_c.
                let fam = verify_mic_income(&case.instance, sol, 1e-5);
                worst = worst.max(fam.max_residual);
                if !fam.passed {
                    failures.push(format!("seed {} {} {}", case.seed, sol.rules, sol.objective));
                }
            }
        }
    }
    let detail = format!(
        "{checked} solutions with accepted MIC bids, worst scaled residual {worst:.2e}, {} failures",
        failures.len()
    );
    if checked == 0 {
        return verdict(false, format!("{detail}; no accepted MIC bid in the suite"));
    }
    verdict(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- 4

fn surplus_properties(suite: &[SuiteCase]) -> Verdict {
    let mut dominance_failures = Vec::new();
    let mut residual_failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in suite {
        let pcr = case.solution(MarketRules::Pcr, ObjectiveKind::Welfare).welfare;
        let umfs = case.solution(MarketRules::Umfs, ObjectiveKind::Welfare).welfare;
        if umfs < pcr - 1e-6 * (1.0 + pcr.abs()) {
            dominance_failures.push(format!("seed {}: umfs {umfs} < pcr {pcr}", case.seed));
        }
        for per_rule in &case.solutions {
            for sol in per_rule {
                let r = decomposition_residual(&case.instance, sol).abs() / (1.0 + sol.welfare.abs());
                worst = worst.max(r);
                if r > 1e-6 {
                    residual_failures.push(format!("seed {} {} {}", case.seed, sol.rules, sol.objective));
                }
            }
        }
    }
    verdict(
        dominance_failures.is_empty() && residual_failures.is_empty(),
        format!(
            "umfs >= pcr on {}/{} instances; worst scaled decomposition residual {worst:.2e}",
            suite.len() - dominance_failures.len(),
            suite.len()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn binary_structure(suite: &[SuiteCase], scale: &Instance) -> Verdict {
    let mut models = 0;
    let mut bad = Vec::new();
    let instances = suite
        .iter()
        .map(|c| (format!("seed {}", c.seed), &c.instance))
        .chain([("scale".to_string(), scale)]);
    let toy = toy_market();
    for (name, inst) in instances.chain([("toy".to_string(), &toy)]) {
        let expected = inst.block_bids.len() + inst.mic_bids.len();
        for rules in RULES {
            for objective in ObjectiveKind::ALL {
                models += 1;
                match build_market_model(inst, rules, objective) {
                    Ok(m) if m.num_binaries() == expected => {}
                    Ok(m) => bad.push(format!("{name} {rules} {objective}: {} != {expected}", m.num_binaries())),
                    Err(e) => bad.push(format!("{name} {rules} {objective}: {e}")),
                }
            }
        }
    }
    let mut detail = format!("{models} models, {} mismatches", bad.len());
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first: {b}"));
    }
    verdict(bad.is_empty(), detail)
}

// ---------------------------------------------------------------- 6

struct Perturbation {
    label: String,
    instance: Instance,
    base: ClearingSolution,
    tampered: ClearingSolution,
    expected: BTreeSet<Family>,
}

fn families(list: &[Family]) -> BTreeSet<Family> {
    list.iter().copied().collect()
}

/// Shifts one price up where both a buyer and a seller trade hourly and no
/// accepted block or MIC bid is exposed. The seller's tight dual row breaks
/// (dual feasibility) and the buyer's executed quantity no longer matches its
/// surplus (complementarity).
fn price_shift(inst: &Instance, sol: &ClearingSolution) -> Option<(String, ClearingSolution)> {
    let net = &inst.network;
    for l in 0..net.num_locations() {
        for t in 0..net.num_periods() {
            let in_cell = |b: &&pcr_clearing::core_model::HourlyBid| b.location == l && b.period == t;
            let traded = |buy: bool| {
                inst.hourly_bids
                    .iter()
                    .zip(&sol.hourly_acceptance)
                    .filter(|(b, _)| in_cell(b) && b.is_buy() == buy)
                    .any(|(_, x)| *x >= 0.1)
            };
            let block_exposed = inst
                .block_bids
                .iter()
                .enumerate()
                .any(|(j, b)| b.location == l && b.powers[t] != 0.0 && sol.block_accepted(j));
            let mic_exposed = inst.mic_bids.iter().enumerate().any(|(c, m)| {
                sol.mic_accepted(c) && m.suborders.iter().any(|s| s.location == l && s.period == t)
            });
            if traded(true) && traded(false) && !block_exposed && !mic_exposed {
                let mut tampered = sol.clone();
                let p = tampered.prices[l][t];
                tampered.prices[l][t] = p + 0.05 * (1.0 + p.abs());
                return Some((format!("price shift at {}/{}", net.locations[l], net.periods[t]), tampered));
            }
        }
    }
    None
}

/// Raises the surplus of a fractionally accepted hourly bid. Its upper-bound
/// complementarity breaks and the dual objective exceeds welfare.
fn fractional_surplus(inst: &Instance, sol: &ClearingSolution) -> Option<(String, ClearingSolution)> {
    let i = sol.hourly_acceptance.iter().position(|x| *x > 0.01 && *x < 0.99)?;
    let mut tampered = sol.clone();
    tampered.hourly_surplus[i] += 0.01 * (1.0 + sol.welfare.abs());
    Some((format!("surplus tamper on fractional bid {}", inst.hourly_bids[i].id), tampered))
}

/// Adds the same amount to `d^a_j` and `s_j` of an accepted block. Every dual
/// row and the dual objective are unchanged; only the no-loss rule breaks.
fn loss_injection(inst: &Instance, sol: &ClearingSolution) -> Option<(String, ClearingSolution)> {
    let j = (0..inst.block_bids.len()).find(|j| sol.block_accepted(*j))?;
    let b = &inst.block_bids[j];
    let delta = 0.01 * (1.0 + (b.total_power() * b.limit_price).abs());
    let mut tampered = sol.clone();
    tampered.block_loss_bound[j] += delta;
    tampered.block_surplus[j] += delta;
    Some((format!("loss injection on accepted block {}", b.id), tampered))
}

fn perturbation_cases(suite: &[SuiteCase]) -> Vec<Perturbation> {
    type Maker = fn(&Instance, &ClearingSolution) -> Option<(String, ClearingSolution)>;
    let kinds: [(Maker, usize, BTreeSet<Family>); 3] = [
        (price_shift, 7, families(&[Family::Dual, Family::Complementarity])),
        (
            fractional_surplus,
            7,
            families(&[Family::Complementarity, Family::ObjectiveEquality]),
        ),
        (loss_injection, 6, families(&[Family::PcrNoLoss])),
    ];
    let mut cases = Vec::new();
    for (make, wanted, expected) in kinds {
        let mut found = 0;
        for case in suite {
            if found == wanted {
                break;
            }
            let base = case.solution(MarketRules::Pcr, ObjectiveKind::Welfare);
            if let Some((label, tampered)) = make(&case.instance, base) {
                found += 1;
                cases.push(Perturbation {
                    label: format!("seed {}: {label}", case.seed),
                    instance: case.instance.clone(),
                    base: base.clone(),
                    tampered,
                    expected: expected.clone(),
                });
            }
        }
    }
    cases
}

fn verifier_sensitivity(suite: &[SuiteCase]) -> Verdict {
    let cases = perturbation_cases(suite);
    let tol = Tolerances::default();
    let mut wrong = Vec::new();
    for c in &cases {
        if !verify_equilibrium(&c.instance, &c.base, &tol).passed {
            wrong.push(format!("{}: base solution does not verify", c.label));
            continue;
        }
        let report = verify_equilibrium(&c.instance, &c.tampered, &tol);
        let flagged: BTreeSet<Family> = report.failed_families().into_iter().collect();
        if flagged != c.expected {
            wrong.push(format!("{}: flagged {:?}, expected {:?}", c.label, flagged, c.expected));
        }
    }
    let mut detail = format!("{} cases, {} with unexpected families", cases.len(), wrong.len());
    if let Some(w) = wrong.first() {
        detail.push_str(&format!("; first: {w}"));
    }
    verdict(cases.len() == 20 && wrong.is_empty(), detail)
}

// ---------------------------------------------------------------- 7

fn scale_smoke(instance: &Instance, generated_in: Duration) -> Verdict {
    let started = Instant::now();
    let mut options = SolveOptions::default().with_time_limit(Duration::from_secs(540));
    options.relative_gap_target = 0.002;
    let request = ClearingRequest::default().with_options(options).with_stage_budgets([
        Duration::from_secs(150),
        Duration::from_secs(90),
        Duration::from_secs(240),
    ]);
    let sol = match staged(instance, &request) {
        Ok(s) => s,
        Err(e) => return verdict(false, format!("staged clearing failed: {e}")),
    };
    let report = verify_equilibrium(instance, &sol, &Tolerances::default());
    let elapsed = generated_in + started.elapsed();
    let stages = &sol.diagnostics.stages;
    let stage = |name: &str| stages.iter().find(|s| s.name == name).map(|s| s.objective);
    let second = stage("block_selection").unwrap_or(f64::NAN);
    let last = stage("full").unwrap_or(f64::NAN);
    // A stage without incumbent imposes nothing.
    let monotone = second.is_nan() || last >= second - 1e-9 * (1.0 + second.abs());
    let abs_gap = sol.solver_gap * sol.welfare.abs().max(1.0);
    let passed = sol.solver_gap <= 0.002 && elapsed <= Duration::from_secs(600) && monotone && report.passed;
    verdict(
        passed,
        format!(
            "welfare {:.2}, relative gap {:.4}% (absolute {:.2}), stage 2 {:.2}, final {:.2}, verification {}, {:.1} s",
            sol.welfare,
            sol.solver_gap * 100.0,
            abs_gap,
            second,
            last,
            if report.passed { "passed" } else { "failed" },
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn trade_offs(suite: &[SuiteCase]) -> Verdict {
    let mut volume_seed = None;
    let mut oc_seed = None;
    for case in suite {
        for rules in RULES {
            let w = case.solution(rules, ObjectiveKind::Welfare);
            let v = case.solution(rules, ObjectiveKind::Volume);
            let o = case.solution(rules, ObjectiveKind::MinOpportunityCost);
            if volume_seed.is_none() && v.traded_volume > w.traded_volume + 1e-6 {
                volume_seed = Some(format!("seed {} ({rules}): {} > {}", case.seed, v.traded_volume, w.traded_volume));
            }
            if oc_seed.is_none() && o.total_opportunity_cost < w.total_opportunity_cost - 1e-6 {
                oc_seed = Some(format!(
                    "seed {} ({rules}): {} < {}",
                    case.seed, o.total_opportunity_cost, w.total_opportunity_cost
                ));
            }
        }
    }
    let toy = toy_market();
    let toy_case = || -> Result<(f64, f64, f64, f64), String> {
        let run = |k| clear(&toy, &ClearingRequest::new(k, MarketRules::Pcr)).map_err(|e| e.to_string());
        let w = run(ObjectiveKind::Welfare)?;
        let v = run(ObjectiveKind::Volume)?;
        let o = run(ObjectiveKind::MinOpportunityCost)?;
        Ok((v.traded_volume, w.traded_volume, o.total_opportunity_cost, w.total_opportunity_cost))
    };
    let mut parts = Vec::new();
    let mut ok = true;
    let fallback = if volume_seed.is_none() || oc_seed.is_none() {
        match toy_case() {
            Ok(t) => Some(t),
            Err(e) => return verdict(false, format!("toy fallback failed: {e}")),
        }
    } else {
        None
    };
    match (&volume_seed, fallback) {
        (Some(s), _) => parts.push(format!("volume: {s}")),
        (None, Some((v, w, _, _))) => {
            ok &= v > w + 1e-6;
            parts.push(format!("volume: none in suite, toy {v} > {w}"));
        }
        (None, None) => unreachable!(),
    }
    match (&oc_seed, fallback) {
        (Some(s), _) => parts.push(format!("opportunity cost: {s}")),
        (None, Some((_, _, o, w))) => {
            ok &= o < w - 1e-6;
            parts.push(format!("opportunity cost: none in suite, toy {o} < {w}"));
        }
        (None, None) => unreachable!(),
    }
    verdict(ok, parts.join("; "))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    results.push((1, "toy reproduction", toy_reproduction()));

    let scale_started = Instant::now();
    let scale = generate(&GeneratorConfig::scale(1));
    let scale_generated = scale_started.elapsed();

    match build_suite() {
        Ok((suite, elapsed)) => {
            results.push((2, "oracle equivalence", oracle_equivalence(&suite, elapsed)));
            results.push((3, "MIC linearization exactness", mic_exactness(&suite)));
            results.push((4, "surplus properties", surplus_properties(&suite)));
            results.push((5, "binary count", binary_structure(&suite, &scale)));
            results.push((6, "verifier sensitivity", verifier_sensitivity(&suite)));
            results.push((7, "scale smoke test", scale_smoke(&scale, scale_generated)));
            results.push((8, "trade-off existence", trade_offs(&suite)));
        }
        Err(e) => {
            for (id, name) in [
                (2, "oracle equivalence"),
                (3, "MIC linearization exactness"),
                (4, "surplus properties"),
                (5, "binary count"),
                (6, "verifier sensitivity"),
                (8, "trade-off existence"),
            ] {
                results.push((id, name, verdict(false, format!("suite construction failed: {e}"))));
            }
            results.push((7, "scale smoke test", scale_smoke(&scale, scale_generated)));
            results.sort_by_key(|r| r.0);
        }
    }

    let mut failed = 0;
    for (id, name, v) in &results {
        if !v.passed {
            failed += 1;
        }
        println!("{} [{id}] {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
